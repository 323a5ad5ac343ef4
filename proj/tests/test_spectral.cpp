#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "phispline/spectral.hpp"

using namespace phispline;

namespace {

const SpherePoint pole({0.2, 0.3, 0.93});

std::vector<double> unit(int n, int len, double c = 1.0) {
  std::vector<double> v(static_cast<std::size_t>(len), 0.0);
  v[n] = c;
  return v;
}

SphereSeriesKernel kernel(int n_max) { return SphereSeriesKernel::power_law(2, 2.0, 1.0, n_max); }

}  // namespace

TEST(ZonalExpansion, ConstantAndPoleValue) {
  ZonalExpansion one(pole, {1.0, 0.0, 0.0});
  SpherePoint x({-0.4, 0.1, 0.2});
  EXPECT_NEAR(zonal_eval(one, x), 1.0, 1e-15);
  ZonalExpansion five(pole, unit(5, 6));
  EXPECT_NEAR(zonal_eval(five, pole), 11.0, 1e-12);
}

TEST(ZonalExpansion, KernelCoefficientsReproduceKernel) {
  const auto k = kernel(30);
  ZonalExpansion f(pole, std::vector<double>(k.coeffs().begin(), k.coeffs().end()));
  SpherePoint x({-0.4, 0.1, 0.2});
  EXPECT_NEAR(zonal_eval(f, x), kernel_eval(Kernel(k), x, pole), 1e-13);
}

TEST(HphiNorm, Examples) {
  const auto k = kernel(30);
  ZonalExpansion own(pole, std::vector<double>(k.coeffs().begin(), k.coeffs().end()));
  EXPECT_NEAR(hphi_norm_sq(own, k), k.value_at_zero(), 1e-12);
  ZonalExpansion zero(pole, std::vector<double>(31, 0.0));
  EXPECT_EQ(hphi_norm_sq(zero, k), 0.0);
  ZonalExpansion single(pole, unit(7, 8));
  EXPECT_NEAR(hphi_norm_sq(single, k), 15.0 / k.coeffs()[7], 1e-9);
}

TEST(HphiNorm, RejectsModesAboveKernelTruncation) {
  ZonalExpansion f(pole, unit(12, 13));
  EXPECT_THROW(hphi_norm_sq(f, kernel(10)), DomainError);
}

TEST(HlambdaphiNorm, Examples) {
  const auto k = kernel(20);
  ZonalExpansion f(pole, unit(3, 4));
  const auto sym = PseudoDiffSymbol::assumption(2, 1.0, 20);
  EXPECT_DOUBLE_EQ(sym[3], 9.0);
  const double expected = 7.0 / ((9.0 * k.coeffs()[3]) * (9.0 * k.coeffs()[3]));
  EXPECT_NEAR(hlambdaphi_norm_sq(f, k, sym), expected, 1e-12 * expected);
  const auto id = PseudoDiffSymbol::identity(20);
  EXPECT_NEAR(hlambdaphi_norm_sq(f, k, id), 7.0 / (k.coeffs()[3] * k.coeffs()[3]), 1e-9);
  ZonalExpansion zero(pole, std::vector<double>(5, 0.0));
  EXPECT_EQ(hlambdaphi_norm_sq(zero, k, sym), 0.0);
}

TEST(HlambdaphiNorm, MeanComponentIsAnError) {
  const auto k = kernel(20);
  ZonalExpansion f(pole, {1.0, 0.5});
  try {
    hlambdaphi_norm_sq(f, k, PseudoDiffSymbol::assumption(2, 0.5, 20));
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("mean component not annihilated"), std::string::npos);
  }
}

TEST(PseudoDiffSymbol, AssumptionRule) {
  const auto sym = PseudoDiffSymbol::assumption(3, 0.5, 10);
  EXPECT_EQ(sym[0], 0.0);
  EXPECT_NEAR(sym[5], std::sqrt(5.0 * 6.0), 1e-15);
  for (int n = 1; n <= 10; ++n) EXPECT_GE(sym[n], sym[n - 1]);
  EXPECT_THROW(PseudoDiffSymbol::assumption(2, 0.0, 10), DomainError);
}

TEST(ApplyPseudodiff, Examples) {
  SpherePoint x({-0.4, 0.1, 0.2});
  ZonalExpansion f(pole, {0.3, -0.2, 0.5, 0.1});
  const auto same = apply_pseudodiff(PseudoDiffSymbol::identity(3), f);
  EXPECT_NEAR(zonal_eval(same, x), zonal_eval(f, x), 1e-12);
  ZonalExpansion constant(pole, {2.0});
  EXPECT_EQ(zonal_eval(apply_pseudodiff(PseudoDiffSymbol::assumption(2, 1.0, 0), constant), x), 0.0);
  ZonalExpansion five(pole, unit(5, 6));
  const double lam5 = std::pow(5.0 * 5.0, 0.75);
  EXPECT_NEAR(zonal_eval(apply_pseudodiff(PseudoDiffSymbol::assumption(2, 0.75, 5), five), x),
              lam5 * gegenbauer_addition(2, 5, dot(x.coords(), pole.coords())), 1e-10);
}

TEST(ApplyPseudodiff, LinearityOnInterpolants) {
  const Kernel k = kernel(40);
  const auto Y = generate_points(Domain::sphere(2), Generator::fibonacci_sphere, 40);
  std::vector<double> f(Y.size()), g(Y.size()), h(Y.size());
  for (std::size_t i = 0; i < Y.size(); ++i) {
    f[i] = Y[i][0];
    g[i] = Y[i][1] * Y[i][2];
    h[i] = 2.0 * f[i] - 3.0 * g[i];
  }
  const auto sym = PseudoDiffSymbol::assumption(2, 0.5, 40);
  const auto lf = apply_pseudodiff(sym, build_interpolant(k, Y, f));
  const auto lg = apply_pseudodiff(sym, build_interpolant(k, Y, g));
  const auto lh = apply_pseudodiff(sym, build_interpolant(k, Y, h));
  const auto grid = generate_points(Domain::sphere(2), Generator::fibonacci_sphere, 300);
  const auto a = lf.evaluate_many(grid), b = lg.evaluate_many(grid), c = lh.evaluate_many(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(c[i], 2.0 * a[i] - 3.0 * b[i], 1e-10);
}

TEST(Quadrature, MeasureAndExactness) {
  const auto q = SphereQuadrature::for_degree(30);
  EXPECT_EQ(q.exact_degree(), 61);
  double w = 0.0;
  for (double v : q.weights()) w += v;
  EXPECT_NEAR(w, 1.0, 1e-13);
  // int z^2 dnu = 1/3, int x^4 dnu = 1/5, int x y dnu = 0
  std::vector<double> z2, x4, xy;
  for (std::size_t i = 0; i < q.nodes().size(); ++i) {
    const auto p = q.nodes()[i];
    z2.push_back(p[2] * p[2]);
    x4.push_back(std::pow(p[0], 4));
    xy.push_back(p[0] * p[1]);
  }
  EXPECT_NEAR(q.integrate(z2), 1.0 / 3.0, 1e-14);
  EXPECT_NEAR(q.integrate(x4), 1.0 / 5.0, 1e-14);
  EXPECT_NEAR(q.integrate(xy), 0.0, 1e-15);
}

TEST(L2Norm, Examples) {
  const auto q = SphereQuadrature::for_degree(20);
  ZonalExpansion one(pole, {1.0});
  EXPECT_NEAR(l2_norm(one, q), 1.0, 1e-13);
  for (int n : {3, 10, 20}) {
    ZonalExpansion g(pole, unit(n, n + 1));
    EXPECT_NEAR(l2_norm(g, q), std::sqrt(2.0 * n + 1), 1e-10);
  }
  std::vector<double> c(21, 0.0);
  c[4] = 1.0;
  c[17] = 1.0;
  EXPECT_NEAR(l2_norm(ZonalExpansion(pole, c), q), std::sqrt(9.0 + 35.0), 1e-10);
}

TEST(L2Norm, ModeOrthogonalityUnderQuadrature) {
  const auto q = SphereQuadrature::for_degree(25);
  SpherePoint other({0.9, -0.1, 0.2});
  for (int n = 0; n <= 25; n += 5)
    for (int m = 0; m <= 25; m += 5) {
      const auto a = ZonalExpansion(pole, unit(n, n + 1)).evaluate_many(q.nodes());
      const auto b = ZonalExpansion(other, unit(m, m + 1)).evaluate_many(q.nodes());
      std::vector<double> ab(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) ab[i] = a[i] * b[i];
      // <C~_n(.x), C~_m(.y)> = delta_nm C~_n(x.y)
      const double expected = n == m ? gegenbauer_addition(2, n, dot(pole.coords(), other.coords())) : 0.0;
      EXPECT_NEAR(q.integrate(ab), expected, 1e-9);
    }
}

TEST(SupError, Examples) {
  const auto grid = generate_points(Domain::sphere(2), Generator::fibonacci_sphere, 100);
  ZonalExpansion c(pole, {-2.5});
  EXPECT_NEAR(sup_error(c, grid), 2.5, 1e-15);
  EXPECT_EQ(sup_error(ZonalExpansion(pole, {0.0}), grid), 0.0);
  PointSet empty(Metric::sphere_geodesic, 3);
  EXPECT_THROW(sup_error(c, empty), DomainError);
}

TEST(NormComparison, Examples) {
  const auto q = SphereQuadrature::for_degree(30);
  const auto zero = norm_comparison_check(ZonalExpansion(pole, std::vector<double>(5, 0.0)), 4, q);
  EXPECT_EQ(zero.lhs, 0.0);
  EXPECT_EQ(zero.rhs, 0.0);
  const auto c0 = norm_comparison_check(ZonalExpansion(pole, {1.0}), 0, q);
  EXPECT_NEAR(c0.lhs, 1.0, 1e-13);
  EXPECT_NEAR(c0.rhs, 1.0, 1e-13);
  const auto m4 = norm_comparison_check(ZonalExpansion(pole, unit(4, 5)), 4, q);
  EXPECT_NEAR(m4.lhs, 9.0, 1e-12);
  EXPECT_NEAR(m4.rhs, 9.0, 1e-10);
}

TEST(NormComparison, HoldsForRotatedCombinations) {
  const auto q = SphereQuadrature::for_degree(30);
  const auto grid = generate_points(Domain::sphere(2), Generator::fibonacci_sphere, 20000);
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss;
  ZonalSum g(2);
  std::vector<double> flat, weights;
  for (int i = 0; i < 6; ++i) {
    SpherePoint p({gauss(rng), gauss(rng), gauss(rng)});
    flat.insert(flat.end(), p.coords().begin(), p.coords().end());
    weights.push_back(gauss(rng));
  }
  std::vector<double> profile(31);
  for (int n = 0; n <= 30; ++n) profile[n] = 1.0 / (1.0 + n);
  g.add({profile, PointSet(Metric::sphere_geodesic, 3, flat), weights});
  for (int n = 0; n <= 30; ++n) {
    const auto r = norm_comparison_check(g, n, q, grid);
    EXPECT_LE(r.lhs, r.rhs * (1 + 1e-6)) << "n=" << n;
  }
}

TEST(ZonalSum, ModeEnergiesMatchDirectPairSums) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  std::vector<double> flat, w;
  std::vector<SpherePoint> pts;
  for (int i = 0; i < 9; ++i) {
    pts.emplace_back(std::vector<double>{gauss(rng), gauss(rng), gauss(rng)});
    flat.insert(flat.end(), pts.back().coords().begin(), pts.back().coords().end());
    w.push_back(gauss(rng));
  }
  std::vector<double> b(13);
  for (int n = 0; n <= 12; ++n) b[n] = std::pow(1.0 + n, -1.5);
  ZonalSum g(2);
  g.add({b, PointSet(Metric::sphere_geodesic, 3, flat), w});
  const auto e = g.mode_energies();
  for (int n = 0; n <= 12; ++n) {
    double direct = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k)
      for (std::size_t l = 0; l < pts.size(); ++l)
        direct += w[k] * w[l] * gegenbauer_addition(2, n, std::clamp(dot(pts[k].coords(), pts[l].coords()), -1.0, 1.0));
    EXPECT_NEAR(e[n], b[n] * b[n] * direct, 1e-11 * (1 + std::abs(direct)));
  }
  // Parseval against quadrature
  const auto q = SphereQuadrature::for_degree(12);
  double total = 0.0;
  for (double v : e) total += v;
  const double l2 = l2_norm(g, q);
  EXPECT_NEAR(l2 * l2, total, 1e-10 * total);
}

TEST(SpectralNorm, AgreesWithQuadraticForm) {
  const auto k = kernel(80);
  const auto Y = generate_points(Domain::sphere(2), Generator::fibonacci_sphere, 100);
  std::vector<double> f(Y.size());
  for (std::size_t i = 0; i < Y.size(); ++i) f[i] = std::cos(3 * Y[i][0]) + Y[i][2];
  const auto s = build_interpolant(Kernel(k), Y, f);
  const double quad = native_norm_sq(s);
  EXPECT_NEAR(spectral_native_norm_sq(s), quad, 1e-7 * quad);
}

TEST(SpectralPythagoras, BandlimitedTargetDefectIsTiny) {
  const auto k = kernel(60);
  std::vector<double> c(16);
  for (int n = 0; n <= 15; ++n) c[n] = ((n % 2) ? -1.0 : 1.0) / (1.0 + n);
  ZonalExpansion target(pole, c);
  const auto Y = generate_points(Domain::sphere(2), Generator::fibonacci_sphere, 80);
  const auto s = build_interpolant(Kernel(k), Y, target.evaluate_many(Y));
  const auto r = pythagoras_check(target, s);
  const double fn = hphi_norm_sq(target, k);
  EXPECT_GT(r.residual_norm_sq, 0.0);
  EXPECT_LT(*r.defect, 1e-7 * fn);
}

TEST(ErrorBoundStructure, PseudoSupOverNativeResidualTracksTailSum) {
  // sup|L(f-S)| / ||f-S||_phi against (sum_{n>N} d_n l_n^2 a_n)^{1/2}, N = floor(1/(2h)).
  const int n_max = 200;
  const auto k = kernel(n_max);
  const auto sym = PseudoDiffSymbol::assumption(2, 0.25, n_max);
  std::vector<double> c(31, 0.0);
  for (int n = 1; n <= 30; ++n) c[n] = ((n % 3) ? 1.0 : -1.0) / (1.0 + n);
  const ZonalExpansion f(pole, c);
  const auto candidates = candidate_grid(Domain::sphere(2), 20000);
  const auto grid = generate_points(Domain::sphere(2), Generator::fibonacci_sphere, 4000);
  std::vector<std::pair<double, double>> ratio, tail;
  for (std::size_t m : {200u, 400u, 800u, 1600u}) {
    const auto Y = generate_points(Domain::sphere(2), Generator::fibonacci_sphere, m);
    const double h = fill_distance_on(Y, candidates);
    const auto s = build_interpolant(Kernel(k), Y, f.evaluate_many(Y));
    const ZonalSum residual = ZonalSum(f).plus(to_zonal_sum(s), -1.0);
    const double native = std::sqrt(pythagoras_check(f, s).residual_norm_sq);
    const double sup = sup_error(residual.mode_scaled(sym.values()), grid);
    const int N = static_cast<int>(std::floor(1.0 / (2.0 * h)));
    double t = 0.0;
    for (int n = N + 1; n <= n_max; ++n) t += k.basis().dim(n) * sym[n] * sym[n] * k.coeffs()[n];
    ratio.emplace_back(h, sup / native);
    tail.emplace_back(h, std::sqrt(t));
  }
  auto slope = [](const std::vector<std::pair<double, double>>& pr) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [h, e] : pr) {
      sx += std::log(h);
      sy += std::log(e);
      sxx += std::log(h) * std::log(h);
      sxy += std::log(h) * std::log(e);
    }
    const double m = static_cast<double>(pr.size());
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
  };
  EXPECT_GT(slope(tail), 0.0);
  EXPECT_GE(slope(ratio), slope(tail) - 0.4);
}

TEST(SpectralPythagoras, AddingPointsShrinksResidualNorm) {
  const auto k = kernel(60);
  std::vector<double> c(21, 0.0);
  for (int n = 1; n <= 20; ++n) c[n] = std::pow(1.0 + n, -3.0);
  const ZonalExpansion f(pole, c);
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  auto Y = generate_points(Domain::sphere(2), Generator::fibonacci_sphere, 30);
  double prev = INFINITY;
  for (int step = 0; step < 15; ++step) {
    const auto s = build_interpolant(Kernel(k), Y, f.evaluate_many(Y));
    // ||f - S||^2 from the mode energies of f - S, independent of the Pythagoras route.
    const auto e = ZonalSum(f).plus(to_zonal_sum(s), -1.0).mode_energies();
    double r = 0.0;
    for (std::size_t n = 0; n < e.size(); ++n) r += e[n] / k.coeffs()[n];
    EXPECT_LE(r, prev * (1 + 1e-9));
    EXPECT_LE(native_norm_sq(s), hphi_norm_sq(f, k) * (1 + 1e-12));
    prev = r;
    Y = Y.with_point(SpherePoint({g(rng), g(rng), g(rng)}).coords());
  }
}
