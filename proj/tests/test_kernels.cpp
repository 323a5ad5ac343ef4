#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "phispline/kernels.hpp"

using namespace phispline;

TEST(SphereSeriesKernel, PowerLawCoefficients) {
  const auto k = SphereSeriesKernel::power_law(2, 2.0, 3.0, 10);
  ASSERT_EQ(k.n_max(), 10);
  for (int n = 0; n <= 10; ++n) EXPECT_NEAR(k.coeffs()[n], 3.0 * std::pow(1.0 + n, -4.0), 1e-15);
}

TEST(SphereSeriesKernel, ValueAtZeroIsWeightedDimensionSum) {
  const auto k = SphereSeriesKernel::power_law(2, 2.0, 1.0, 50);
  double s = 0.0;
  for (int n = 0; n <= 50; ++n) s += (2 * n + 1) * std::pow(1.0 + n, -4.0);
  EXPECT_NEAR(k.value_at_zero(), s, 1e-14);
  EXPECT_NEAR(k.profile(1.0), s, 1e-12);
}

TEST(SphereSeriesKernel, AutomaticTruncationMeetsTailTolerance) {
  const auto k = SphereSeriesKernel::power_law(2, 4.0);
  EXPECT_LT(k.relative_tail(), SphereSeriesKernel::tail_tolerance);
  const auto shorter = SphereSeriesKernel::power_law(2, 4.0, 1.0, k.n_max() - 1);
  EXPECT_GE(shorter.relative_tail(), SphereSeriesKernel::tail_tolerance);
}

TEST(SphereSeriesKernel, TailOfSlowLawStaysReportedNotEnforced) {
  const auto k = SphereSeriesKernel::power_law(2, 2.0, 1.0, 300);
  const auto r = validate_kernel(k);
  EXPECT_TRUE(r.admissible);
  EXPECT_FALSE(r.tail_within_tolerance);
  // tail ~ sum_{n>300} 2n n^-4 / phi(0) ~ 1/300^2 / phi(0)
  EXPECT_GT(*r.tail_estimate, 1e-6);
  EXPECT_LT(*r.tail_estimate, 1e-4);
}

TEST(KernelEval, SymmetricAndMatchesSeries) {
  const Kernel k = SphereSeriesKernel::power_law(2, 2.0, 1.0, 30);
  SpherePoint x({0.1, 0.4, 0.9}), y({-0.3, 0.2, 0.8});
  EXPECT_DOUBLE_EQ(kernel_eval(k, x, y), kernel_eval(k, y, x));
  const double t = dot(x.coords(), y.coords());
  double s = 0.0;
  for (int n = 0; n <= 30; ++n) s += std::pow(1.0 + n, -4.0) * gegenbauer_addition(2, n, t);
  EXPECT_NEAR(kernel_eval(k, x, y), s, 1e-13);
}

TEST(KernelEval, EuclidWendlandExample) {
  const Kernel k = EuclidRadialKernel(RadialProfile::wendland(3, 1, 1.0), 3);
  EuclidPoint x({0.0, 0.0, 0.0}), y({0.3, 0.4, 0.0});
  EXPECT_NEAR(kernel_eval(k, x, y), 0.1875, 1e-15);
}

TEST(KernelEval, RejectsMismatchedPoints) {
  const Kernel k = SphereSeriesKernel::power_law(2, 2.0, 1.0, 10);
  EXPECT_THROW(kernel_eval(k, std::vector<double>{1.0, 0.0}, std::vector<double>{0.0, 1.0}), DimensionError);
}

TEST(EuclidRadialKernel, WendlandDimensionMustCoverAmbient) {
  EXPECT_THROW(EuclidRadialKernel(RadialProfile::wendland(1, 1), 2), KernelError);
}

TEST(Validation, NegativeCoefficientIsReported) {
  const Kernel k = SphereSeriesKernel::explicit_list(2, {1.0, 0.5, -0.1, 0.2});
  const auto r = validate_kernel(k);
  EXPECT_FALSE(r.admissible);
  EXPECT_EQ(r.first_nonpositive, 2);
  EXPECT_THROW(require_admissible(k), KernelError);
}

TEST(Validation, SummabilityMargin) {
  const Kernel k = SphereSeriesKernel::power_law(2, 1.0, 1.0, 20);
  const auto r = validate_kernel(k);
  EXPECT_FALSE(r.admissible);
  EXPECT_DOUBLE_EQ(*r.summability_margin, 0.0);
}

TEST(Validation, EuclidSmoothnessMargin) {
  const Kernel ok = EuclidRadialKernel(RadialProfile::matern(1, 2.0), 1);
  EXPECT_TRUE(validate_kernel(ok).admissible);
  EXPECT_DOUBLE_EQ(*validate_kernel(ok).smoothness_margin, 1.5);
  const Kernel rough = EuclidRadialKernel(RadialProfile::matern(1, 0.4), 1);
  EXPECT_FALSE(validate_kernel(rough).admissible);
}

TEST(Config, ParsesPowerLaw) {
  const Kernel k = kernel_from_config(parse_key_values("kind=powerlaw,tau=2.5,A=2,N_max=40"), Domain::sphere(2));
  const auto& s = std::get<SphereSeriesKernel>(k);
  EXPECT_EQ(s.n_max(), 40);
  EXPECT_NEAR(s.coeffs()[1], 2.0 * std::pow(2.0, -5.0), 1e-15);
}

TEST(Config, RoundTripsThroughKeyValues) {
  for (const std::string text : {"kind=powerlaw,tau=2,N_max=25", "kind=list,coeffs=1;0.5;0.25"}) {
    const Kernel k = kernel_from_config(parse_key_values(text), Domain::sphere(2));
    const Kernel back = kernel_from_config(kernel_to_config(k), Domain::sphere(2));
    const auto& a = std::get<SphereSeriesKernel>(k);
    const auto& b = std::get<SphereSeriesKernel>(back);
    ASSERT_EQ(a.n_max(), b.n_max());
    for (int n = 0; n <= a.n_max(); ++n) EXPECT_EQ(a.coeffs()[n], b.coeffs()[n]);
  }
  const Kernel m = kernel_from_config(parse_key_values("kind=matern,m=1,s=2,rho=0.5"), Domain::unit_box(1));
  EXPECT_EQ(kernel_to_config(kernel_from_config(kernel_to_config(m), Domain::unit_box(1))), kernel_to_config(m));
}

TEST(Config, UnknownKeyIsNamed) {
  try {
    kernel_from_config(parse_key_values("kind=powerlaw,tua=2"), Domain::sphere(2));
    FAIL();
  } catch (const KernelError& e) {
    EXPECT_NE(std::string(e.what()).find("tua"), std::string::npos);
  }
}

TEST(Config, UnknownKindIsNamed) {
  try {
    kernel_from_config(parse_key_values("kind=powrlaw"), Domain::sphere(2));
    FAIL();
  } catch (const KernelError& e) {
    EXPECT_NE(std::string(e.what()).find("powrlaw"), std::string::npos);
  }
}

TEST(Config, MaternNeedsExplicitSmoothness) {
  EXPECT_THROW(kernel_from_config(parse_key_values("kind=matern,m=1"), Domain::unit_box(1)), KernelError);
}

TEST(Config, DomainMismatchRejected) {
  EXPECT_THROW(kernel_from_config(parse_key_values("kind=powerlaw"), Domain::unit_box(1)), KernelError);
  EXPECT_THROW(kernel_from_config(parse_key_values("kind=wendland"), Domain::sphere(2)), KernelError);
}

TEST(Config, MalformedItemsRejected) {
  EXPECT_THROW(parse_key_values("tau"), KernelError);
  EXPECT_THROW(parse_key_values("a=1,a=2"), KernelError);
  EXPECT_THROW(kernel_from_config(parse_key_values("kind=powerlaw,tau=abc"), Domain::sphere(2)), KernelError);
}

TEST(KernelEval, SphereKernelIsZonal) {
  const Kernel k = SphereSeriesKernel::power_law(2, 2.0, 1.0, 60);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int i = 0; i < 50; ++i) {
    const SpherePoint x({g(rng), g(rng), g(rng)}), y({g(rng), g(rng), g(rng)});
    // random rotation from a QR step on a Gaussian matrix
    double q[3][3];
    for (auto& row : q)
      for (double& v : row) v = g(rng);
    for (int c = 0; c < 3; ++c) {
      for (int p = 0; p < c; ++p) {
        double d = 0;
        for (int r = 0; r < 3; ++r) d += q[r][c] * q[r][p];
        for (int r = 0; r < 3; ++r) q[r][c] -= d * q[r][p];
      }
      double nrm = 0;
      for (int r = 0; r < 3; ++r) nrm += q[r][c] * q[r][c];
      for (int r = 0; r < 3; ++r) q[r][c] /= std::sqrt(nrm);
    }
    auto rotate = [&](const SpherePoint& p) {
      std::vector<double> out(3, 0.0);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out[r] += q[r][c] * p.coords()[c];
      return SpherePoint(out);
    };
    EXPECT_NEAR(kernel_eval(k, rotate(x), rotate(y)), kernel_eval(k, x, y), 1e-12);
  }
}
