#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>
#include <numbers>
#include <vector>

#include "phispline/geometry.hpp"

using namespace phispline;

TEST(SpherePoint, RenormalizesOnConstruction) {
  SpherePoint p({3.0, 0.0, 4.0});
  EXPECT_NEAR(p.coords()[0], 0.6, 1e-15);
  EXPECT_NEAR(p.coords()[2], 0.8, 1e-15);
  EXPECT_EQ(p.sphere_dim(), 2);
}

TEST(SpherePoint, RejectsZeroVector) { EXPECT_THROW(SpherePoint({0.0, 0.0, 0.0}), Error); }

TEST(EuclidPoint, RejectsNonFinite) { EXPECT_THROW(EuclidPoint({NAN, 1.0}), DomainError); }

TEST(Distance, GeodesicAntipodesIsPi) {
  SpherePoint a({0, 0, 1}), b({0, 0, -1});
  EXPECT_NEAR(geodesic_distance(a, b), std::numbers::pi, 1e-15);
}

TEST(Distance, GeodesicClampsRoundedInnerProduct) {
  SpherePoint a({1, 1e-9, 0});
  EXPECT_EQ(geodesic_distance(a.coords(), a.coords()), 0.0);
}

TEST(Distance, Euclidean345) {
  EuclidPoint a({0.0, 0.0}), b({3.0, 4.0});
  EXPECT_DOUBLE_EQ(euclidean_distance(a, b), 5.0);
}

TEST(PointSet, RejectsDuplicates) {
  EXPECT_THROW(PointSet(Metric::euclidean, 1, {0.1, 0.2, 0.1}), DomainError);
}

TEST(PointSet, RejectsNonUnitSpherePoints) {
  EXPECT_THROW(PointSet(Metric::sphere_geodesic, 3, {1.0, 0.0, 0.1}), DomainError);
}

TEST(PointSet, WithPointAppendsAndChecks) {
  PointSet p(Metric::euclidean, 1, {0.0, 1.0});
  EXPECT_EQ(p.with_point(std::vector<double>{0.5}).size(), 3u);
  EXPECT_THROW(p.with_point(std::vector<double>{1.0}), DomainError);
}

TEST(Generators, FibonacciPointsAreUnitAndDistinct) {
  const auto pts = generate_points(Domain::sphere(2), Generator::fibonacci_sphere, 500);
  ASSERT_EQ(pts.size(), 500u);
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_NEAR(std::sqrt(dot(pts[i], pts[i])), 1.0, 1e-12);
  // Heights are equally spaced: z_i = 1 - (2i+1)/n.
  EXPECT_NEAR(pts[0][2], 1.0 - 1.0 / 500.0, 1e-15);
  EXPECT_NEAR(pts[499][2], -1.0 + 1.0 / 500.0, 1e-15);
}

TEST(Generators, FibonacciRequiresS2) {
  EXPECT_THROW(generate_points(Domain::sphere(3), Generator::fibonacci_sphere, 10), DomainError);
}

TEST(Generators, UniformGridIncludesEndpoints) {
  const auto pts = generate_points(Domain::unit_box(1), Generator::uniform_grid, 5);
  ASSERT_EQ(pts.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(pts[i][0], i / 4.0);
}

TEST(Generators, UniformGridNeedsPerfectPower) {
  EXPECT_THROW(generate_points(Domain::unit_box(2), Generator::uniform_grid, 10), DomainError);
  EXPECT_EQ(generate_points(Domain::unit_box(2), Generator::uniform_grid, 16).size(), 16u);
}

TEST(Generators, RadicalInverseKnownValues) {
  EXPECT_DOUBLE_EQ(detail::radical_inverse(1, 2), 0.5);
  EXPECT_DOUBLE_EQ(detail::radical_inverse(2, 2), 0.25);
  EXPECT_DOUBLE_EQ(detail::radical_inverse(3, 2), 0.75);
  EXPECT_NEAR(detail::radical_inverse(1, 3), 1.0 / 3.0, 1e-16);
  EXPECT_NEAR(detail::radical_inverse(4, 3), 4.0 / 9.0, 1e-16);
}

TEST(Generators, HaltonInBallStaysInside) {
  const Domain ball = Domain::ball({0.0, 0.0}, 0.5);
  const auto pts = generate_points(ball, Generator::halton, 300, 7);
  ASSERT_EQ(pts.size(), 300u);
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_TRUE(ball.contains(pts[i]));
}

namespace {

// Brute-force fill distance over an explicit candidate list.
double brute_fill(const std::vector<std::vector<double>>& ys, const std::vector<std::vector<double>>& xs) {
  double worst = 0.0;
  for (const auto& x : xs) {
    double best = 1e300;
    for (const auto& y : ys) {
      double s = 0.0;
      for (std::size_t a = 0; a < x.size(); ++a) s += (x[a] - y[a]) * (x[a] - y[a]);
      best = std::min(best, std::sqrt(s));
    }
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace

TEST(FillDistance, IntervalGridIsHalfSpacing) {
  const auto Y = generate_points(Domain::unit_box(1), Generator::uniform_grid, 17);
  EXPECT_NEAR(fill_distance(Y, Domain::unit_box(1)), 1.0 / 32.0, 1e-12);
}

TEST(FillDistance, EndpointsOnlyGiveHalf) {
  PointSet Y(Metric::euclidean, 1, {0.0, 1.0});
  EXPECT_NEAR(fill_distance(Y, Domain::unit_box(1)), 0.5, 1e-12);
}

TEST(FillDistance, MatchesBruteForceOnScatteredSquare) {
  const Domain box = Domain::unit_box(2);
  const auto Y = generate_points(box, Generator::halton, 40, 3);
  const auto C = candidate_grid(box, 2000);
  std::vector<std::vector<double>> ys, xs;
  for (std::size_t i = 0; i < Y.size(); ++i) ys.emplace_back(Y[i].begin(), Y[i].end());
  for (std::size_t i = 0; i < C.size(); ++i) xs.emplace_back(C[i].begin(), C[i].end());
  EXPECT_NEAR(fill_distance_on(Y, C), brute_fill(ys, xs), 1e-14);
}

TEST(FillDistance, TwoPolesGiveQuarterCircle) {
  PointSet Y(Metric::sphere_geodesic, 3, {0, 0, 1, 0, 0, -1});
  EXPECT_NEAR(fill_distance(Y, Domain::sphere(2)), std::numbers::pi / 2, 1e-4);
}

TEST(FillDistance, ShrinksUnderRefinement) {
  const Domain s2 = Domain::sphere(2);
  const auto C = candidate_grid(s2, 20000);
  double prev = 10.0;
  for (std::size_t n : {50u, 200u, 800u}) {
    const double h = fill_distance_on(generate_points(s2, Generator::fibonacci_sphere, n), C);
    EXPECT_LT(h, prev);
    prev = h;
  }
}

TEST(FillDistance, RejectsEmptySetAndSmallCandidateGrid) {
  PointSet empty(Metric::euclidean, 1);
  EXPECT_THROW(fill_distance(empty, Domain::unit_box(1)), DomainError);
  PointSet one(Metric::euclidean, 1, {0.5});
  EXPECT_THROW(fill_distance(one, Domain::unit_box(1), 10), DomainError);
}

TEST(Domain, VolumeAndContains) {
  EXPECT_DOUBLE_EQ(Domain::unit_box(3).volume(), 1.0);
  EXPECT_NEAR(Domain::ball({0.0, 0.0}, 1.0).volume(), std::numbers::pi, 1e-14);
  EXPECT_TRUE(Domain::sphere(2).contains(std::vector<double>{0, 1, 0}));
  EXPECT_FALSE(Domain::unit_box(1).contains(std::vector<double>{1.5}));
}

TEST(Distance, GeodesicIsSymmetricAndSatisfiesTriangleInequality) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  auto random_point = [&] { return SpherePoint({g(rng), g(rng), g(rng)}); };
  for (int i = 0; i < 2000; ++i) {
    const auto x = random_point(), y = random_point(), z = random_point();
    const double xy = distance(Metric::sphere_geodesic, x.coords(), y.coords());
    EXPECT_NEAR(xy, distance(Metric::sphere_geodesic, y.coords(), x.coords()), 1e-15);
    EXPECT_LE(distance(Metric::sphere_geodesic, x.coords(), z.coords()),
              xy + distance(Metric::sphere_geodesic, y.coords(), z.coords()) + 1e-10);
  }
}

TEST(FillDistance, AddingAPointNeverIncreasesIt) {
  const Domain s2 = Domain::sphere(2);
  const auto C = candidate_grid(s2, 5000);
  const auto Y = generate_points(s2, Generator::fibonacci_sphere, 40);
  const double h = fill_distance_on(Y, C);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  for (int i = 0; i < 20; ++i) {
    const SpherePoint p({g(rng), g(rng), g(rng)});
    EXPECT_LE(fill_distance_on(Y.with_point(p.coords()), C), h);
  }
}

TEST(Generators, BitReproducible) {
  const std::pair<Domain, Generator> cases[] = {{Domain::sphere(2), Generator::fibonacci_sphere},
                                                {Domain::unit_box(2), Generator::uniform_grid},
                                                {Domain::unit_box(3), Generator::halton}};
  for (const auto& [domain, gen] : cases) {
    const auto a = generate_points(domain, gen, 64, 7);
    const auto b = generate_points(domain, gen, 64, 7);
    ASSERT_EQ(a.flat().size(), b.flat().size());
    EXPECT_EQ(std::memcmp(a.flat().data(), b.flat().data(), a.flat().size() * sizeof(double)), 0);
  }
}
