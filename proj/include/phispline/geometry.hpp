#pragma once

// Points, metrics and point-set generation on S^d and on bounded domains of R^d.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "phispline/error.hpp"

namespace phispline {

inline constexpr double duplicate_tolerance = 1e-12;

inline double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

/// Unit vector in R^{d+1}. Renormalized on construction.
class SpherePoint {
 public:
  explicit SpherePoint(std::vector<double> coords) : coords_(std::move(coords)) {
    if (coords_.size() < 2) throw DimensionError("SpherePoint needs at least 2 coordinates");
    double n2 = 0.0;
    for (double c : coords_) {
      if (!std::isfinite(c)) throw DomainError("SpherePoint coordinate is not finite");
      n2 += c * c;
    }
    if (n2 == 0.0) throw DomainError("SpherePoint cannot be the zero vector");
    const double inv = 1.0 / std::sqrt(n2);
    for (double& c : coords_) c *= inv;
  }

  std::span<const double> coords() const noexcept { return coords_; }
  std::size_t ambient_dim() const noexcept { return coords_.size(); }
  int sphere_dim() const noexcept { return static_cast<int>(coords_.size()) - 1; }
  double operator[](std::size_t i) const { return coords_[i]; }

 private:
  std::vector<double> coords_;
};

class EuclidPoint {
 public:
  explicit EuclidPoint(std::vector<double> coords) : coords_(std::move(coords)) {
    if (coords_.empty()) throw DimensionError("EuclidPoint needs at least one coordinate");
    for (double c : coords_)
      if (!std::isfinite(c)) throw DomainError("EuclidPoint coordinate is not finite");
  }

  std::span<const double> coords() const noexcept { return coords_; }
  std::size_t dim() const noexcept { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }

 private:
  std::vector<double> coords_;
};

/// Great-circle distance; the inner product is clamped to [-1,1] before arccos.
inline double geodesic_distance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("geodesic_distance: dimension mismatch");
  return std::acos(std::clamp(dot(x, y), -1.0, 1.0));
}

inline double geodesic_distance(const SpherePoint& x, const SpherePoint& y) {
  return geodesic_distance(x.coords(), y.coords());
}

inline double euclidean_distance(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("euclidean_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    s += d * d;
  }
  return std::sqrt(s);
}

inline double euclidean_distance(const EuclidPoint& x, const EuclidPoint& y) {
  return euclidean_distance(x.coords(), y.coords());
}

enum class Metric { sphere_geodesic, euclidean };

inline double distance(Metric m, std::span<const double> x, std::span<const double> y) {
  return m == Metric::sphere_geodesic ? geodesic_distance(x, y) : euclidean_distance(x, y);
}

/// Full sphere S^d, an axis-aligned box, or a ball in R^d.
class Domain {
 public:
  enum class Kind { sphere, box, ball };

  static Domain sphere(int d) {
    if (d < 1) throw DomainError("sphere dimension must be >= 1");
    Domain dom;
    dom.kind_ = Kind::sphere;
    dom.dim_ = d;
    return dom;
  }

  static Domain box(std::vector<double> lower, std::vector<double> upper) {
    if (lower.empty() || lower.size() != upper.size())
      throw DomainError("box corners must be nonempty and of equal dimension");
    for (std::size_t i = 0; i < lower.size(); ++i)
      if (!(lower[i] < upper[i])) throw DomainError("box corners must satisfy lower < upper");
    Domain dom;
    dom.kind_ = Kind::box;
    dom.dim_ = static_cast<int>(lower.size());
    dom.lower_ = std::move(lower);
    dom.upper_ = std::move(upper);
    return dom;
  }

  static Domain unit_box(int d) {
    return box(std::vector<double>(static_cast<std::size_t>(d), 0.0),
               std::vector<double>(static_cast<std::size_t>(d), 1.0));
  }

  static Domain ball(std::vector<double> center, double radius) {
    if (center.empty()) throw DomainError("ball center must be nonempty");
    if (!(radius > 0.0)) throw DomainError("ball radius must be positive");
    Domain dom;
    dom.kind_ = Kind::ball;
    dom.dim_ = static_cast<int>(center.size());
    dom.center_ = std::move(center);
    dom.radius_ = radius;
    return dom;
  }

  Kind kind() const noexcept { return kind_; }
  /// d for S^d or R^d.
  int dim() const noexcept { return dim_; }
  /// Length of a coordinate tuple: d+1 on the sphere, d otherwise.
  std::size_t coord_dim() const noexcept {
    return static_cast<std::size_t>(kind_ == Kind::sphere ? dim_ + 1 : dim_);
  }
  Metric metric() const noexcept {
    return kind_ == Kind::sphere ? Metric::sphere_geodesic : Metric::euclidean;
  }
  const std::vector<double>& lower() const noexcept { return lower_; }
  const std::vector<double>& upper() const noexcept { return upper_; }
  const std::vector<double>& center() const noexcept { return center_; }
  double radius() const noexcept { return radius_; }

  bool contains(std::span<const double> x, double tol = 1e-12) const {
    if (x.size() != coord_dim()) return false;
    switch (kind_) {
      case Kind::sphere:
        return std::abs(std::sqrt(dot(x, x)) - 1.0) <= tol;
      case Kind::box:
        for (std::size_t i = 0; i < x.size(); ++i)
          if (x[i] < lower_[i] - tol || x[i] > upper_[i] + tol) return false;
        return true;
      case Kind::ball:
        return euclidean_distance(x, center_) <= radius_ + tol;
    }
    return false;
  }

  double volume() const {
    switch (kind_) {
      case Kind::sphere:
        return 1.0;  // normalized measure
      case Kind::box: {
        double v = 1.0;
        for (std::size_t i = 0; i < lower_.size(); ++i) v *= upper_[i] - lower_[i];
        return v;
      }
      case Kind::ball: {
        const double d = dim_;
        return std::pow(std::numbers::pi, d / 2) / std::tgamma(d / 2 + 1) * std::pow(radius_, d);
      }
    }
    return 0.0;
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::sphere:
        return "sphere" + std::to_string(dim_);
      case Kind::box:
        return "box" + std::to_string(dim_);
      case Kind::ball:
        return "ball" + std::to_string(dim_);
    }
    return "unknown";
  }

 private:
  Domain() = default;
  Kind kind_ = Kind::sphere;
  int dim_ = 2;
  std::vector<double> lower_, upper_, center_;
  double radius_ = 0.0;
};

struct GenerationInfo {
  std::string generator;
  std::size_t count = 0;
  std::uint64_t seed = 0;
};

/// Duplicate-free collection of equal-dimension points with flat coordinate storage.
class PointSet {
 public:
  PointSet(Metric metric, std::size_t dim) : metric_(metric), dim_(dim) {
    if (dim == 0) throw DimensionError("PointSet dimension must be positive");
  }

  PointSet(Metric metric, std::size_t dim, std::vector<double> flat,
           std::optional<GenerationInfo> info = std::nullopt)
      : metric_(metric), dim_(dim), coords_(std::move(flat)), info_(std::move(info)) {
    if (dim == 0) throw DimensionError("PointSet dimension must be positive");
    if (coords_.size() % dim != 0) throw DimensionError("PointSet: flat size not a multiple of dim");
    for (double c : coords_)
      if (!std::isfinite(c)) throw DomainError("PointSet coordinate is not finite");
    if (metric_ == Metric::sphere_geodesic) {
      for (std::size_t i = 0; i < size(); ++i)
        if (std::abs(std::sqrt(dot((*this)[i], (*this)[i])) - 1.0) > 1e-12)
          throw DomainError("PointSet: sphere point " + std::to_string(i) + " is not a unit vector");
    }
    check_duplicates();
  }

  static PointSet from_points(const std::vector<SpherePoint>& pts) {
    if (pts.empty()) throw DimensionError("from_points: empty list, dimension unknown");
    std::vector<double> flat;
    for (const auto& p : pts) {
      if (p.ambient_dim() != pts.front().ambient_dim())
        throw DimensionError("from_points: mixed dimensions");
      flat.insert(flat.end(), p.coords().begin(), p.coords().end());
    }
    return PointSet(Metric::sphere_geodesic, pts.front().ambient_dim(), std::move(flat));
  }

  Metric metric() const noexcept { return metric_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return coords_.size() / dim_; }
  bool empty() const noexcept { return coords_.empty(); }
  std::span<const double> operator[](std::size_t i) const {
    return std::span<const double>(coords_).subspan(i * dim_, dim_);
  }
  std::span<const double> flat() const noexcept { return coords_; }
  const std::optional<GenerationInfo>& generation() const noexcept { return info_; }

  /// New set with `x` appended; throws if `x` duplicates an existing point.
  PointSet with_point(std::span<const double> x) const {
    std::vector<double> flat = coords_;
    flat.insert(flat.end(), x.begin(), x.end());
    return PointSet(metric_, dim_, std::move(flat));
  }

 private:
  void check_duplicates() const {
    const std::size_t n = size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return coords_[a * dim_] < coords_[b * dim_]; });
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = (*this)[order[i]];
      for (std::size_t j = i + 1; j < n; ++j) {
        const auto b = (*this)[order[j]];
        if (b[0] - a[0] > duplicate_tolerance) break;
        if (euclidean_distance(a, b) <= duplicate_tolerance)
          throw DomainError("PointSet: duplicate points " + std::to_string(order[i]) + " and " +
                            std::to_string(order[j]));
      }
    }
  }

  Metric metric_;
  std::size_t dim_;
  std::vector<double> coords_;
  std::optional<GenerationInfo> info_;
};

enum class Generator { fibonacci_sphere, uniform_grid, halton };

inline std::string to_string(Generator g) {
  switch (g) {
    case Generator::fibonacci_sphere:
      return "fibonacci-sphere";
    case Generator::uniform_grid:
      return "uniform-grid";
    case Generator::halton:
      return "halton";
  }
  return "unknown";
}

inline Generator parse_generator(const std::string& name) {
  if (name == "fibonacci-sphere" || name == "fibonacci") return Generator::fibonacci_sphere;
  if (name == "uniform-grid" || name == "grid") return Generator::uniform_grid;
  if (name == "halton") return Generator::halton;
  throw DomainError("unknown generator '" + name + "'");
}

namespace detail {

inline std::vector<double> fibonacci_sphere_flat(std::size_t n) {
  std::vector<double> flat;
  flat.reserve(3 * n);
  const double golden_angle = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (std::size_t i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * static_cast<double>(i);
    double x = r * std::cos(phi), y = r * std::sin(phi), zz = z;
    const double norm = std::sqrt(x * x + y * y + zz * zz);
    flat.push_back(x / norm);
    flat.push_back(y / norm);
    flat.push_back(zz / norm);
  }
  return flat;
}

inline double radical_inverse(std::uint64_t index, std::uint64_t base) {
  double result = 0.0;
  double f = 1.0 / static_cast<double>(base);
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= static_cast<double>(base);
  }
  return result;
}

inline constexpr std::uint64_t halton_primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

inline std::size_t grid_side(std::size_t n, int d) {
  const auto m = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(n), 1.0 / d)));
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= m;
  if (total != n)
    throw DomainError("uniform-grid: count " + std::to_string(n) + " is not a perfect " +
                      std::to_string(d) + "-th power");
  return m;
}

inline std::vector<double> box_grid_flat(const Domain& dom, std::size_t m) {
  const auto d = static_cast<std::size_t>(dom.dim());
  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= m;
  std::vector<double> flat;
  flat.reserve(total * d);
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t p = 0; p < total; ++p) {
    std::size_t rem = p;
    for (std::size_t a = 0; a < d; ++a) {
      idx[a] = rem % m;
      rem /= m;
    }
    for (std::size_t a = 0; a < d; ++a) {
      const double lo = dom.lower()[a], hi = dom.upper()[a];
      const double u = m == 1 ? 0.5 : static_cast<double>(idx[a]) / static_cast<double>(m - 1);
      flat.push_back(m > 1 && idx[a] == m - 1 ? hi : lo + u * (hi - lo));
    }
  }
  return flat;
}

inline std::vector<double> halton_flat(const Domain& dom, std::size_t n, std::uint64_t seed) {
  const auto d = static_cast<std::size_t>(dom.dim());
  if (d > std::size(halton_primes)) throw DomainError("halton: dimension too large");
  std::vector<double> flat;
  flat.reserve(n * d);
  std::vector<double> lo(d), hi(d);
  if (dom.kind() == Domain::Kind::box) {
    lo = dom.lower();
    hi = dom.upper();
  } else {
    for (std::size_t a = 0; a < d; ++a) {
      lo[a] = dom.center()[a] - dom.radius();
      hi[a] = dom.center()[a] + dom.radius();
    }
  }
  std::vector<double> x(d);
  std::size_t produced = 0;
  // Index 0 maps to the lower corner; skip it, and `seed` further entries.
  for (std::uint64_t index = seed + 1; produced < n; ++index) {
    for (std::size_t a = 0; a < d; ++a)
      x[a] = lo[a] + radical_inverse(index, halton_primes[a]) * (hi[a] - lo[a]);
    if (dom.kind() == Domain::Kind::ball && !dom.contains(x, 0.0)) continue;
    flat.insert(flat.end(), x.begin(), x.end());
    ++produced;
  }
  return flat;
}

}  // namespace detail

/// Deterministic point generation. Fibonacci points exist only on S^2; the
/// uniform grid (endpoints inclusive, n must be a perfect d-th power) only on
/// boxes; Halton points on boxes and balls (rejection from the bounding box).
inline PointSet generate_points(const Domain& domain, Generator generator, std::size_t n,
                                std::uint64_t seed = 0) {
  if (n == 0) throw DomainError("generate_points: count must be positive");
  GenerationInfo info{to_string(generator), n, seed};
  switch (generator) {
    case Generator::fibonacci_sphere:
      if (domain.kind() != Domain::Kind::sphere || domain.dim() != 2)
        throw DomainError("fibonacci-sphere generator requires S^2");
      return PointSet(Metric::sphere_geodesic, 3, detail::fibonacci_sphere_flat(n), info);
    case Generator::uniform_grid:
      if (domain.kind() != Domain::Kind::box) throw DomainError("uniform-grid generator requires a box");
      return PointSet(Metric::euclidean, domain.coord_dim(),
                      detail::box_grid_flat(domain, detail::grid_side(n, domain.dim())), info);
    case Generator::halton:
      if (domain.kind() == Domain::Kind::sphere) throw DomainError("halton generator requires a box or ball");
      return PointSet(Metric::euclidean, domain.coord_dim(), detail::halton_flat(domain, n, seed), info);
  }
  throw DomainError("unsupported generator");
}

inline Generator default_generator(const Domain& domain) {
  return domain.kind() == Domain::Kind::sphere ? Generator::fibonacci_sphere
         : domain.kind() == Domain::Kind::box  ? Generator::uniform_grid
                                               : Generator::halton;
}

/// Deterministic dense point set covering the domain with at least `count`
/// points: Fibonacci points on S^2, an odd-sided uniform grid on boxes and
/// Halton points in balls.
inline PointSet candidate_grid(const Domain& domain, std::size_t count) {
  switch (domain.kind()) {
    case Domain::Kind::sphere:
      return generate_points(domain, Generator::fibonacci_sphere, count);
    case Domain::Kind::box: {
      const int d = domain.dim();
      auto m = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(count), 1.0 / d) - 1e-9));
      if (m % 2 == 0) ++m;
      std::size_t total = 1;
      for (int i = 0; i < d; ++i) total *= m;
      return PointSet(Metric::euclidean, domain.coord_dim(), detail::box_grid_flat(domain, m),
                      GenerationInfo{"uniform-grid", total, 0});
    }
    case Domain::Kind::ball:
      return generate_points(domain, Generator::halton, count);
  }
  throw DomainError("candidate_grid: unsupported domain");
}

/// Largest distance from a point of `candidates` to its nearest point of Y.
inline double fill_distance_on(const PointSet& Y, const PointSet& candidates) {
  if (Y.empty()) throw DomainError("fill_distance: empty point set");
  if (Y.dim() != candidates.dim()) throw DimensionError("fill_distance: dimension mismatch");
  const std::size_t n = Y.size(), dim = Y.dim();
  const double* y = Y.flat().data();
  double worst = 0.0;
  if (Y.metric() == Metric::sphere_geodesic) {
    // Nearest in geodesic distance = largest inner product.
    double worst_dot = 1.0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const auto x = candidates[c];
      double best = -2.0;
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t a = 0; a < dim; ++a) s += x[a] * y[j * dim + a];
        best = std::max(best, s);
      }
      worst_dot = std::min(worst_dot, best);
    }
    worst = std::acos(std::clamp(worst_dot, -1.0, 1.0));
  } else {
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const auto x = candidates[c];
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t a = 0; a < dim; ++a) {
          const double diff = x[a] - y[j * dim + a];
          s += diff * diff;
        }
        best = std::min(best, s);
      }
      worst = std::max(worst, best);
    }
    worst = std::sqrt(worst);
  }
  return worst;
}

/// Fill-distance estimate on a fixed candidate grid. This is a lower estimate
/// of the true supremum; it is nonincreasing when points are added to Y.
inline double fill_distance(const PointSet& Y, const Domain& domain, std::size_t candidates = 100000) {
  if (Y.empty()) throw DomainError("fill_distance: empty point set");
  if (candidates < 1000) throw DomainError("fill_distance: need at least 1000 candidates");
  return fill_distance_on(Y, candidate_grid(domain, candidates));
}

}  // namespace phispline
