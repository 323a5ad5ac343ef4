#pragma once

// Harmonic-space dimensions, addition-theorem-normalized Gegenbauer
// polynomials, Gauss-Legendre rules, and univariate radial profiles.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "phispline/error.hpp"

namespace phispline {

namespace detail {

inline std::uint64_t binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || n < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (std::int64_t i = 1; i <= k; ++i) {
    const auto num = static_cast<std::uint64_t>(n - k + i);
    // result * num / i is exact at every step.
    if (result > std::numeric_limits<std::uint64_t>::max() / num)
      throw DomainError("harmonic_dimension: overflow");
    result = result * num / static_cast<std::uint64_t>(i);
  }
  return result;
}

}  // namespace detail

/// Dimension of the space of degree-n spherical harmonics on S^d,
/// (2n+d-1)(n+d-2)!/(n!(d-1)!), with d_0 = 1.
inline std::uint64_t harmonic_dimension(int d, int n) {
  if (d < 1) throw DomainError("harmonic_dimension: d must be >= 1");
  if (n < 0) throw DomainError("harmonic_dimension: n must be >= 0");
  if (n == 0) return 1;
  return detail::binomial(n + d - 1, d - 1) + detail::binomial(n + d - 2, d - 1);
}

/// Harmonic dimensions d_0..d_N for S^d, together with the three-term
/// recurrence of the Gegenbauer family normalized to C~_n(1) = d_n.
///
/// With lambda = (d-1)/2 and R_n = C_n^lambda / C_n^lambda(1), the recurrence is
///   R_0 = 1, R_1 = t, R_{n+1} = (2(n+lambda) t R_n - n R_{n-1}) / (n + 2 lambda),
/// and C~_n = d_n R_n. For d = 2 this is (2n+1) P_n.
class SphereBasisTable {
 public:
  SphereBasisTable(int d, int n_max) : d_(d), n_max_(n_max) {
    if (d < 1) throw DomainError("SphereBasisTable: d must be >= 1");
    if (n_max < 0) throw DomainError("SphereBasisTable: n_max must be >= 0");
    dims_.resize(static_cast<std::size_t>(n_max) + 1);
    for (int n = 0; n <= n_max; ++n) dims_[n] = static_cast<double>(harmonic_dimension(d, n));
    const double lambda = lambda_param();
    p_.assign(dims_.size(), 0.0);
    q_.assign(dims_.size(), 0.0);
    for (int n = 1; n <= n_max; ++n) {
      p_[n] = 2.0 * (n + lambda) / (n + 2.0 * lambda);
      q_[n] = n / (n + 2.0 * lambda);
    }
  }

  int sphere_dim() const noexcept { return d_; }
  int n_max() const noexcept { return n_max_; }
  double lambda_param() const noexcept { return (d_ - 1) / 2.0; }
  std::span<const double> dims() const noexcept { return dims_; }
  double dim(int n) const { return dims_.at(static_cast<std::size_t>(n)); }

  /// C~_n(t) for n <= n_max.
  double addition(int n, double t) const {
    check_t(t);
    if (n < 0 || n > n_max_) throw DomainError("addition: degree outside table");
    double r0 = 1.0, r1 = t;
    if (n == 0) return dims_[0];
    for (int k = 1; k < n; ++k) {
      const double r2 = p_[k] * t * r1 - q_[k] * r0;
      r0 = r1;
      r1 = r2;
    }
    return dims_[n] * r1;
  }

  /// C~_0(t), ..., C~_N(t).
  std::vector<double> addition_all(double t, int n_top = -1) const {
    check_t(t);
    const int top = n_top < 0 ? n_max_ : std::min(n_top, n_max_);
    std::vector<double> out(static_cast<std::size_t>(top) + 1);
    double r0 = 1.0, r1 = t;
    out[0] = dims_[0];
    if (top >= 1) out[1] = dims_[1] * t;
    for (int k = 1; k < top; ++k) {
      const double r2 = p_[k] * t * r1 - q_[k] * r0;
      r0 = r1;
      r1 = r2;
      out[k + 1] = dims_[k + 1] * r2;
    }
    return out;
  }

  /// Scales coefficients in the C~ basis to the normalized basis R_n
  /// (w_n = b_n d_n), which is what the summation routines consume.
  std::vector<double> scaled(std::span<const double> coeffs) const {
    if (coeffs.size() > dims_.size()) throw DomainError("scaled: more coefficients than the table holds");
    std::vector<double> w(coeffs.size());
    for (std::size_t n = 0; n < coeffs.size(); ++n) w[n] = coeffs[n] * dims_[n];
    return w;
  }

  /// sum_n w_n R_n(t), single pass over n.
  double sum_scaled(std::span<const double> w, double t) const {
    if (w.empty()) return 0.0;
    if (w.size() > dims_.size()) throw DomainError("sum_scaled: series longer than table");
    double r0 = 1.0, r1 = t;
    double acc = w[0];
    if (w.size() > 1) acc += w[1] * t;
    for (std::size_t k = 1; k + 1 < w.size(); ++k) {
      const double r2 = p_[k] * t * r1 - q_[k] * r0;
      r0 = r1;
      r1 = r2;
      acc += w[k + 1] * r2;
    }
    return acc;
  }

  /// Evaluates several series sharing one recurrence: outs[p][j] = sum_n ws[p][n] R_n(t[j]).
  /// All series must have the same length. Inner loops run over blocks of t.
  void sum_scaled_batch(std::span<const std::span<const double>> ws, std::span<const double> t,
                        std::span<const std::span<double>> outs) const {
    constexpr std::size_t block = 32;
    const std::size_t series = ws.size();
    if (outs.size() != series) throw DimensionError("sum_scaled_batch: series/output count mismatch");
    if (series == 0) return;
    const std::size_t len = ws[0].size();
    for (const auto& w : ws)
      if (w.size() != len) throw DimensionError("sum_scaled_batch: series lengths differ");
    if (len > dims_.size()) throw DomainError("sum_scaled_batch: series longer than table");
    for (const auto& o : outs)
      if (o.size() != t.size()) throw DimensionError("sum_scaled_batch: output size mismatch");

    std::vector<std::array<double, block>> acc(series);
    for (std::size_t start = 0; start < t.size(); start += block) {
      const std::size_t cnt = std::min(block, t.size() - start);
      alignas(64) std::array<double, block> tt{}, r0{}, r1{};
      for (std::size_t j = 0; j < cnt; ++j) tt[j] = t[start + j];
      for (std::size_t j = 0; j < block; ++j) {
        r0[j] = 1.0;
        r1[j] = tt[j];
      }
      for (std::size_t p = 0; p < series; ++p) {
        const double w0 = len > 0 ? ws[p][0] : 0.0;
        const double w1 = len > 1 ? ws[p][1] : 0.0;
        for (std::size_t j = 0; j < block; ++j) acc[p][j] = w0 + w1 * tt[j];
      }
      for (std::size_t k = 1; k + 1 < len; ++k) {
        const double pk = p_[k], qk = q_[k];
        for (std::size_t j = 0; j < block; ++j) {
          const double r2 = pk * tt[j] * r1[j] - qk * r0[j];
          r0[j] = r1[j];
          r1[j] = r2;
        }
        for (std::size_t p = 0; p < series; ++p) {
          const double wk = ws[p][k + 1];
          auto& a = acc[p];
          for (std::size_t j = 0; j < block; ++j) a[j] += wk * r1[j];
        }
      }
      for (std::size_t p = 0; p < series; ++p)
        for (std::size_t j = 0; j < cnt; ++j) outs[p][start + j] = acc[p][j];
    }
  }

 private:
  static void check_t(double t) {
    if (!(std::abs(t) <= 1.0 + 1e-12)) throw DomainError("Gegenbauer argument outside [-1,1]");
  }

  int d_;
  int n_max_;
  std::vector<double> dims_;
  std::vector<double> p_, q_;
};

/// C~_n(t) on S^d, normalized so that C~_n(1) = d_n.
inline double gegenbauer_addition(int d, int n, double t) {
  if (n < 0) throw DomainError("gegenbauer_addition: n must be >= 0");
  return SphereBasisTable(d, n).addition(n, t);
}

struct GaussLegendreRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // sum to 2
};

/// n-point Gauss-Legendre rule on [-1,1]; Newton iteration on P_n from
/// Chebyshev initial guesses.
inline GaussLegendreRule gauss_legendre(std::size_t n) {
  if (n == 0) throw DomainError("gauss_legendre: need at least one node");
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 1; k < n; ++k) {
        const double p2 = ((2.0 * k + 1.0) * x * p1 - static_cast<double>(k) * p0) / (k + 1.0);
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged node.
    double p0 = 1.0, p1 = x;
    for (std::size_t k = 1; k < n; ++k) {
      const double p2 = ((2.0 * k + 1.0) * x * p1 - static_cast<double>(k) * p0) / (k + 1.0);
      p0 = p1;
      p1 = p2;
    }
    dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

/// Univariate radial profile r -> phi(r / rho), normalized to phi(0) = 1.
///
/// Wendland functions of minimal degree (closed forms for (d,k) in
/// {(1,1),(3,1),(1,2),(3,2)}) carry decay exponent s = (d+2k+1)/2.
/// Matern half-integer profiles (m = 1, 2) carry the exponent supplied at
/// construction.
class RadialProfile {
 public:
  enum class Family { wendland, matern };

  static RadialProfile wendland(int d, int k, double rho = 1.0) {
    const bool known = (d == 1 || d == 3) && (k == 1 || k == 2);
    if (!known) throw KernelError("wendland(d,k): only (d,k) in {1,3}x{1,2} have closed forms here");
    check_rho(rho);
    RadialProfile p;
    p.family_ = Family::wendland;
    p.dim_ = d;
    p.order_ = k;
    p.rho_ = rho;
    p.s_ = (d + 2.0 * k + 1.0) / 2.0;
    return p;
  }

  static RadialProfile matern(int m, double s, double rho = 1.0) {
    if (m != 1 && m != 2) throw KernelError("matern(m): only m = 1, 2 have closed forms here");
    if (!(s > 0.0)) throw KernelError("matern: smoothness exponent s must be positive");
    check_rho(rho);
    RadialProfile p;
    p.family_ = Family::matern;
    p.order_ = m;
    p.rho_ = rho;
    p.s_ = s;
    return p;
  }

  Family family() const noexcept { return family_; }
  /// Wendland dimension parameter (0 for Matern).
  int dim_param() const noexcept { return dim_; }
  /// Wendland k or Matern m.
  int order() const noexcept { return order_; }
  double rho() const noexcept { return rho_; }
  double smoothness() const noexcept { return s_; }
  double support_radius() const noexcept {
    return family_ == Family::wendland ? rho_ : std::numeric_limits<double>::infinity();
  }

  double operator()(double r) const {
    const double u = std::abs(r) / rho_;
    if (family_ == Family::wendland) {
      if (u >= 1.0) return 0.0;
      const double v = 1.0 - u;
      if (order_ == 1) {
        if (dim_ == 1) return v * v * v * (3.0 * u + 1.0);
        return v * v * v * v * (4.0 * u + 1.0);
      }
      const double v5 = v * v * v * v * v;
      if (dim_ == 1) return v5 * (8.0 * u * u + 5.0 * u + 1.0);
      return v5 * v * (35.0 * u * u + 18.0 * u + 3.0) / 3.0;
    }
    if (order_ == 1) return (1.0 + u) * std::exp(-u);
    return (1.0 + u + u * u / 3.0) * std::exp(-u);
  }

  std::string describe() const {
    if (family_ == Family::wendland)
      return "wendland(" + std::to_string(dim_) + "," + std::to_string(order_) + ")";
    return "matern(" + std::to_string(order_) + ")";
  }

 private:
  RadialProfile() = default;
  static void check_rho(double rho) {
    if (!(rho > 0.0) || !std::isfinite(rho)) throw KernelError("radial profile scale rho must be positive");
  }

  Family family_ = Family::wendland;
  int dim_ = 0;
  int order_ = 1;
  double rho_ = 1.0;
  double s_ = 1.0;
};

inline double radial_profile_eval(const RadialProfile& p, double r) {
  if (r < 0.0) throw DomainError("radial_profile_eval: r must be nonnegative");
  return p(r);
}

}  // namespace phispline
