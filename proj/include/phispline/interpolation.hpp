#pragma once

// phi-spline interpolants S(x) = sum_y alpha_y phi(d(x,y)), their native
// norms, and the power function.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "phispline/error.hpp"
#include "phispline/geometry.hpp"
#include "phispline/kernels.hpp"
#include "phispline/linalg.hpp"

namespace phispline {

namespace detail {

inline void check_points_for_kernel(const Kernel& k, const PointSet& pts, const char* what) {
  if (pts.metric() != kernel_metric(k) || pts.dim() != kernel_coord_dim(k))
    throw DimensionError(std::string(what) + ": points do not live in the kernel's domain");
}

}  // namespace detail

/// out[j] = phi(d(x, y_j)) for every point y_j of Y.
inline void kernel_row(const Kernel& k, const PointSet& Y, std::span<const double> x, std::span<double> out) {
  const std::size_t n = Y.size(), dim = Y.dim();
  if (x.size() != dim) throw DimensionError("kernel_row: dimension mismatch");
  const double* y = Y.flat().data();
  if (const auto* s = std::get_if<SphereSeriesKernel>(&k)) {
    std::vector<double> t(n);
    for (std::size_t j = 0; j < n; ++j) {
      double v = 0.0;
      for (std::size_t a = 0; a < dim; ++a) v += x[a] * y[j * dim + a];
      t[j] = std::clamp(v, -1.0, 1.0);
    }
    const std::span<const double> ws[] = {s->scaled_coeffs()};
    const std::span<double> outs[] = {out};
    s->basis().sum_scaled_batch(ws, t, outs);
    return;
  }
  const auto& profile = std::get<EuclidRadialKernel>(k).profile();
  for (std::size_t j = 0; j < n; ++j) {
    double r2 = 0.0;
    for (std::size_t a = 0; a < dim; ++a) {
      const double diff = x[a] - y[j * dim + a];
      r2 += diff * diff;
    }
    out[j] = profile(std::sqrt(r2));
  }
}

/// A_ij = phi(d(y_i, y_j)).
inline DenseMatrix gram_matrix(const Kernel& k, const PointSet& Y) {
  detail::check_points_for_kernel(k, Y, "gram_matrix");
  const std::size_t n = Y.size();
  DenseMatrix a(n);
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    kernel_row(k, Y, Y[i], row);
    for (std::size_t j = 0; j < n; ++j) a(i, j) = row[j];
  }
  // Exact symmetry regardless of rounding in the row evaluation.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) a(j, i) = a(i, j);
  return a;
}

class Interpolant {
 public:
  Interpolant(Kernel kernel, PointSet centers, std::vector<double> values, std::vector<double> alpha,
              CholeskyFactor factor, double condition, double residual)
      : kernel_(std::move(kernel)),
        centers_(std::move(centers)),
        values_(std::move(values)),
        alpha_(std::move(alpha)),
        factor_(std::move(factor)),
        condition_(condition),
        residual_(residual) {}

  const Kernel& kernel() const noexcept { return kernel_; }
  const PointSet& centers() const noexcept { return centers_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<const double> coefficients() const noexcept { return alpha_; }
  const CholeskyFactor& gram_factor() const noexcept { return factor_; }
  /// 1-norm condition estimate of the Gram matrix (Hager's estimator).
  double condition_estimate() const noexcept { return condition_; }
  /// max_y |S(y) - f(y)| recorded at construction.
  double interpolation_residual() const noexcept { return residual_; }

  double operator()(std::span<const double> x) const {
    std::vector<double> row(centers_.size());
    kernel_row(kernel_, centers_, x, row);
    double s = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) s += alpha_[j] * row[j];
    return s;
  }

  std::vector<double> evaluate_many(const PointSet& pts) const {
    detail::check_points_for_kernel(kernel_, pts, "Interpolant::evaluate_many");
    std::vector<double> out(pts.size());
    std::vector<double> row(centers_.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      kernel_row(kernel_, centers_, pts[i], row);
      double s = 0.0;
      for (std::size_t j = 0; j < row.size(); ++j) s += alpha_[j] * row[j];
      out[i] = s;
    }
    return out;
  }

 private:
  Kernel kernel_;
  PointSet centers_;
  std::vector<double> values_;
  std::vector<double> alpha_;
  CholeskyFactor factor_;
  double condition_;
  double residual_;
};

/// Solves A alpha = f by Cholesky, with one step of iterative refinement when
/// the interpolation residual exceeds 1e-9 (1 + max|f|).
inline Interpolant build_interpolant(const Kernel& k, const PointSet& Y, std::span<const double> values) {
  require_admissible(k);
  detail::check_points_for_kernel(k, Y, "build_interpolant");
  if (values.size() != Y.size()) throw DimensionError("build_interpolant: values and points differ in size");
  for (double v : values)
    if (!std::isfinite(v)) throw DomainError("build_interpolant: value is not finite");
  const DenseMatrix a = gram_matrix(k, Y);
  CholeskyFactor factor = CholeskyFactor::factor(a);
  std::vector<double> alpha = factor.solve(values);

  double fmax = 0.0;
  for (double v : values) fmax = std::max(fmax, std::abs(v));
  const double tol = 1e-9 * (1.0 + fmax);
  auto residual_of = [&](const std::vector<double>& al, std::vector<double>& r) {
    r = a.multiply(al);
    double worst = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      r[i] = values[i] - r[i];
      worst = std::max(worst, std::abs(r[i]));
    }
    return worst;
  };
  std::vector<double> r;
  double residual = residual_of(alpha, r);
  if (residual > tol) {
    const std::vector<double> correction = factor.solve(r);
    std::vector<double> refined(alpha);
    for (std::size_t i = 0; i < refined.size(); ++i) refined[i] += correction[i];
    std::vector<double> r2;
    const double res2 = residual_of(refined, r2);
    if (res2 < residual) {
      alpha = std::move(refined);
      residual = res2;
    }
  }
  const double cond = factor.condition_estimate(a.norm1());
  return Interpolant(k, Y, std::vector<double>(values.begin(), values.end()), std::move(alpha),
                     std::move(factor), cond, residual);
}

inline double evaluate(const Interpolant& s, std::span<const double> x) { return s(x); }

/// ||S||_phi^2 = alpha^T A alpha, formed as ||L^T alpha||^2 from the cached factor.
inline double native_norm_sq(const Interpolant& s) { return s.gram_factor().quadratic_form(s.coefficients()); }

/// P(x)^2 = phi(0) - k_x^T A^{-1} k_x, evaluated as phi(0) - ||L^{-1} k_x||^2
/// and clamped at zero.
class PowerFunction {
 public:
  PowerFunction(Kernel k, PointSet Y) : kernel_(std::move(k)), centers_(std::move(Y)) {
    require_admissible(kernel_);
    if (!centers_.empty()) {
      detail::check_points_for_kernel(kernel_, centers_, "PowerFunction");
      factor_ = CholeskyFactor::factor(gram_matrix(kernel_, centers_));
    }
  }

  PowerFunction(const Interpolant& s) : kernel_(s.kernel()), centers_(s.centers()), factor_(s.gram_factor()) {}

  double operator()(std::span<const double> x) const {
    if (x.size() != kernel_coord_dim(kernel_)) throw DimensionError("power_function: dimension mismatch");
    const double phi0 = kernel_value_at_zero(kernel_);
    if (centers_.empty()) return std::sqrt(phi0);
    std::vector<double> row(centers_.size());
    kernel_row(kernel_, centers_, x, row);
    factor_.forward(row);
    double q = 0.0;
    for (double v : row) q += v * v;
    return std::sqrt(std::max(0.0, phi0 - q));
  }

 private:
  Kernel kernel_;
  PointSet centers_;
  CholeskyFactor factor_;
};

inline double power_function(const Kernel& k, const PointSet& Y, std::span<const double> x) {
  return PowerFunction(k, Y)(x);
}

struct PythagorasResult {
  /// ||f||^2 - ||S||^2, which equals ||f - S||^2 by orthogonality.
  double residual_norm_sq = 0.0;
  /// |‖f‖^2 - ‖f-S‖^2 - ‖S‖^2| with ‖f-S‖^2 from an independent route, when supplied.
  std::optional<double> defect;
};

/// Throws when ||S||^2 exceeds ||f||^2 by more than 1e-8 ||f||^2, which
/// would contradict norm minimality of the interpolant.
inline PythagorasResult pythagoras_check(double f_native_norm_sq, const Interpolant& s,
                                         std::optional<double> independent_residual_sq = std::nullopt) {
  const double s_sq = native_norm_sq(s);
  PythagorasResult r;
  r.residual_norm_sq = f_native_norm_sq - s_sq;
  if (r.residual_norm_sq < -1e-8 * f_native_norm_sq)
    throw Error("pythagoras_check: interpolant norm exceeds target norm (minimal-norm property violated)");
  if (independent_residual_sq)
    r.defect = std::abs(f_native_norm_sq - *independent_residual_sq - s_sq);
  return r;
}

}  // namespace phispline
