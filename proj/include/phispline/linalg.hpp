#pragma once

// Dense symmetric positive definite factorization for Gram systems.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "phispline/error.hpp"

namespace phispline {

/// Row-major square matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  explicit DenseMatrix(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return std::span<const double>(data_).subspan(i * n_, n_); }

  std::vector<double> multiply(std::span<const double> x) const {
    std::vector<double> y(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      const double* r = &data_[i * n_];
      for (std::size_t j = 0; j < n_; ++j) s += r[j] * x[j];
      y[i] = s;
    }
    return y;
  }

  /// max_j sum_i |A_ij|
  double norm1() const {
    std::vector<double> col(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = 0; j < n_; ++j) col[j] += std::abs(data_[i * n_ + j]);
    return n_ == 0 ? 0.0 : *std::max_element(col.begin(), col.end());
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// A = L L^T for symmetric positive definite A. Only the lower triangle of A is read.
class CholeskyFactor {
 public:
  CholeskyFactor() = default;

  /// Throws FactorizationError carrying the failing pivot; the condition
  /// estimate in that error is the squared ratio of the extreme diagonal
  /// entries of the partial factor.
  static CholeskyFactor factor(const DenseMatrix& a) {
    const std::size_t n = a.size();
    CholeskyFactor f;
    f.n_ = n;
    f.l_.assign(n * n, 0.0);
    double* l = f.l_.data();
    for (std::size_t j = 0; j < n; ++j) {
      double* lj = l + j * n;
      double diag = a(j, j);
      for (std::size_t k = 0; k < j; ++k) diag -= lj[k] * lj[k];
      if (!(diag > 0.0) || !std::isfinite(diag)) {
        double lo = 0.0, hi = 0.0;
        for (std::size_t k = 0; k < j; ++k) {
          const double v = l[k * n + k];
          lo = k == 0 ? v : std::min(lo, v);
          hi = std::max(hi, v);
        }
        throw FactorizationError(j, j == 0 ? std::numeric_limits<double>::infinity() : (hi / lo) * (hi / lo));
      }
      const double ljj = std::sqrt(diag);
      lj[j] = ljj;
      const double inv = 1.0 / ljj;
      for (std::size_t i = j + 1; i < n; ++i) {
        double* li = l + i * n;
        double s = a(i, j);
        for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
        li[j] = s * inv;
      }
    }
    return f;
  }

  std::size_t size() const noexcept { return n_; }
  double lower(std::size_t i, std::size_t j) const { return l_[i * n_ + j]; }

  /// Solves L y = b in place.
  void forward(std::span<double> b) const {
    for (std::size_t i = 0; i < n_; ++i) {
      const double* li = &l_[i * n_];
      double s = b[i];
      for (std::size_t k = 0; k < i; ++k) s -= li[k] * b[k];
      b[i] = s / li[i];
    }
  }

  /// Solves L^T x = y in place.
  void backward(std::span<double> y) const {
    for (std::size_t ii = n_; ii-- > 0;) {
      y[ii] /= l_[ii * n_ + ii];
      const double yi = y[ii];
      const double* li = &l_[ii * n_];
      for (std::size_t k = 0; k < ii; ++k) y[k] -= li[k] * yi;
    }
  }

  std::vector<double> solve(std::span<const double> b) const {
    if (b.size() != n_) throw DimensionError("CholeskyFactor::solve: size mismatch");
    std::vector<double> x(b.begin(), b.end());
    forward(x);
    backward(x);
    return x;
  }

  /// ||L^T x||^2 = x^T A x.
  double quadratic_form(std::span<const double> x) const {
    if (x.size() != n_) throw DimensionError("CholeskyFactor::quadratic_form: size mismatch");
    double total = 0.0;
    for (std::size_t k = 0; k < n_; ++k) {
      double s = 0.0;
      for (std::size_t i = k; i < n_; ++i) s += l_[i * n_ + k] * x[i];
      total += s * s;
    }
    return total;
  }

  /// Reconstructs (L L^T)_{ij}.
  double reconstruct(std::size_t i, std::size_t j) const {
    double s = 0.0;
    const std::size_t top = std::min(i, j);
    for (std::size_t k = 0; k <= top; ++k) s += l_[i * n_ + k] * l_[j * n_ + k];
    return s;
  }

  /// 1-norm condition number estimate ||A||_1 * est(||A^{-1}||_1) by Hager's
  /// method (A^{-1} is symmetric, so one solver serves both directions).
  double condition_estimate(double a_norm1) const {
    if (n_ == 0) return 1.0;
    std::vector<double> x(n_, 1.0 / static_cast<double>(n_));
    double est = 0.0;
    for (int iter = 0; iter < 5; ++iter) {
      std::vector<double> y = solve(x);
      double ny = 0.0;
      for (double v : y) ny += std::abs(v);
      if (iter > 0 && ny <= est) break;
      est = ny;
      std::vector<double> xi(n_);
      for (std::size_t i = 0; i < n_; ++i) xi[i] = y[i] >= 0.0 ? 1.0 : -1.0;
      std::vector<double> z = solve(xi);
      std::size_t jmax = 0;
      for (std::size_t i = 1; i < n_; ++i)
        if (std::abs(z[i]) > std::abs(z[jmax])) jmax = i;
      double ztx = 0.0;
      for (std::size_t i = 0; i < n_; ++i) ztx += z[i] * x[i];
      if (std::abs(z[jmax]) <= ztx) break;
      std::fill(x.begin(), x.end(), 0.0);
      x[jmax] = 1.0;
    }
    return a_norm1 * est;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> l_;
};

}  // namespace phispline
