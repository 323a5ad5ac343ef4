#pragma once

// Exact spectral computations on S^d: zonal expansions and finite sums of
// rotated zonal functions, their projections T_n, native and H_{Lambda phi}
// norms, pseudodifferential operators, and product quadrature on S^2.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "phispline/error.hpp"
#include "phispline/geometry.hpp"
#include "phispline/interpolation.hpp"
#include "phispline/kernels.hpp"
#include "phispline/orthopoly.hpp"

namespace phispline {

/// f(x) = sum_n c_n C~_n(x . pole).
class ZonalExpansion {
 public:
  ZonalExpansion(SpherePoint pole, std::vector<double> coeffs)
      : pole_(std::move(pole)), coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw DomainError("ZonalExpansion: coefficient list is empty");
    for (double c : coeffs_)
      if (!std::isfinite(c)) throw DomainError("ZonalExpansion: coefficient is not finite");
    basis_ = std::make_shared<const SphereBasisTable>(pole_.sphere_dim(), static_cast<int>(coeffs_.size()) - 1);
    scaled_ = basis_->scaled(coeffs_);
  }

  int sphere_dim() const noexcept { return pole_.sphere_dim(); }
  int n_max() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
  const SpherePoint& pole() const noexcept { return pole_; }
  std::span<const double> coeffs() const noexcept { return coeffs_; }
  const SphereBasisTable& basis() const noexcept { return *basis_; }

  double operator()(std::span<const double> x) const {
    if (x.size() != pole_.ambient_dim()) throw DimensionError("ZonalExpansion: dimension mismatch");
    return basis_->sum_scaled(scaled_, std::clamp(dot(x, pole_.coords()), -1.0, 1.0));
  }

  std::vector<double> evaluate_many(const PointSet& pts) const {
    if (pts.dim() != pole_.ambient_dim()) throw DimensionError("ZonalExpansion: dimension mismatch");
    std::vector<double> t(pts.size()), out(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) t[i] = std::clamp(dot(pts[i], pole_.coords()), -1.0, 1.0);
    const std::span<const double> ws[] = {scaled_};
    const std::span<double> outs[] = {out};
    basis_->sum_scaled_batch(ws, t, outs);
    return out;
  }

  /// ||T_n f||^2_{L2} = c_n^2 d_n.
  double mode_energy(int n) const {
    if (n < 0 || n > n_max()) return 0.0;
    return coeffs_[n] * coeffs_[n] * basis_->dim(n);
  }

 private:
  SpherePoint pole_;
  std::vector<double> coeffs_;
  std::shared_ptr<const SphereBasisTable> basis_;
  std::vector<double> scaled_;
};

inline double zonal_eval(const ZonalExpansion& f, std::span<const double> x) { return f(x); }
inline double zonal_eval(const ZonalExpansion& f, const SpherePoint& x) { return f(x.coords()); }

/// sum_k w_k sum_n b_n C~_n(x . pole_k): one mode profile shared by many poles.
struct ZonalBlock {
  std::vector<double> profile;
  PointSet poles;
  std::vector<double> weights;
};

/// Values of several profiles over the same weighted poles, sharing one
/// recurrence pass per (point, pole) pair: out[p][i] = sum_k w_k sum_n b^p_n C~_n(x_i . pole_k).
inline std::vector<std::vector<double>> evaluate_profiles(const SphereBasisTable& basis, const PointSet& poles,
                                                          std::span<const double> weights,
                                                          const std::vector<std::vector<double>>& profiles,
                                                          const PointSet& pts) {
  if (poles.dim() != pts.dim()) throw DimensionError("evaluate_profiles: dimension mismatch");
  if (weights.size() != poles.size()) throw DimensionError("evaluate_profiles: weights/poles mismatch");
  const std::size_t m = poles.size(), dim = poles.dim(), np = profiles.size();
  std::vector<std::vector<double>> scaled(np), values(np, std::vector<double>(m));
  std::vector<std::span<const double>> ws;
  std::vector<std::span<double>> outs;
  for (std::size_t p = 0; p < np; ++p) {
    scaled[p] = basis.scaled(profiles[p]);
    ws.emplace_back(scaled[p]);
    outs.emplace_back(values[p]);
  }
  std::vector<std::vector<double>> result(np, std::vector<double>(pts.size(), 0.0));
  if (m == 0 || np == 0) return result;
  std::vector<double> t(m);
  const double* y = poles.flat().data();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto x = pts[i];
    for (std::size_t k = 0; k < m; ++k) {
      double v = 0.0;
      for (std::size_t a = 0; a < dim; ++a) v += x[a] * y[k * dim + a];
      t[k] = std::clamp(v, -1.0, 1.0);
    }
    basis.sum_scaled_batch(ws, t, outs);
    for (std::size_t p = 0; p < np; ++p) {
      double s = 0.0;
      for (std::size_t k = 0; k < m; ++k) s += weights[k] * values[p][k];
      result[p][i] = s;
    }
  }
  return result;
}

/// Finite sum of rotated zonal functions. Everything here is exactly
/// computable mode by mode through the addition theorem:
///   <T_n C~_n(.y), T_n C~_n(.z)>_{L2} = C~_n(y.z).
class ZonalSum {
 public:
  explicit ZonalSum(int d) : d_(d) {
    if (d < 1) throw DomainError("ZonalSum: d must be >= 1");
  }

  ZonalSum(const ZonalExpansion& f) : d_(f.sphere_dim()) {
    add(ZonalBlock{std::vector<double>(f.coeffs().begin(), f.coeffs().end()), PointSet::from_points({f.pole()}), {1.0}});
  }

  void add(ZonalBlock block) {
    if (block.poles.metric() != Metric::sphere_geodesic || block.poles.dim() != static_cast<std::size_t>(d_ + 1))
      throw DimensionError("ZonalSum: block poles are not on S^d");
    if (block.weights.size() != block.poles.size()) throw DimensionError("ZonalSum: weights/poles mismatch");
    if (block.profile.empty()) throw DomainError("ZonalSum: empty profile");
    n_max_ = std::max(n_max_, static_cast<int>(block.profile.size()) - 1);
    blocks_.push_back(std::move(block));
    basis_.reset();
  }

  int sphere_dim() const noexcept { return d_; }
  int n_max() const noexcept { return n_max_; }
  const std::vector<ZonalBlock>& blocks() const noexcept { return blocks_; }

  const SphereBasisTable& basis() const {
    if (!basis_ || basis_->n_max() != std::max(n_max_, 0))
      basis_ = std::make_shared<const SphereBasisTable>(d_, std::max(n_max_, 0));
    return *basis_;
  }

  std::vector<double> evaluate_many(const PointSet& pts) const {
    std::vector<double> total(pts.size(), 0.0);
    for (const auto& b : blocks_) {
      const auto vals = evaluate_profiles(basis(), b.poles, b.weights, {padded(b.profile)}, pts);
      for (std::size_t i = 0; i < pts.size(); ++i) total[i] += vals[0][i];
    }
    return total;
  }

  double operator()(std::span<const double> x) const {
    std::vector<double> flat(x.begin(), x.end());
    return evaluate_many(PointSet(Metric::sphere_geodesic, x.size(), std::move(flat)))[0];
  }

  /// ||T_n g||^2_{L2} for n = 0..n_max, from pairwise pole inner products.
  std::vector<double> mode_energies() const {
    const std::size_t len = static_cast<std::size_t>(n_max_) + 1;
    std::vector<double> energy(len, 0.0);
    if (blocks_.empty()) return energy;
    const auto& table = basis();
    const std::size_t dim = static_cast<std::size_t>(d_ + 1);
    std::vector<std::vector<double>> prof;
    for (const auto& b : blocks_) prof.push_back(padded(b.profile));

    std::vector<double> t, coef, acc(len);
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
      const auto& bb = blocks_[bi];
      for (std::size_t k = 0; k < bb.poles.size(); ++k) {
        const auto xk = bb.poles[k];
        // Sum over partner poles l (in blocks bj >= bi, and l >= k within bi).
        for (std::size_t bj = bi; bj < blocks_.size(); ++bj) {
          const auto& cb = blocks_[bj];
          const std::size_t start = bj == bi ? k : 0;
          t.clear();
          coef.clear();
          for (std::size_t l = start; l < cb.poles.size(); ++l) {
            double v = 0.0;
            const auto yl = cb.poles[l];
            for (std::size_t a = 0; a < dim; ++a) v += xk[a] * yl[a];
            t.push_back(std::clamp(v, -1.0, 1.0));
            const double mult = (bj == bi && l == k) ? 1.0 : 2.0;
            coef.push_back(mult * cb.weights[l]);
          }
          std::fill(acc.begin(), acc.end(), 0.0);
          accumulate_modes(table, t, coef, acc);
          const double wk = bb.weights[k];
          for (std::size_t n = 0; n < len; ++n)
            energy[n] += wk * prof[bi][n] * prof[bj][n] * table.dim(static_cast<int>(n)) * acc[n];
        }
      }
    }
    return energy;
  }

  /// Multiplies every profile by `factors` (mode-wise); missing factors are zero.
  ZonalSum mode_scaled(std::span<const double> factors) const {
    ZonalSum out(d_);
    for (const auto& b : blocks_) {
      ZonalBlock nb = b;
      for (std::size_t n = 0; n < nb.profile.size(); ++n) nb.profile[n] *= n < factors.size() ? factors[n] : 0.0;
      out.add(std::move(nb));
    }
    return out;
  }

  /// T_n g as a ZonalSum.
  ZonalSum projection(int n) const {
    std::vector<double> f(static_cast<std::size_t>(n_max_) + 1, 0.0);
    if (n >= 0 && n <= n_max_) f[n] = 1.0;
    return mode_scaled(f);
  }

  ZonalSum plus(const ZonalSum& other, double scale = 1.0) const {
    if (other.d_ != d_) throw DimensionError("ZonalSum::plus: dimension mismatch");
    ZonalSum out = *this;
    for (auto b : other.blocks_) {
      for (double& w : b.weights) w *= scale;
      out.add(std::move(b));
    }
    return out;
  }

  /// Union of all poles (used to include extremal points in sup estimates).
  std::vector<double> pole_coords() const {
    std::vector<double> flat;
    for (const auto& b : blocks_) flat.insert(flat.end(), b.poles.flat().begin(), b.poles.flat().end());
    return flat;
  }

 private:
  std::vector<double> padded(const std::vector<double>& p) const {
    std::vector<double> out(static_cast<std::size_t>(n_max_) + 1, 0.0);
    std::copy(p.begin(), p.end(), out.begin());
    return out;
  }

  // acc[n] += sum_j coef_j R_n(t_j)
  static void accumulate_modes(const SphereBasisTable& table, std::span<const double> t,
                               std::span<const double> coef, std::span<double> acc) {
    constexpr std::size_t block = 32;
    const std::size_t len = acc.size();
    std::vector<double> p(len, 0.0), q(len, 0.0);
    // Recover the recurrence coefficients from the table's own evaluation rule.
    const double lambda = table.lambda_param();
    for (std::size_t n = 1; n < len; ++n) {
      p[n] = 2.0 * (n + lambda) / (n + 2.0 * lambda);
      q[n] = n / (n + 2.0 * lambda);
    }
    for (std::size_t start = 0; start < t.size(); start += block) {
      const std::size_t cnt = std::min(block, t.size() - start);
      alignas(64) std::array<double, block> tt{}, cc{}, r0{}, r1{};
      for (std::size_t j = 0; j < cnt; ++j) {
        tt[j] = t[start + j];
        cc[j] = coef[start + j];
      }
      double s0 = 0.0, s1 = 0.0;
      for (std::size_t j = 0; j < block; ++j) {
        r0[j] = 1.0;
        r1[j] = tt[j];
        s0 += cc[j];
        s1 += cc[j] * tt[j];
      }
      acc[0] += s0;
      if (len > 1) acc[1] += s1;
      for (std::size_t n = 1; n + 1 < len; ++n) {
        const double pn = p[n], qn = q[n];
        double s = 0.0;
        for (std::size_t j = 0; j < block; ++j) {
          const double r2 = pn * tt[j] * r1[j] - qn * r0[j];
          r0[j] = r1[j];
          r1[j] = r2;
          s += cc[j] * r2;
        }
        acc[n + 1] += s;
      }
    }
  }

  int d_;
  int n_max_ = 0;
  std::vector<ZonalBlock> blocks_;
  mutable std::shared_ptr<const SphereBasisTable> basis_;
};

/// The interpolant as a sum of zonal translates: profile a_n, poles Y, weights alpha.
inline ZonalSum to_zonal_sum(const Interpolant& s) {
  const auto* k = std::get_if<SphereSeriesKernel>(&s.kernel());
  if (!k) throw DomainError("to_zonal_sum: interpolant does not use a sphere kernel");
  ZonalSum out(k->sphere_dim());
  if (!s.centers().empty())
    out.add(ZonalBlock{std::vector<double>(k->coeffs().begin(), k->coeffs().end()), s.centers(),
                       std::vector<double>(s.coefficients().begin(), s.coefficients().end())});
  return out;
}

// ---------------------------------------------------------------------------
// Pseudodifferential symbols.

class PseudoDiffSymbol {
 public:
  enum class Rule { assumption, identity, explicit_list };

  /// lambda_n = (n (d + n - 2))^s for n = 0..n_max.
  static PseudoDiffSymbol assumption(int d, double s, int n_max) {
    if (!(s > 0.0)) throw DomainError("pseudodifferential symbol: order s must be positive");
    if (d < 1 || n_max < 0) throw DomainError("pseudodifferential symbol: bad d or n_max");
    PseudoDiffSymbol sym(Rule::assumption);
    sym.order_ = s;
    sym.values_.resize(static_cast<std::size_t>(n_max) + 1);
    for (int n = 0; n <= n_max; ++n) sym.values_[n] = std::pow(static_cast<double>(n) * (d + n - 2), s);
    return sym;
  }

  static PseudoDiffSymbol identity(int n_max) {
    PseudoDiffSymbol sym(Rule::identity);
    sym.values_.assign(static_cast<std::size_t>(n_max) + 1, 1.0);
    return sym;
  }

  static PseudoDiffSymbol explicit_list(std::vector<double> values) {
    if (values.empty()) throw DomainError("pseudodifferential symbol: empty list");
    PseudoDiffSymbol sym(Rule::explicit_list);
    sym.values_ = std::move(values);
    return sym;
  }

  Rule rule() const noexcept { return rule_; }
  double order() const noexcept { return order_; }
  int n_max() const noexcept { return static_cast<int>(values_.size()) - 1; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t n) const { return values_.at(n); }

 private:
  explicit PseudoDiffSymbol(Rule r) : rule_(r) {}
  Rule rule_;
  double order_ = 0.0;
  std::vector<double> values_;
};

namespace detail {

inline void check_symbol_covers(const PseudoDiffSymbol& sym, int n_max) {
  if (sym.n_max() < n_max)
    throw DomainError("pseudodifferential symbol has " + std::to_string(sym.n_max() + 1) +
                      " entries, need " + std::to_string(n_max + 1));
}

}  // namespace detail

inline ZonalExpansion apply_pseudodiff(const PseudoDiffSymbol& sym, const ZonalExpansion& f) {
  detail::check_symbol_covers(sym, f.n_max());
  std::vector<double> c(f.coeffs().begin(), f.coeffs().end());
  for (std::size_t n = 0; n < c.size(); ++n) c[n] *= sym[n];
  return ZonalExpansion(f.pole(), std::move(c));
}

inline ZonalSum apply_pseudodiff(const PseudoDiffSymbol& sym, const ZonalSum& g) {
  detail::check_symbol_covers(sym, g.n_max());
  return g.mode_scaled(sym.values());
}

/// (Lambda S)(x) = sum_y alpha_y sum_n a_n lambda_n C~_n(x . y).
inline ZonalSum apply_pseudodiff(const PseudoDiffSymbol& sym, const Interpolant& s) {
  return apply_pseudodiff(sym, to_zonal_sum(s));
}

// ---------------------------------------------------------------------------
// Native-space norms.

namespace detail {

inline const SphereSeriesKernel& sphere_kernel(const Kernel& k) {
  const auto* s = std::get_if<SphereSeriesKernel>(&k);
  if (!s) throw KernelError("a sphere series kernel is required");
  return *s;
}

inline void check_compatible(int d, int n_max, const SphereSeriesKernel& k) {
  if (d != k.sphere_dim()) throw DimensionError("spectral norm: sphere dimension differs from the kernel's");
  if (n_max > k.n_max())
    throw DomainError("spectral norm: function has modes above the kernel truncation (not in the native space)");
}

}  // namespace detail

/// ||f||_phi^2 = sum_n a_n^{-1} c_n^2 d_n.
inline double hphi_norm_sq(const ZonalExpansion& f, const SphereSeriesKernel& k) {
  detail::check_compatible(f.sphere_dim(), f.n_max(), k);
  double s = 0.0;
  for (int n = 0; n <= f.n_max(); ++n) s += f.mode_energy(n) / k.coeffs()[n];
  return s;
}

inline double hphi_norm_sq(const ZonalSum& g, const SphereSeriesKernel& k) {
  detail::check_compatible(g.sphere_dim(), g.n_max(), k);
  const auto e = g.mode_energies();
  double s = 0.0;
  for (std::size_t n = 0; n < e.size(); ++n) s += e[n] / k.coeffs()[n];
  return s;
}

namespace detail {

inline double lambda_weighted(std::span<const double> energy, const SphereSeriesKernel& k, const PseudoDiffSymbol& sym) {
  double s = 0.0;
  for (std::size_t n = 0; n < energy.size(); ++n) {
    const double lam = sym[n];
    if (lam == 0.0) {
      if (energy[n] != 0.0) {
        if (n == 0) throw DomainError("mean component not annihilated; H_{Lambda phi} membership fails");
        throw DomainError("mode " + std::to_string(n) + " lies in the symbol's kernel; H_{Lambda phi} membership fails");
      }
      continue;
    }
    const double w = lam * k.coeffs()[n];
    s += energy[n] / (w * w);
  }
  return s;
}

}  // namespace detail

/// ||f||_{Lambda phi}^2 = sum_{lambda_n > 0} (lambda_n a_n)^{-2} c_n^2 d_n.
/// A mode with lambda_n = 0 and nonzero content is an error.
inline double hlambdaphi_norm_sq(const ZonalExpansion& f, const SphereSeriesKernel& k, const PseudoDiffSymbol& sym) {
  detail::check_compatible(f.sphere_dim(), f.n_max(), k);
  detail::check_symbol_covers(sym, f.n_max());
  std::vector<double> e(static_cast<std::size_t>(f.n_max()) + 1);
  for (int n = 0; n <= f.n_max(); ++n) e[n] = f.mode_energy(n);
  return detail::lambda_weighted(e, k, sym);
}

inline double hlambdaphi_norm_sq(const ZonalSum& g, const SphereSeriesKernel& k, const PseudoDiffSymbol& sym) {
  detail::check_compatible(g.sphere_dim(), g.n_max(), k);
  detail::check_symbol_covers(sym, g.n_max());
  return detail::lambda_weighted(g.mode_energies(), k, sym);
}

/// ||S||_phi^2 computed spectrally, by expanding each translate into modes.
inline double spectral_native_norm_sq(const Interpolant& s) {
  return hphi_norm_sq(to_zonal_sum(s), detail::sphere_kernel(s.kernel()));
}

/// Pythagoras check with the residual norm ||f - S||_phi^2 computed
/// independently from the mode energies of f - S.
inline PythagorasResult pythagoras_check(const ZonalExpansion& f, const Interpolant& s) {
  const auto& k = detail::sphere_kernel(s.kernel());
  const double f_sq = hphi_norm_sq(f, k);
  const ZonalSum residual = ZonalSum(f).plus(to_zonal_sum(s), -1.0);
  return pythagoras_check(f_sq, s, hphi_norm_sq(residual, k));
}

// ---------------------------------------------------------------------------
// Quadrature and grid norms.

/// Product rule on S^2: Gauss-Legendre in t = cos(theta) times equispaced
/// longitudes, weights normalized to sum to 1. Exact for spherical
/// polynomials of degree <= min(2 n_t - 1, n_phi - 1).
class SphereQuadrature {
 public:
  SphereQuadrature(std::size_t n_t, std::size_t n_phi) : nodes_(Metric::sphere_geodesic, 3) {
    if (n_t == 0 || n_phi == 0) throw DomainError("SphereQuadrature: need positive node counts");
    const auto gl = gauss_legendre(n_t);
    std::vector<double> flat;
    flat.reserve(3 * n_t * n_phi);
    weights_.reserve(n_t * n_phi);
    for (std::size_t i = 0; i < n_t; ++i) {
      const double t = gl.nodes[i];
      const double r = std::sqrt(std::max(0.0, 1.0 - t * t));
      for (std::size_t j = 0; j < n_phi; ++j) {
        const double phi = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n_phi);
        double x = r * std::cos(phi), y = r * std::sin(phi), z = t;
        const double norm = std::sqrt(x * x + y * y + z * z);
        flat.push_back(x / norm);
        flat.push_back(y / norm);
        flat.push_back(z / norm);
        weights_.push_back(gl.weights[i] / (2.0 * static_cast<double>(n_phi)));
      }
    }
    nodes_ = PointSet(Metric::sphere_geodesic, 3, std::move(flat));
    exact_degree_ = static_cast<int>(std::min(2 * n_t - 1, n_phi - 1));
  }

  /// Exact for products of two spherical polynomials of degree <= n.
  static SphereQuadrature for_degree(int n) {
    if (n < 0) throw DomainError("SphereQuadrature::for_degree: n must be >= 0");
    return SphereQuadrature(static_cast<std::size_t>(n) + 1, 2 * static_cast<std::size_t>(n) + 2);
  }

  const PointSet& nodes() const noexcept { return nodes_; }
  std::span<const double> weights() const noexcept { return weights_; }
  int exact_degree() const noexcept { return exact_degree_; }

  double integrate(std::span<const double> values) const {
    if (values.size() != weights_.size()) throw DimensionError("SphereQuadrature::integrate: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) s += weights_[i] * values[i];
    return s;
  }

 private:
  PointSet nodes_;
  std::vector<double> weights_;
  int exact_degree_ = 0;
};

/// sqrt(sum_i w_i g_i^2) for values of g at the quadrature nodes.
inline double l2_norm(std::span<const double> values_at_nodes, const SphereQuadrature& q) {
  if (values_at_nodes.size() != q.weights().size()) throw DimensionError("l2_norm: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < values_at_nodes.size(); ++i) s += q.weights()[i] * values_at_nodes[i] * values_at_nodes[i];
  return std::sqrt(s);
}

/// Any g with `evaluate_many(const PointSet&)`.
template <class F>
  requires requires(const F& f, const PointSet& p) { f.evaluate_many(p); }
double l2_norm(const F& g, const SphereQuadrature& q) {
  const auto v = g.evaluate_many(q.nodes());
  return l2_norm(std::span<const double>(v), q);
}

/// max |g| over grid values.
inline double sup_error(std::span<const double> values_on_grid) {
  if (values_on_grid.empty()) throw DomainError("sup_error: empty grid");
  double m = 0.0;
  for (double v : values_on_grid) m = std::max(m, std::abs(v));
  return m;
}

template <class F>
  requires requires(const F& f, const PointSet& p) { f.evaluate_many(p); }
double sup_error(const F& g, const PointSet& grid) {
  if (grid.empty()) throw DomainError("sup_error: empty grid");
  const auto v = g.evaluate_many(grid);
  return sup_error(std::span<const double>(v));
}

struct NormComparison {
  double lhs;  // sup |T_n f| over the dense grid plus the poles
  double rhs;  // sqrt(d_n) ||T_n f||_{L2}, the L2 norm from quadrature
};

namespace detail {

inline PointSet grid_with_points(const PointSet& grid, const std::vector<double>& extra) {
  std::vector<double> flat(grid.flat().begin(), grid.flat().end());
  const std::size_t dim = grid.dim();
  for (std::size_t i = 0; i + dim <= extra.size(); i += dim) {
    bool duplicate = false;
    for (std::size_t g = 0; g < flat.size() && !duplicate; g += dim) {
      double d2 = 0.0;
      for (std::size_t a = 0; a < dim; ++a) d2 += (flat[g + a] - extra[i + a]) * (flat[g + a] - extra[i + a]);
      duplicate = std::sqrt(d2) <= duplicate_tolerance;
    }
    if (!duplicate) flat.insert(flat.end(), extra.begin() + static_cast<std::ptrdiff_t>(i),
                                extra.begin() + static_cast<std::ptrdiff_t>(i + dim));
  }
  return PointSet(grid.metric(), dim, std::move(flat));
}

}  // namespace detail

/// Both sides of ||T_n f||_inf <= sqrt(d_n) ||T_n f||_{L2}.
inline NormComparison norm_comparison_check(const ZonalSum& f, int n, const SphereQuadrature& q, const PointSet& grid) {
  if (n < 0 || n > f.n_max()) throw DomainError("norm_comparison_check: degree outside expansion");
  if (q.exact_degree() < 2 * n) throw DomainError("norm_comparison_check: quadrature not exact for degree 2n");
  const ZonalSum mode = f.projection(n);
  const PointSet dense = detail::grid_with_points(grid, mode.pole_coords());
  NormComparison r{};
  r.lhs = sup_error(mode, dense);
  r.rhs = std::sqrt(mode.basis().dim(n)) * l2_norm(mode, q);
  return r;
}

inline NormComparison norm_comparison_check(const ZonalExpansion& f, int n, const SphereQuadrature& q,
                                            std::size_t grid_size = 20000) {
  if (f.sphere_dim() != 2) throw DomainError("norm_comparison_check: quadrature exists on S^2 only");
  return norm_comparison_check(ZonalSum(f), n, q,
                               generate_points(Domain::sphere(2), Generator::fibonacci_sphere, grid_size));
}

}  // namespace phispline
