#pragma once

// Sphere series kernels phi(x.y) = sum_n a_n C~_n(x.y) and Euclidean radial
// kernels phi(|x-y|), behind one variant type.

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "phispline/error.hpp"
#include "phispline/geometry.hpp"
#include "phispline/orthopoly.hpp"

namespace phispline {

struct PowerLawRule {
  double amplitude = 1.0;
  double tau = 2.0;
};

struct ExplicitRule {
  std::vector<double> coeffs;
};

namespace detail {

// sum_{n > N} d_n A (1+n)^{-2 tau}: explicit terms up to 64(N+1), integral
// comparison with d_n ~ 2 n^{d-1}/(d-1)! beyond that. Infinite when 2 tau <= d.
inline double power_law_tail(int d, double tau, double amplitude, int n_max) {
  if (2.0 * tau <= d) return std::numeric_limits<double>::infinity();
  const int explicit_top = 64 * (n_max + 1);
  double tail = 0.0;
  for (int n = n_max + 1; n <= explicit_top; ++n)
    tail += static_cast<double>(harmonic_dimension(d, n)) * amplitude * std::pow(1.0 + n, -2.0 * tau);
  const double lead = 2.0 / std::tgamma(static_cast<double>(d));
  const double expo = d - 2.0 * tau;  // integrand ~ x^{d-1-2tau}
  tail += lead * amplitude * std::pow(explicit_top + 0.5, expo) / (-expo);
  return tail;
}

}  // namespace detail

/// phi(x.y) = sum_{n <= N_max} a_n C~_n(x.y) on S^d.
///
/// Construction is permissive about admissibility (negative a_n, 2 tau <= d);
/// `validate_kernel` reports those, and interpolation refuses inadmissible kernels.
class SphereSeriesKernel {
 public:
  static constexpr double tail_tolerance = 1e-8;

  /// a_n = A (1+n)^{-2 tau}. Without an explicit `n_max` the truncation is the
  /// smallest N with relative tail below `tail_tolerance`, capped at `cap`.
  static SphereSeriesKernel power_law(int d, double tau, double amplitude = 1.0,
                                      std::optional<int> n_max = std::nullopt, int cap = 400) {
    if (d < 1) throw KernelError("sphere kernel: d must be >= 1");
    if (!std::isfinite(tau) || !std::isfinite(amplitude))
      throw KernelError("power-law kernel: parameters must be finite");
    int top = cap;
    if (n_max) {
      if (*n_max < 0) throw KernelError("power-law kernel: N_max must be >= 0");
      top = *n_max;
    } else if (2.0 * tau > d) {
      // The tail shrinks and the head grows with N, so the criterion is monotone.
      auto head = [&](int top_n) {
        double h = 0.0;
        for (int n = 0; n <= top_n; ++n)
          h += static_cast<double>(harmonic_dimension(d, n)) * amplitude * std::pow(1.0 + n, -2.0 * tau);
        return h;
      };
      auto meets = [&](int n) { return detail::power_law_tail(d, tau, amplitude, n) < tail_tolerance * head(n); };
      if (meets(cap)) {
        int lo = 0, hi = cap;
        while (lo < hi) {
          const int mid = (lo + hi) / 2;
          if (meets(mid)) hi = mid;
          else lo = mid + 1;
        }
        top = lo;
      }
    }
    std::vector<double> a(static_cast<std::size_t>(top) + 1);
    for (int n = 0; n <= top; ++n) a[n] = amplitude * std::pow(1.0 + n, -2.0 * tau);
    SphereSeriesKernel k(d, std::move(a), PowerLawRule{amplitude, tau});
    return k;
  }

  static SphereSeriesKernel explicit_list(int d, std::vector<double> coeffs) {
    if (d < 1) throw KernelError("sphere kernel: d must be >= 1");
    if (coeffs.empty()) throw KernelError("explicit sphere kernel: coefficient list is empty");
    for (double c : coeffs)
      if (!std::isfinite(c)) throw KernelError("explicit sphere kernel: coefficient is not finite");
    auto copy = coeffs;
    return SphereSeriesKernel(d, std::move(copy), ExplicitRule{std::move(coeffs)});
  }

  int sphere_dim() const noexcept { return basis_->sphere_dim(); }
  int n_max() const noexcept { return basis_->n_max(); }
  std::span<const double> coeffs() const noexcept { return a_; }
  /// a_n d_n, the weights of the normalized polynomials R_n.
  std::span<const double> scaled_coeffs() const noexcept { return scaled_; }
  const SphereBasisTable& basis() const noexcept { return *basis_; }
  std::shared_ptr<const SphereBasisTable> basis_ptr() const noexcept { return basis_; }
  const std::variant<PowerLawRule, ExplicitRule>& rule() const noexcept { return rule_; }

  /// Truncated phi at zero distance: sum a_n d_n.
  double value_at_zero() const noexcept { return phi0_; }

  /// phi as a function of t = x.y.
  double profile(double t) const { return basis_->sum_scaled(scaled_, std::clamp(t, -1.0, 1.0)); }

  /// sum_{n > N_max} d_n a_n relative to sum_{n <= N_max} d_n a_n (0 for explicit lists).
  double relative_tail() const {
    if (const auto* pl = std::get_if<PowerLawRule>(&rule_))
      return detail::power_law_tail(sphere_dim(), pl->tau, pl->amplitude, n_max()) / phi0_;
    return 0.0;
  }

 private:
  SphereSeriesKernel(int d, std::vector<double> a, std::variant<PowerLawRule, ExplicitRule> rule)
      : basis_(std::make_shared<const SphereBasisTable>(d, static_cast<int>(a.size()) - 1)),
        a_(std::move(a)),
        rule_(std::move(rule)) {
    scaled_ = basis_->scaled(a_);
    phi0_ = 0.0;
    for (double w : scaled_) phi0_ += w;
  }

  std::shared_ptr<const SphereBasisTable> basis_;
  std::vector<double> a_;
  std::vector<double> scaled_;
  std::variant<PowerLawRule, ExplicitRule> rule_;
  double phi0_ = 0.0;
};

/// phi(|x-y|) on R^d with a radial profile whose Fourier transform decays
/// like (1+|x|)^{-2s}.
class EuclidRadialKernel {
 public:
  EuclidRadialKernel(RadialProfile profile, int ambient_dim) : profile_(profile), dim_(ambient_dim) {
    if (ambient_dim < 1) throw KernelError("radial kernel: ambient dimension must be >= 1");
    if (profile.family() == RadialProfile::Family::wendland && profile.dim_param() < ambient_dim)
      throw KernelError("wendland(" + std::to_string(profile.dim_param()) +
                        ",k) is not positive definite in dimension " + std::to_string(ambient_dim));
  }

  const RadialProfile& profile() const noexcept { return profile_; }
  int ambient_dim() const noexcept { return dim_; }
  double smoothness() const noexcept { return profile_.smoothness(); }
  double value_at_zero() const noexcept { return 1.0; }

 private:
  RadialProfile profile_;
  int dim_;
};

using Kernel = std::variant<SphereSeriesKernel, EuclidRadialKernel>;

inline bool is_sphere_kernel(const Kernel& k) { return std::holds_alternative<SphereSeriesKernel>(k); }

/// Coordinate length the kernel expects: d+1 on S^d, d in R^d.
inline std::size_t kernel_coord_dim(const Kernel& k) {
  if (const auto* s = std::get_if<SphereSeriesKernel>(&k)) return static_cast<std::size_t>(s->sphere_dim() + 1);
  return static_cast<std::size_t>(std::get<EuclidRadialKernel>(k).ambient_dim());
}

inline Metric kernel_metric(const Kernel& k) {
  return is_sphere_kernel(k) ? Metric::sphere_geodesic : Metric::euclidean;
}

inline double kernel_value_at_zero(const Kernel& k) {
  return std::visit([](const auto& kk) { return kk.value_at_zero(); }, k);
}

inline double kernel_eval(const Kernel& k, std::span<const double> x, std::span<const double> y) {
  const std::size_t dim = kernel_coord_dim(k);
  if (x.size() != dim || y.size() != dim) throw DimensionError("kernel_eval: dimension mismatch");
  if (const auto* s = std::get_if<SphereSeriesKernel>(&k)) return s->profile(dot(x, y));
  return std::get<EuclidRadialKernel>(k).profile()(euclidean_distance(x, y));
}

inline double kernel_eval(const Kernel& k, const SpherePoint& x, const SpherePoint& y) {
  return kernel_eval(k, x.coords(), y.coords());
}

inline double kernel_eval(const Kernel& k, const EuclidPoint& x, const EuclidPoint& y) {
  return kernel_eval(k, x.coords(), y.coords());
}

struct ValidationReport {
  bool admissible = true;
  std::vector<std::string> failures;
  /// First n with a_n <= 0 (sphere kernels).
  std::optional<int> first_nonpositive;
  /// 2 tau - d for power laws.
  std::optional<double> summability_margin;
  /// Relative truncation tail (sphere kernels).
  std::optional<double> tail_estimate;
  bool tail_within_tolerance = true;
  /// s - d/2 for radial kernels.
  std::optional<double> smoothness_margin;
};

/// Admissibility: a_n > 0 for all n and 2 tau > d on the sphere; s > d/2 in R^d.
/// The truncation tail is reported; exceeding the tolerance is not a failure
/// because the truncated series is the kernel actually used.
inline ValidationReport validate_kernel(const Kernel& k) {
  ValidationReport r;
  if (const auto* s = std::get_if<SphereSeriesKernel>(&k)) {
    const auto a = s->coeffs();
    for (std::size_t n = 0; n < a.size(); ++n) {
      if (!(a[n] > 0.0)) {
        r.first_nonpositive = static_cast<int>(n);
        r.admissible = false;
        r.failures.push_back("positivity fails at n=" + std::to_string(n));
        break;
      }
    }
    if (const auto* pl = std::get_if<PowerLawRule>(&s->rule())) {
      const double margin = 2.0 * pl->tau - s->sphere_dim();
      r.summability_margin = margin;
      if (!(margin > 0.0)) {
        r.admissible = false;
        r.failures.push_back("summability fails: 2*tau - d = " + std::to_string(margin) + " <= 0");
      }
      if (!(pl->amplitude > 0.0) && !r.first_nonpositive) {
        r.admissible = false;
        r.failures.push_back("amplitude must be positive");
      }
    }
    if (r.admissible) {
      r.tail_estimate = s->relative_tail();
      r.tail_within_tolerance = *r.tail_estimate < SphereSeriesKernel::tail_tolerance;
    }
  } else {
    const auto& e = std::get<EuclidRadialKernel>(k);
    const double margin = e.smoothness() - e.ambient_dim() / 2.0;
    r.smoothness_margin = margin;
    if (!(margin > 0.0)) {
      r.admissible = false;
      r.failures.push_back("native space not continuous: s - d/2 = " + std::to_string(margin) + " <= 0");
    }
  }
  return r;
}

inline void require_admissible(const Kernel& k) {
  const auto r = validate_kernel(k);
  if (!r.admissible) {
    std::string msg = "inadmissible kernel:";
    for (const auto& f : r.failures) msg += " " + f + ";";
    throw KernelError(msg);
  }
}

// ---------------------------------------------------------------------------
// Flat key-value kernel specification.
//
//   kind=powerlaw  keys: d, tau, A, N_max
//   kind=list      keys: d, coeffs (semicolon separated)
//   kind=wendland  keys: d, k, rho           (d = Wendland dimension parameter)
//   kind=matern    keys: m, s, rho
//   kind=radial    keys: family (wendland|matern) plus that family's keys
//
// The ambient dimension of the domain supplies defaults for d.

using KeyValues = std::map<std::string, std::string>;

namespace detail {

inline double parse_double(const std::string& key, const std::string& text) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw KernelError("key '" + key + "': '" + text + "' is not a number");
  }
  if (pos != text.size()) throw KernelError("key '" + key + "': '" + text + "' is not a number");
  return v;
}

inline int parse_int(const std::string& key, const std::string& text) {
  const double v = parse_double(key, text);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw KernelError("key '" + key + "': '" + text + "' is not an integer");
  return static_cast<int>(v);
}

inline void reject_unknown(const KeyValues& kv, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : kv) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw KernelError("unknown kernel key '" + key + "'");
  }
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace detail

/// Splits "a=1,b=2" into a map. Empty text gives an empty map.
inline KeyValues parse_key_values(const std::string& text) {
  KeyValues kv;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string::npos) end = text.size();
    const std::string item = text.substr(start, end - start);
    const std::size_t eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw KernelError("malformed key-value item '" + item + "'");
    const std::string key = item.substr(0, eq);
    if (kv.count(key)) throw KernelError("duplicate key '" + key + "'");
    kv[key] = item.substr(eq + 1);
    start = end + 1;
  }
  return kv;
}

/// Builds a kernel from flat keys. `domain` supplies the ambient dimension.
inline Kernel kernel_from_config(KeyValues kv, const Domain& domain) {
  if (!kv.count("kind")) throw KernelError("kernel config needs key 'kind'");
  std::string kind = kv.at("kind");
  if (kind == "radial") {
    if (!kv.count("family")) throw KernelError("kind=radial needs key 'family'");
    kind = kv.at("family");
    kv.erase("family");
  }
  const bool sphere = domain.kind() == Domain::Kind::sphere;
  auto get_int = [&](const char* key, int fallback) {
    return kv.count(key) ? detail::parse_int(key, kv.at(key)) : fallback;
  };
  auto get_double = [&](const char* key, double fallback) {
    return kv.count(key) ? detail::parse_double(key, kv.at(key)) : fallback;
  };

  if (kind == "powerlaw") {
    detail::reject_unknown(kv, {"kind", "d", "tau", "A", "N_max"});
    if (!sphere) throw KernelError("kind=powerlaw requires a sphere domain");
    const int d = get_int("d", domain.dim());
    if (d != domain.dim()) throw KernelError("kernel d does not match the sphere dimension");
    std::optional<int> n_max;
    if (kv.count("N_max")) n_max = get_int("N_max", 0);
    return SphereSeriesKernel::power_law(d, get_double("tau", 2.0), get_double("A", 1.0), n_max);
  }
  if (kind == "list") {
    detail::reject_unknown(kv, {"kind", "d", "coeffs"});
    if (!sphere) throw KernelError("kind=list requires a sphere domain");
    if (!kv.count("coeffs")) throw KernelError("kind=list needs key 'coeffs'");
    std::vector<double> a;
    std::stringstream ss(kv.at("coeffs"));
    std::string item;
    while (std::getline(ss, item, ';')) a.push_back(detail::parse_double("coeffs", item));
    const int d = get_int("d", domain.dim());
    if (d != domain.dim()) throw KernelError("kernel d does not match the sphere dimension");
    return SphereSeriesKernel::explicit_list(d, std::move(a));
  }
  if (kind == "wendland") {
    detail::reject_unknown(kv, {"kind", "d", "k", "rho"});
    if (sphere) throw KernelError("kind=wendland requires a Euclidean domain");
    return EuclidRadialKernel(RadialProfile::wendland(get_int("d", domain.dim()), get_int("k", 1), get_double("rho", 1.0)),
                              domain.dim());
  }
  if (kind == "matern") {
    detail::reject_unknown(kv, {"kind", "m", "s", "rho"});
    if (sphere) throw KernelError("kind=matern requires a Euclidean domain");
    if (!kv.count("s")) throw KernelError("kind=matern needs key 's' (Sobolev exponent of the decay condition)");
    return EuclidRadialKernel(RadialProfile::matern(get_int("m", 1), get_double("s", 0.0), get_double("rho", 1.0)),
                              domain.dim());
  }
  throw KernelError("unknown kernel kind '" + kind + "'");
}

/// Inverse of `kernel_from_config` (sphere kernels always echo N_max).
inline KeyValues kernel_to_config(const Kernel& k) {
  KeyValues kv;
  if (const auto* s = std::get_if<SphereSeriesKernel>(&k)) {
    kv["d"] = std::to_string(s->sphere_dim());
    if (const auto* pl = std::get_if<PowerLawRule>(&s->rule())) {
      kv["kind"] = "powerlaw";
      kv["tau"] = detail::format_double(pl->tau);
      kv["A"] = detail::format_double(pl->amplitude);
      kv["N_max"] = std::to_string(s->n_max());
    } else {
      kv["kind"] = "list";
      std::string joined;
      for (double c : s->coeffs()) joined += (joined.empty() ? "" : ";") + detail::format_double(c);
      kv["coeffs"] = joined;
    }
    return kv;
  }
  const auto& p = std::get<EuclidRadialKernel>(k).profile();
  kv["rho"] = detail::format_double(p.rho());
  if (p.family() == RadialProfile::Family::wendland) {
    kv["kind"] = "wendland";
    kv["d"] = std::to_string(p.dim_param());
    kv["k"] = std::to_string(p.order());
  } else {
    kv["kind"] = "matern";
    kv["m"] = std::to_string(p.order());
    kv["s"] = detail::format_double(p.smoothness());
  }
  return kv;
}

}  // namespace phispline
