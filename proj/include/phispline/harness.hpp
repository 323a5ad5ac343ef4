#pragma once

// Convergence studies: targets of prescribed smoothness, multi-level
// interpolation runs, log-log slope fits and predicted exponents.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "phispline/error.hpp"
#include "phispline/geometry.hpp"
#include "phispline/interpolation.hpp"
#include "phispline/kernels.hpp"
#include "phispline/orthopoly.hpp"
#include "phispline/spectral.hpp"

namespace phispline {

/// Shortest round-trip decimal form; "nan"/"inf"/"-inf" for non-finite values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Metrics.

enum class StudyMetric { sup, sup_inner, l2, native_residual, pseudo_sup, pseudo_l2 };

inline std::string to_string(StudyMetric m) {
  switch (m) {
    case StudyMetric::sup: return "sup";
    case StudyMetric::sup_inner: return "sup-inner";
    case StudyMetric::l2: return "l2";
    case StudyMetric::native_residual: return "native-residual";
    case StudyMetric::pseudo_sup: return "pseudo-sup";
    case StudyMetric::pseudo_l2: return "pseudo-l2";
  }
  return "unknown";
}

inline StudyMetric parse_metric(const std::string& name) {
  for (auto m : {StudyMetric::sup, StudyMetric::sup_inner, StudyMetric::l2, StudyMetric::native_residual,
                 StudyMetric::pseudo_sup, StudyMetric::pseudo_l2})
    if (to_string(m) == name) return m;
  throw Error("unknown metric '" + name + "'");
}

inline bool is_pseudo(StudyMetric m) { return m == StudyMetric::pseudo_sup || m == StudyMetric::pseudo_l2; }

/// One-sided acceptance margin: fitted >= predicted - tolerance.
inline double rate_tolerance(StudyMetric m) { return is_pseudo(m) ? 0.4 : 0.35; }

// ---------------------------------------------------------------------------
// Targets.

struct TargetSpec {
  enum class Kind { zonal_powerlaw, zonal_bandlimited, euclid_bump, euclid_kernel_translate, synthetic };
  Kind kind = Kind::zonal_powerlaw;

  // zonal kinds
  double beta = 5.0;
  std::uint64_t sign_seed = 0;
  std::optional<int> n_max;  // defaults to the kernel's truncation
  int n_b = 0;
  std::vector<double> pole;  // defaults to default_pole(d)

  // Euclidean kinds
  int bump_dim = 1;
  int bump_k = 1;
  double bump_rho = 0.2;
  std::vector<double> center;  // defaults to the domain's midpoint

  // synthetic: every metric equals h^power exactly
  double power = 2.0;

  static TargetSpec zonal_powerlaw(double beta, std::uint64_t seed = 0) {
    TargetSpec t;
    t.kind = Kind::zonal_powerlaw;
    t.beta = beta;
    t.sign_seed = seed;
    return t;
  }
  static TargetSpec zonal_bandlimited(int n_b) {
    TargetSpec t;
    t.kind = Kind::zonal_bandlimited;
    t.n_b = n_b;
    return t;
  }
  static TargetSpec euclid_bump(int d, int k, double rho, std::vector<double> center = {}) {
    TargetSpec t;
    t.kind = Kind::euclid_bump;
    t.bump_dim = d;
    t.bump_k = k;
    t.bump_rho = rho;
    t.center = std::move(center);
    return t;
  }
  static TargetSpec euclid_kernel_translate(std::vector<double> center = {}) {
    TargetSpec t;
    t.kind = Kind::euclid_kernel_translate;
    t.center = std::move(center);
    return t;
  }
  static TargetSpec synthetic(double power) {
    TargetSpec t;
    t.kind = Kind::synthetic;
    t.power = power;
    return t;
  }
};

/// Fixed tilted pole, away from the Fibonacci spiral's axis points.
inline std::vector<double> default_pole(int d) {
  std::vector<double> p(static_cast<std::size_t>(d) + 1, 0.1);
  p[0] = 0.2;
  if (d >= 2) p[1] = 0.3;
  p[static_cast<std::size_t>(d)] = 0.93;
  double n = 0.0;
  for (double v : p) n += v * v;
  for (double& v : p) v /= std::sqrt(n);
  return p;
}

namespace detail {

inline std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) out.push_back(parse_double(key, item));
  if (out.empty()) throw KernelError("key '" + key + "': empty list");
  return out;
}

inline std::string join_list(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ";") + format_number(x);
  return s;
}

inline void reject_unknown_target(const KeyValues& kv, std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : kv) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw Error("unknown target key '" + key + "'");
  }
}

}  // namespace detail

/// Target keys:
///   kind=zonal        beta, seed, n_max, pole (semicolon list)
///   kind=bandlimited  nb, pole
///   kind=bump         d, k, rho, center
///   kind=translate    center
///   kind=synthetic    p
inline TargetSpec target_from_config(const KeyValues& kv) {
  if (!kv.count("kind")) throw Error("target config needs key 'kind'");
  const std::string kind = kv.at("kind");
  auto num = [&](const char* key, double fallback) {
    return kv.count(key) ? detail::parse_double(key, kv.at(key)) : fallback;
  };
  auto integer = [&](const char* key, int fallback) {
    return kv.count(key) ? detail::parse_int(key, kv.at(key)) : fallback;
  };
  TargetSpec t;
  if (kind == "zonal") {
    detail::reject_unknown_target(kv, {"kind", "beta", "seed", "n_max", "pole"});
    if (!kv.count("beta")) throw Error("kind=zonal needs key 'beta'");
    t = TargetSpec::zonal_powerlaw(num("beta", 0.0), static_cast<std::uint64_t>(integer("seed", 0)));
    if (kv.count("n_max")) t.n_max = integer("n_max", 0);
  } else if (kind == "bandlimited") {
    detail::reject_unknown_target(kv, {"kind", "nb", "pole"});
    if (!kv.count("nb")) throw Error("kind=bandlimited needs key 'nb'");
    t = TargetSpec::zonal_bandlimited(integer("nb", 0));
  } else if (kind == "bump") {
    detail::reject_unknown_target(kv, {"kind", "d", "k", "rho", "center"});
    t = TargetSpec::euclid_bump(integer("d", 1), integer("k", 1), num("rho", 0.2));
  } else if (kind == "translate") {
    detail::reject_unknown_target(kv, {"kind", "center"});
    t = TargetSpec::euclid_kernel_translate();
  } else if (kind == "synthetic") {
    detail::reject_unknown_target(kv, {"kind", "p"});
    t = TargetSpec::synthetic(num("p", 2.0));
  } else {
    throw Error("unknown target kind '" + kind + "'");
  }
  if (kv.count("pole")) t.pole = detail::parse_list("pole", kv.at("pole"));
  if (kv.count("center")) t.center = detail::parse_list("center", kv.at("center"));
  return t;
}

inline KeyValues target_to_config(const TargetSpec& t) {
  KeyValues kv;
  switch (t.kind) {
    case TargetSpec::Kind::zonal_powerlaw:
      kv["kind"] = "zonal";
      kv["beta"] = format_number(t.beta);
      kv["seed"] = std::to_string(t.sign_seed);
      if (t.n_max) kv["n_max"] = std::to_string(*t.n_max);
      break;
    case TargetSpec::Kind::zonal_bandlimited:
      kv["kind"] = "bandlimited";
      kv["nb"] = std::to_string(t.n_b);
      break;
    case TargetSpec::Kind::euclid_bump:
      kv["kind"] = "bump";
      kv["d"] = std::to_string(t.bump_dim);
      kv["k"] = std::to_string(t.bump_k);
      kv["rho"] = format_number(t.bump_rho);
      break;
    case TargetSpec::Kind::euclid_kernel_translate:
      kv["kind"] = "translate";
      break;
    case TargetSpec::Kind::synthetic:
      kv["kind"] = "synthetic";
      kv["p"] = format_number(t.power);
      break;
  }
  if (!t.pole.empty()) kv["pole"] = detail::join_list(t.pole);
  if (!t.center.empty()) kv["center"] = detail::join_list(t.center);
  return kv;
}

/// Evaluable target with its smoothness descriptor and exact norm data.
///   sphere: smoothness() is the infimum sigma* of the orders sigma with
///           f in H_{Lambda phi} for the symbol (n(d+n-2))^sigma; -inf when
///           every order works (finite expansions).
///   Euclid: smoothness() is nu*, the supremum of nu with f in H^nu.
class Target {
 public:
  const TargetSpec& spec() const noexcept { return spec_; }
  bool on_sphere() const noexcept { return zonal_.has_value(); }
  bool synthetic() const noexcept { return spec_.kind == TargetSpec::Kind::synthetic; }
  double smoothness() const noexcept { return smoothness_; }
  const std::string& smoothness_note() const noexcept { return note_; }
  const ZonalExpansion& zonal() const {
    if (!zonal_) throw DomainError("target has no zonal expansion");
    return *zonal_;
  }
  /// ||f||_phi^2 (sphere targets only).
  std::optional<double> hphi_norm_sq() const noexcept { return hphi_sq_; }

  /// ||f||_{Lambda phi}^2, or nothing when f is not in H_{Lambda phi}.
  std::optional<double> hlambdaphi_norm_sq(const PseudoDiffSymbol& sym) const {
    if (!zonal_ || !sphere_kernel_) return std::nullopt;
    try {
      return phispline::hlambdaphi_norm_sq(*zonal_, *sphere_kernel_, sym);
    } catch (const DomainError&) {
      return std::nullopt;
    }
  }

  std::vector<double> evaluate_many(const PointSet& pts) const {
    if (zonal_) return zonal_->evaluate_many(pts);
    if (!euclid_profile_) throw DomainError("synthetic targets cannot be evaluated");
    if (pts.dim() != center_.size()) throw DimensionError("target: dimension mismatch");
    std::vector<double> out(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) out[i] = (*euclid_profile_)(euclidean_distance(pts[i], center_));
    return out;
  }

 private:
  friend Target build_target(const TargetSpec&, const Kernel&, const Domain&);
  TargetSpec spec_;
  std::optional<ZonalExpansion> zonal_;
  std::optional<SphereSeriesKernel> sphere_kernel_;
  std::optional<RadialProfile> euclid_profile_;
  std::vector<double> center_;
  std::optional<double> hphi_sq_;
  double smoothness_ = 0.0;
  std::string note_;
};

inline Target build_target(const TargetSpec& spec, const Kernel& k, const Domain& domain) {
  Target t;
  t.spec_ = spec;
  const bool sphere = domain.kind() == Domain::Kind::sphere;
  if (spec.kind == TargetSpec::Kind::synthetic) {
    t.smoothness_ = spec.power;
    t.note_ = "synthetic fixture e = h^p";
    return t;
  }
  const bool zonal = spec.kind == TargetSpec::Kind::zonal_powerlaw || spec.kind == TargetSpec::Kind::zonal_bandlimited;
  if (zonal != sphere) throw DomainError("target kind does not match the domain");

  if (zonal) {
    const auto* sk = std::get_if<SphereSeriesKernel>(&k);
    if (!sk) throw KernelError("zonal targets need a sphere series kernel");
    const int d = domain.dim();
    std::vector<double> pole = spec.pole.empty() ? default_pole(d) : spec.pole;
    if (pole.size() != static_cast<std::size_t>(d) + 1) throw DimensionError("target pole has the wrong dimension");
    std::vector<double> c;
    if (spec.kind == TargetSpec::Kind::zonal_powerlaw) {
      if (const auto* pl = std::get_if<PowerLawRule>(&sk->rule())) {
        // sum (1+n)^{2 tau - 2 beta} d_n < inf  <=>  beta > tau + d/2
        if (!(spec.beta > pl->tau + d / 2.0))
          throw DomainError("target outside native space; no rate estimate applies");
        t.smoothness_ = pl->tau - spec.beta / 2.0 + d / 4.0;
        t.note_ = "sigma* = tau - beta/2 + d/4 from summability of (lambda_n a_n)^-2 c_n^2 d_n";
      } else {
        t.smoothness_ = std::numeric_limits<double>::quiet_NaN();
        t.note_ = "non-power-law kernel; sigma* not derived";
      }
      const int top = spec.n_max.value_or(sk->n_max());
      if (top < 1 || top > sk->n_max()) throw DomainError("target n_max must lie in [1, kernel N_max]");
      c.assign(static_cast<std::size_t>(top) + 1, 0.0);
      std::mt19937_64 rng(spec.sign_seed);
      for (int n = 1; n <= top; ++n) {
        const double sign = (rng() >> 63) ? -1.0 : 1.0;
        c[n] = sign * std::pow(1.0 + n, -spec.beta);
      }
    } else {
      if (spec.n_b < 0 || spec.n_b > sk->n_max()) throw DomainError("band limit must lie in [0, kernel N_max]");
      c.assign(static_cast<std::size_t>(spec.n_b) + 1, 0.0);
      std::mt19937_64 rng(spec.sign_seed);
      for (int n = 0; n <= spec.n_b; ++n) {
        const double sign = n == 0 ? 1.0 : ((rng() >> 63) ? -1.0 : 1.0);
        c[n] = sign / (1.0 + n);
      }
      t.smoothness_ = -std::numeric_limits<double>::infinity();
      t.note_ = "band-limited; every order sigma";
    }
    t.zonal_.emplace(SpherePoint(pole), std::move(c));
    t.sphere_kernel_ = *sk;
    t.hphi_sq_ = hphi_norm_sq(*t.zonal_, *sk);
    return t;
  }

  const auto* ek = std::get_if<EuclidRadialKernel>(&k);
  if (!ek) throw KernelError("Euclidean targets need a radial kernel");
  const int d = domain.dim();
  t.center_ = spec.center;
  if (t.center_.empty()) {
    if (domain.kind() == Domain::Kind::box) {
      for (int a = 0; a < d; ++a) t.center_.push_back(0.5 * (domain.lower()[a] + domain.upper()[a]));
    } else {
      t.center_ = domain.center();
    }
  }
  if (t.center_.size() != static_cast<std::size_t>(d)) throw DimensionError("target center has the wrong dimension");
  if (spec.kind == TargetSpec::Kind::euclid_bump) {
    const RadialProfile bump = RadialProfile::wendland(spec.bump_dim, spec.bump_k, spec.bump_rho);
    if (spec.bump_dim < d) throw DomainError("bump profile is not positive definite in this dimension");
    // Support must sit strictly inside the domain.
    if (domain.kind() == Domain::Kind::box) {
      for (int a = 0; a < d; ++a)
        if (!(t.center_[a] - spec.bump_rho > domain.lower()[a] && t.center_[a] + spec.bump_rho < domain.upper()[a]))
          throw DomainError("bump support is not strictly inside the domain");
    } else if (!(euclidean_distance(t.center_, domain.center()) + spec.bump_rho < domain.radius())) {
      throw DomainError("bump support is not strictly inside the domain");
    }
    const double s_target = bump.smoothness();
    t.smoothness_ = 2.0 * s_target - d / 2.0;
    t.note_ = "nu* = 2 s_target - d/2 with s_target = (d+2k+1)/2";
    t.euclid_profile_ = bump;
  } else {
    t.smoothness_ = 2.0 * ek->smoothness() - d / 2.0;
    t.note_ = "nu* = 2 s - d/2 for a kernel translate";
    t.euclid_profile_ = ek->profile();
  }
  return t;
}

// ---------------------------------------------------------------------------
// Predicted rates.

struct RateScenario {
  bool sphere = true;
  int d = 2;
  /// tau for sphere power-law kernels, s for Euclidean kernels; NaN when unknown.
  double kernel_smoothness = 2.0;
  /// sigma* on the sphere, nu* in Euclidean space.
  double target_smoothness = 0.0;
  StudyMetric metric = StudyMetric::sup;
  double sigma_op = 0.5;
};

struct PredictedRate {
  std::optional<double> exponent;
  /// Free text without commas (it lands in a CSV cell).
  std::string provenance;
};

inline PredictedRate predicted_rate(const RateScenario& sc) {
  PredictedRate r;
  if (std::isnan(sc.kernel_smoothness) || std::isnan(sc.target_smoothness)) {
    r.provenance = "no power-law description of kernel or target; no prediction";
    return r;
  }
  const double d = sc.d;
  if (!sc.sphere) {
    const double s = sc.kernel_smoothness;
    const double nu = std::min(sc.target_smoothness, 2.0 * s);
    const std::string cap = sc.target_smoothness > 2.0 * s ? " (nu capped at 2s)" : "";
    switch (sc.metric) {
      case StudyMetric::sup:
      case StudyMetric::sup_inner:
        r.exponent = nu - d / 2.0;
        r.provenance = "Euclidean sup rate h^{nu - d/2} for s < nu <= 2s" + cap;
        return r;
      case StudyMetric::l2:
        r.exponent = nu;
        r.provenance = "L2 analogue h^{nu} of the Euclidean rate; extrapolated" + cap;
        return r;
      default:
        throw Error("metric '" + to_string(sc.metric) + "' is defined on the sphere only");
    }
  }

  const double tau = sc.kernel_smoothness;
  const double native = tau - d / 2.0;
  const double sigma = std::max(sc.target_smoothness, 0.0);
  const bool degenerate = sigma >= native / 2.0;
  const std::string tails =
      "tails sum_{n>N} n^p ~ N^{p+1} with a_n ~ n^{-2tau}; d_n ~ n^{d-1}; N = floor(1/(2h))";
  // Rate of ||f - S||_phi: the factor cancelled in the intermediate-space bound.
  const double residual = degenerate ? 0.0 : native - 2.0 * sigma;
  switch (sc.metric) {
    case StudyMetric::sup:
    case StudyMetric::l2:
      if (degenerate) {
        r.exponent = native;
        r.provenance = "native rate tau - d/2; note: sigma >= (tau - d/2)/2 so the intermediate tail "
                       "sum_{n>N} d_n lambda_n^2 a_n diverges; " + tails;
      } else {
        r.exponent = 2.0 * tau - d - 2.0 * sigma;
        r.provenance = "intermediate-space bound 2tau - d - 2sigma; " + tails;
      }
      return r;
    case StudyMetric::native_residual:
      r.exponent = residual;
      r.provenance = degenerate ? "||f-S||_phi only bounded (sigma at or past the degenerate limit); " + tails
                                : "||f-S||_phi rate tau - d/2 - 2sigma from the cancelled factor; " + tails;
      return r;
    case StudyMetric::pseudo_sup:
    case StudyMetric::pseudo_l2: {
      const double op = native - 2.0 * sc.sigma_op;
      r.exponent = op + residual;
      r.provenance = "pseudodifferential bound (tau - d/2 - 2sigma_op) + native-residual rate";
      // sum_{n>N} d_n lambda_n^2 a_n ~ N^{d + 4 sigma_op - 2 tau}
      if (d + 4.0 * sc.sigma_op - 2.0 * tau >= 0.0)
        r.provenance += "; note: sum d_n lambda_n^2 a_n diverges (log-divergent at equality) so the "
                        "hypothesis fails and the exponent is formal";
      r.provenance += "; " + tails;
      return r;
    }
    case StudyMetric::sup_inner:
      throw Error("metric 'sup-inner' is defined on Euclidean boxes only");
  }
  return r;
}

// ---------------------------------------------------------------------------
// Slope fitting.

/// Least-squares slope of log e against log h over pairs with e > floor.
inline double fit_slope(const std::vector<std::pair<double, double>>& pairs, double floor = 1e-13) {
  std::vector<std::pair<double, double>> logs;
  for (const auto& [h, e] : pairs)
    if (std::isfinite(h) && std::isfinite(e) && h > 0.0 && e > floor) logs.emplace_back(std::log(h), std::log(e));
  if (logs.size() < 3) throw Error("fit_slope: need at least 3 usable (h, e) pairs, have " + std::to_string(logs.size()));
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : logs) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(logs.size());
  my /= static_cast<double>(logs.size());
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [x, y] : logs) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (sxx <= 0.0) throw Error("fit_slope: all h values coincide");
  return sxy / sxx;
}

/// Fraction of consecutive pairs (after the first level) with e_{i+1} <= e_i.
inline double monotone_fraction(const std::vector<double>& errors) {
  if (errors.size() < 3) return 1.0;
  std::size_t ok = 0, total = 0;
  for (std::size_t i = 1; i + 1 < errors.size(); ++i) {
    ++total;
    if (errors[i + 1] <= errors[i]) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(total);
}

// ---------------------------------------------------------------------------
// Studies.

struct StudyConfig {
  Domain domain = Domain::sphere(2);
  Kernel kernel = SphereSeriesKernel::power_law(2, 2.0, 1.0, 300);
  TargetSpec target;
  /// Point counts, strictly increasing.
  std::vector<std::size_t> levels;
  std::optional<Generator> generator;
  std::uint64_t seed = 0;
  /// 0 selects 2e4 on the sphere and 1e4 in Euclidean domains.
  std::size_t eval_grid_size = 0;
  std::size_t candidate_grid_size = 100000;
  std::vector<StudyMetric> metrics = {StudyMetric::sup};
  double sigma_op = 0.5;
  double cond_limit = 1e12;
  double floor = 1e-13;
};

struct LevelRow {
  std::size_t level = 0;
  std::size_t n_points = 0;
  double h = 0.0;
  double cond = 0.0;
  bool usable = true;
  std::string note;
  std::vector<double> metrics;  // same order as the report's metric list
};

struct SlopeEntry {
  StudyMetric metric;
  std::optional<double> fitted;
  std::size_t levels_used = 0;
  PredictedRate predicted;
};

struct ConvergenceReport {
  StudyConfig config;
  std::vector<LevelRow> rows;  // sorted by decreasing h
  std::vector<SlopeEntry> slopes;

  std::vector<double> column(StudyMetric m) const {
    const auto it = std::find(config.metrics.begin(), config.metrics.end(), m);
    if (it == config.metrics.end()) throw Error("metric '" + to_string(m) + "' was not recorded");
    const auto idx = static_cast<std::size_t>(it - config.metrics.begin());
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(r.metrics[idx]);
    return out;
  }

  const SlopeEntry& slope(StudyMetric m) const {
    for (const auto& s : slopes)
      if (s.metric == m) return s;
    throw Error("metric '" + to_string(m) + "' was not recorded");
  }
};

namespace detail {

inline PointSet evaluation_grid(const Domain& domain, std::size_t count) {
  if (domain.kind() == Domain::Kind::sphere) {
    if (domain.dim() != 2) throw DomainError("evaluation grids on S^d exist for d = 2 only");
    return generate_points(domain, Generator::fibonacci_sphere, count);
  }
  return candidate_grid(domain, count);
}

inline PointSet inner_box(const PointSet& grid, const Domain& domain) {
  std::vector<double> flat;
  const std::size_t dim = grid.dim();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto x = grid[i];
    bool inside = true;
    for (std::size_t a = 0; a < dim; ++a) {
      const double lo = domain.lower()[a], hi = domain.upper()[a], w = hi - lo;
      inside = inside && x[a] >= lo + 0.1 * w - 1e-12 && x[a] <= hi - 0.1 * w + 1e-12;
    }
    if (inside) flat.insert(flat.end(), x.begin(), x.end());
  }
  return PointSet(grid.metric(), dim, std::move(flat));
}

inline void validate_study(const StudyConfig& cfg) {
  if (cfg.levels.size() < 3) throw Error("study needs at least 3 levels");
  for (std::size_t i = 1; i < cfg.levels.size(); ++i)
    if (cfg.levels[i] <= cfg.levels[i - 1]) throw Error("study levels must be strictly increasing point counts");
  if (cfg.metrics.empty()) throw Error("study needs at least one metric");
  const bool sphere = cfg.domain.kind() == Domain::Kind::sphere;
  if (sphere != is_sphere_kernel(cfg.kernel)) throw KernelError("kernel does not match the domain");
  if (cfg.target.kind == TargetSpec::Kind::synthetic) return;
  for (auto m : cfg.metrics) {
    if (m == StudyMetric::sup_inner && cfg.domain.kind() != Domain::Kind::box)
      throw Error("metric 'sup-inner' needs a box domain");
    if ((m == StudyMetric::native_residual || is_pseudo(m)) && !sphere)
      throw Error("metric '" + to_string(m) + "' needs a sphere domain");
    if ((m == StudyMetric::l2 || m == StudyMetric::pseudo_l2) && sphere && cfg.domain.dim() != 2)
      throw Error("quadrature L2 metrics exist on S^2 only");
  }
}

inline RateScenario scenario_for(const StudyConfig& cfg, const Target& target, StudyMetric m) {
  RateScenario sc;
  sc.sphere = cfg.domain.kind() == Domain::Kind::sphere;
  sc.d = cfg.domain.dim();
  sc.metric = m;
  sc.sigma_op = cfg.sigma_op;
  sc.target_smoothness = target.smoothness();
  if (const auto* sk = std::get_if<SphereSeriesKernel>(&cfg.kernel)) {
    const auto* pl = std::get_if<PowerLawRule>(&sk->rule());
    sc.kernel_smoothness = pl ? pl->tau : std::numeric_limits<double>::quiet_NaN();
  } else {
    sc.kernel_smoothness = std::get<EuclidRadialKernel>(cfg.kernel).smoothness();
  }
  return sc;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double weighted_l2_diff(const std::vector<double>& a, const std::vector<double>& b, const SphereQuadrature& q) {
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  return l2_norm(std::span<const double>(diff), q);
}

}  // namespace detail

inline ConvergenceReport run_study(const StudyConfig& cfg) {
  detail::validate_study(cfg);
  const Target target = build_target(cfg.target, cfg.kernel, cfg.domain);
  const bool sphere = cfg.domain.kind() == Domain::Kind::sphere;
  const Generator gen = cfg.generator.value_or(default_generator(cfg.domain));
  const PointSet candidates = candidate_grid(cfg.domain, cfg.candidate_grid_size);

  auto wants = [&](StudyMetric m) { return std::find(cfg.metrics.begin(), cfg.metrics.end(), m) != cfg.metrics.end(); };
  const bool need_grid = !target.synthetic() && (wants(StudyMetric::sup) || wants(StudyMetric::sup_inner) ||
                                                 wants(StudyMetric::pseudo_sup) || (!sphere && wants(StudyMetric::l2)));
  const bool need_quad = !target.synthetic() && sphere && (wants(StudyMetric::l2) || wants(StudyMetric::pseudo_l2));
  const bool need_pseudo = !target.synthetic() && (wants(StudyMetric::pseudo_sup) || wants(StudyMetric::pseudo_l2));

  const std::size_t grid_size = cfg.eval_grid_size ? cfg.eval_grid_size : (sphere ? 20000 : 10000);
  std::optional<PointSet> grid, inner;
  std::vector<double> f_grid, f_inner;
  if (need_grid) {
    grid = detail::evaluation_grid(cfg.domain, grid_size);
    f_grid = target.evaluate_many(*grid);
    if (wants(StudyMetric::sup_inner)) {
      inner = detail::inner_box(*grid, cfg.domain);
      f_inner = target.evaluate_many(*inner);
    }
  }

  std::optional<PseudoDiffSymbol> symbol;
  std::optional<ZonalExpansion> lambda_f;
  std::vector<double> lf_grid;
  if (need_pseudo) {
    const auto& sk = std::get<SphereSeriesKernel>(cfg.kernel);
    symbol = PseudoDiffSymbol::assumption(sk.sphere_dim(), cfg.sigma_op, sk.n_max());
    lambda_f = apply_pseudodiff(*symbol, target.zonal());
    if (wants(StudyMetric::pseudo_sup)) lf_grid = lambda_f->evaluate_many(*grid);
  }

  std::optional<SphereQuadrature> quad;
  std::vector<double> f_quad, lf_quad;
  if (need_quad) {
    const auto& sk = std::get<SphereSeriesKernel>(cfg.kernel);
    quad = SphereQuadrature::for_degree(std::max(sk.n_max(), target.zonal().n_max()));
    if (wants(StudyMetric::l2)) f_quad = target.evaluate_many(quad->nodes());
    if (wants(StudyMetric::pseudo_l2)) lf_quad = lambda_f->evaluate_many(quad->nodes());
  }

  ConvergenceReport report;
  report.config = cfg;
  const std::size_t nm = cfg.metrics.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (std::size_t lvl = 0; lvl < cfg.levels.size(); ++lvl) {
    LevelRow row;
    row.level = lvl;
    row.metrics.assign(nm, nan);
    const PointSet Y = generate_points(cfg.domain, gen, cfg.levels[lvl], cfg.seed);
    row.n_points = Y.size();
    row.h = fill_distance_on(Y, candidates);

    if (target.synthetic()) {
      row.cond = 1.0;
      for (std::size_t m = 0; m < nm; ++m) row.metrics[m] = std::pow(row.h, target.smoothness());
      report.rows.push_back(std::move(row));
      continue;
    }

    try {
      const Interpolant s = build_interpolant(cfg.kernel, Y, target.evaluate_many(Y));
      row.cond = s.condition_estimate();

      // S and Lambda S share one recurrence pass over the centers.
      auto evaluate_pair = [&](const PointSet& pts, bool with_pseudo) {
        if (!sphere) return std::vector<std::vector<double>>{s.evaluate_many(pts)};
        const auto& sk = std::get<SphereSeriesKernel>(cfg.kernel);
        std::vector<std::vector<double>> profiles{std::vector<double>(sk.coeffs().begin(), sk.coeffs().end())};
        if (with_pseudo) {
          std::vector<double> p = profiles[0];
          for (std::size_t n = 0; n < p.size(); ++n) p[n] *= (*symbol)[n];
          profiles.push_back(std::move(p));
        }
        return evaluate_profiles(sk.basis(), s.centers(), s.coefficients(), profiles, pts);
      };

      std::vector<std::vector<double>> on_grid, on_quad;
      if (grid) on_grid = evaluate_pair(*grid, wants(StudyMetric::pseudo_sup));
      if (quad) on_quad = evaluate_pair(quad->nodes(), wants(StudyMetric::pseudo_l2));

      for (std::size_t m = 0; m < nm; ++m) {
        switch (cfg.metrics[m]) {
          case StudyMetric::sup:
            row.metrics[m] = detail::max_abs_diff(f_grid, on_grid[0]);
            break;
          case StudyMetric::sup_inner:
            row.metrics[m] = detail::max_abs_diff(f_inner, s.evaluate_many(*inner));
            break;
          case StudyMetric::l2:
            if (sphere) {
              row.metrics[m] = detail::weighted_l2_diff(f_quad, on_quad[0], *quad);
            } else {
              // Riemann sum over the uniform evaluation grid, scaled by the domain volume.
              double acc = 0.0;
              for (std::size_t i = 0; i < f_grid.size(); ++i) acc += (f_grid[i] - on_grid[0][i]) * (f_grid[i] - on_grid[0][i]);
              row.metrics[m] = std::sqrt(acc / static_cast<double>(f_grid.size()) * cfg.domain.volume());
            }
            break;
          case StudyMetric::native_residual: {
            const auto pr = pythagoras_check(*target.hphi_norm_sq(), s);
            row.metrics[m] = std::sqrt(std::max(0.0, pr.residual_norm_sq));
            break;
          }
          case StudyMetric::pseudo_sup:
            row.metrics[m] = detail::max_abs_diff(lf_grid, on_grid.back());
            break;
          case StudyMetric::pseudo_l2:
            row.metrics[m] = detail::weighted_l2_diff(lf_quad, on_quad.back(), *quad);
            break;
        }
      }
    } catch (const FactorizationError& e) {
      row.usable = false;
      row.cond = e.condition_estimate();
      row.note = std::string("factorization failed: ") + e.what();
      row.metrics.assign(nm, nan);
    } catch (const Error& e) {
      row.usable = false;
      row.note = e.what();
      row.metrics.assign(nm, nan);
    }
    report.rows.push_back(std::move(row));
  }

  std::stable_sort(report.rows.begin(), report.rows.end(), [](const LevelRow& a, const LevelRow& b) { return a.h > b.h; });
  std::size_t usable = 0;
  for (const auto& r : report.rows) usable += r.usable ? 1 : 0;
  if (usable < 3) throw Error("study produced " + std::to_string(usable) + " usable levels; at least 3 are required");

  for (std::size_t m = 0; m < nm; ++m) {
    SlopeEntry entry{cfg.metrics[m], std::nullopt, 0, {}};
    std::vector<std::pair<double, double>> pairs;
    for (const auto& r : report.rows)
      if (r.usable && r.cond <= cfg.cond_limit && r.metrics[m] > cfg.floor) pairs.emplace_back(r.h, r.metrics[m]);
    entry.levels_used = pairs.size();
    if (pairs.size() >= 3) entry.fitted = fit_slope(pairs, cfg.floor);
    if (target.synthetic()) {
      entry.predicted = {target.smoothness(), "synthetic fixture e = h^p"};
    } else {
      entry.predicted = predicted_rate(detail::scenario_for(cfg, target, cfg.metrics[m]));
    }
    report.slopes.push_back(std::move(entry));
  }
  return report;
}

/// Metrics whose fitted slope misses predicted - tolerance (or has no fit).
inline std::vector<std::string> rate_failures(const ConvergenceReport& r) {
  std::vector<std::string> out;
  for (const auto& s : r.slopes) {
    if (!s.predicted.exponent) continue;
    if (!s.fitted) {
      out.push_back(to_string(s.metric) + ": no fitted slope");
    } else if (*s.fitted < *s.predicted.exponent - rate_tolerance(s.metric)) {
      out.push_back(to_string(s.metric) + ": fitted " + format_number(*s.fitted) + " < predicted " +
                    format_number(*s.predicted.exponent) + " - " + format_number(rate_tolerance(s.metric)));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report output.

inline void write_report_csv(const ConvergenceReport& r, std::ostream& os) {
  os << "level,n_points,h,cond";
  for (auto m : r.config.metrics) os << ",metric:" << to_string(m);
  os << '\n';
  for (const auto& row : r.rows) {
    os << row.level << ',' << row.n_points << ',' << format_number(row.h) << ',' << format_number(row.cond);
    for (double v : row.metrics) os << ',' << format_number(v);
    os << '\n';
  }
  for (const auto& s : r.slopes)
    if (s.fitted) os << "fitted:" << to_string(s.metric) << ',' << format_number(*s.fitted) << '\n';
  for (const auto& s : r.slopes)
    os << "predicted:" << to_string(s.metric) << ','
       << (s.predicted.exponent ? format_number(*s.predicted.exponent) : std::string("nan")) << ','
       << s.predicted.provenance << '\n';
}

inline nlohmann::ordered_json study_config_json(const StudyConfig& c) {
  nlohmann::ordered_json j;
  j["domain"] = c.domain.describe();
  j["kernel"] = kernel_to_config(c.kernel);
  j["target"] = target_to_config(c.target);
  j["levels"] = c.levels;
  j["generator"] = to_string(c.generator.value_or(default_generator(c.domain)));
  j["seed"] = c.seed;
  j["eval_grid_size"] = c.eval_grid_size;
  j["candidate_grid_size"] = c.candidate_grid_size;
  std::vector<std::string> names;
  for (auto m : c.metrics) names.push_back(to_string(m));
  j["metrics"] = names;
  j["sigma_op"] = c.sigma_op;
  j["cond_limit"] = c.cond_limit;
  j["floor"] = c.floor;
  return j;
}

inline nlohmann::ordered_json report_json(const ConvergenceReport& r) {
  auto num = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["config"] = study_config_json(r.config);
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : r.rows) {
    nlohmann::ordered_json jr;
    jr["level"] = row.level;
    jr["n_points"] = row.n_points;
    jr["h"] = num(row.h);
    jr["cond"] = num(row.cond);
    jr["usable"] = row.usable;
    if (!row.note.empty()) jr["note"] = row.note;
    nlohmann::ordered_json jm;
    for (std::size_t m = 0; m < row.metrics.size(); ++m) jm[to_string(r.config.metrics[m])] = num(row.metrics[m]);
    jr["metrics"] = jm;
    j["rows"].push_back(jr);
  }
  j["slopes"] = nlohmann::ordered_json::array();
  for (const auto& s : r.slopes) {
    nlohmann::ordered_json js;
    js["metric"] = to_string(s.metric);
    js["fitted"] = s.fitted ? num(*s.fitted) : nlohmann::ordered_json(nullptr);
    js["levels_used"] = s.levels_used;
    js["predicted"] = s.predicted.exponent ? num(*s.predicted.exponent) : nlohmann::ordered_json(nullptr);
    js["provenance"] = s.predicted.provenance;
    j["slopes"].push_back(js);
  }
  return j;
}

}  // namespace phispline
