#pragma once

// Command-line driver. `run` is the whole program minus process plumbing so
// tests can call it with their own streams.

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "phispline/harness.hpp"
#include "phispline/io.hpp"
#include "phispline/spectral.hpp"

namespace phispline::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_error = 1;
inline constexpr int exit_rates = 2;

/// "kind:key=value,key=value" or just "kind".
inline KeyValues parse_spec_flag(const std::string& text, const char* what) {
  const std::size_t colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  if (kind.empty()) throw Error(std::string(what) + " spec needs a kind before ':'");
  KeyValues kv = colon == std::string::npos ? KeyValues{} : parse_key_values(text.substr(colon + 1));
  if (kv.count("kind")) throw Error(std::string(what) + " spec: give the kind before ':' only");
  kv["kind"] = kind;
  return kv;
}

inline std::vector<std::size_t> parse_levels(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t v = 0;
    const auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc() || res.ptr != item.data() + item.size() || v == 0)
      throw Error("--levels: '" + item + "' is not a positive integer");
    out.push_back(v);
  }
  return out;
}

inline PseudoDiffSymbol parse_symbol(const std::string& text, int d, int n_max) {
  if (text == "identity") return PseudoDiffSymbol::identity(n_max);
  if (text.rfind("s=", 0) == 0) return PseudoDiffSymbol::assumption(d, detail::parse_double("s", text.substr(2)), n_max);
  throw Error("--symbol: expected 's=<order>' or 'identity', got '" + text + "'");
}

namespace detail {

struct Common {
  std::string domain;
  std::string kernel;
  std::string format = "csv";
  std::string output;
  std::uint64_t seed = 0;
};

inline void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--domain", c.domain, "sphere<d> | interval | box<d> | ball<d>")->required();
  sub->add_option("--kernel", c.kernel,
                  "kind:key=value,...  kinds: powerlaw (d,tau,A,N_max) | list (d,coeffs a;b;c) | "
                  "wendland (d,k,rho) | matern (m,s,rho)")
      ->required();
  sub->add_option("--format", c.format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--output", c.output, "output path (default: standard output)");
  sub->add_option("--seed", c.seed, "seed for Halton offsets");
}

/// Writes `text` to the output path or stream.
inline void emit(const Common& c, const std::string& text, std::ostream& out) {
  if (c.output.empty()) {
    out << text;
    return;
  }
  std::ofstream f(c.output, std::ios::binary);
  if (!f) throw IoError("cannot open '" + c.output + "' for writing");
  f << text;
  if (!f) throw IoError("write to '" + c.output + "' failed");
}

inline std::string table_text(const std::string& format, const PointSet& pts, const std::vector<std::string>& names,
                              const std::vector<std::vector<double>>& cols) {
  std::ostringstream os;
  if (format == "csv") {
    write_point_csv(os, pts, names, cols);
    return os.str();
  }
  nlohmann::ordered_json j;
  j["schema"] = 1;
  std::vector<std::string> header;
  for (std::size_t a = 0; a < pts.dim(); ++a) header.push_back("x" + std::to_string(a));
  header.insert(header.end(), names.begin(), names.end());
  j["columns"] = header;
  j["rows"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (double v : pts[i]) row.push_back(v);
    for (const auto& c : cols) row.push_back(std::isfinite(c[i]) ? nlohmann::ordered_json(c[i]) : nlohmann::ordered_json(nullptr));
    j["rows"].push_back(row);
  }
  return j.dump(2) + "\n";
}

inline PointSet evaluation_points(const Domain& domain, std::size_t grid, const std::string& eval_path) {
  if (!eval_path.empty()) {
    PointTable t = read_point_csv_file(eval_path, domain.metric());
    if (t.points.size() > 0 && t.points.dim() != domain.coord_dim()) throw IoError("evaluation points have the wrong dimension");
    return std::move(t.points);
  }
  return phispline::detail::evaluation_grid(domain, grid);
}

inline std::string join_args(const std::vector<std::string>& args) {
  std::string s;
  for (const auto& a : args) s += (s.empty() ? "" : " ") + a;
  return s;
}

}  // namespace detail

/// Runs the program; args excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"phi-spline interpolation on spheres and Euclidean domains", "phispline"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  detail::Common common;

  // study
  auto* study = app.add_subcommand("study", "multi-level convergence study with slope fits");
  detail::add_common(study, common);
  std::string target_text, levels_text, metrics_text = "sup", generator_text;
  double sigma_op = 0.5, cond_limit = 1e12;
  std::size_t eval_grid = 0, candidates = 100000;
  bool assert_rates = false, dump_config = false;
  study->add_option("--target", target_text,
                    "kind:key=value,...  kinds: zonal (beta,seed,n_max,pole) | bandlimited (nb,pole) | "
                    "bump (d,k,rho,center) | translate (center) | synthetic (p)")
      ->required();
  study->add_option("--levels", levels_text, "comma list of point counts, strictly increasing")->required();
  study->add_option("--metrics", metrics_text, "comma list of sup,sup-inner,l2,native-residual,pseudo-sup,pseudo-l2");
  study->add_option("--sigma-op", sigma_op, "operator order for the pseudo metrics");
  study->add_option("--generator", generator_text, "fibonacci-sphere | uniform-grid | halton");
  study->add_option("--eval-grid", eval_grid, "evaluation grid size (0: 2e4 on S^2, 1e4 otherwise)");
  study->add_option("--candidates", candidates, "candidate grid size for the fill distance");
  study->add_option("--cond-limit", cond_limit, "levels above this condition estimate are left out of fits");
  study->add_flag("--assert-rates", assert_rates, "exit 2 when a fitted slope misses predicted - tolerance");
  study->add_flag("--dump-config", dump_config, "echo the command line into the JSON report");

  // interp
  auto* interp = app.add_subcommand("interp", "build one interpolant from a points+values CSV");
  detail::add_common(interp, common);
  std::string points_path, eval_path, grid_output;
  std::size_t grid = 0;
  interp->add_option("--points", points_path, "CSV with x0,x1,...,value")->required();
  interp->add_option("--grid", grid, "also evaluate on a generated grid of this size");
  interp->add_option("--eval", eval_path, "also evaluate at the points of this CSV");
  interp->add_option("--grid-output", grid_output, "path for the evaluated values");

  // power
  auto* power = app.add_subcommand("power", "power function over an evaluation grid");
  detail::add_common(power, common);
  power->add_option("--points", points_path, "CSV of centers (absent: empty set)");
  power->add_option("--grid", grid, "generated grid size");
  power->add_option("--eval", eval_path, "CSV of evaluation points");

  // pseudo
  auto* pseudo = app.add_subcommand("pseudo", "apply a pseudodifferential symbol to an interpolant");
  detail::add_common(pseudo, common);
  std::string interpolant_path, symbol_text;
  pseudo->add_option("--points", points_path, "CSV with x0,x1,...,value to interpolate");
  pseudo->add_option("--interpolant", interpolant_path, "interpolant CSV written by interp (sidecar <path>.json)");
  pseudo->add_option("--symbol", symbol_text, "s=<order> | identity")->required();
  pseudo->add_option("--grid", grid, "generated grid size");
  pseudo->add_option("--eval", eval_path, "CSV of evaluation points");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return exit_error;
  }

  try {
    const Domain domain = parse_domain(common.domain);
    const Kernel kernel = kernel_from_config(parse_spec_flag(common.kernel, "kernel"), domain);

    if (study->parsed()) {
      StudyConfig cfg;
      cfg.domain = domain;
      cfg.kernel = kernel;
      cfg.target = target_from_config(parse_spec_flag(target_text, "target"));
      cfg.levels = parse_levels(levels_text);
      cfg.metrics.clear();
      std::stringstream ms(metrics_text);
      std::string item;
      while (std::getline(ms, item, ',')) cfg.metrics.push_back(parse_metric(item));
      cfg.sigma_op = sigma_op;
      if (!generator_text.empty()) cfg.generator = parse_generator(generator_text);
      cfg.seed = common.seed;
      cfg.eval_grid_size = eval_grid;
      cfg.candidate_grid_size = candidates;
      cfg.cond_limit = cond_limit;
      if (dump_config && common.format != "json") throw Error("--dump-config needs --format json");

      const ConvergenceReport report = run_study(cfg);
      std::string text;
      if (common.format == "csv") {
        std::ostringstream os;
        write_report_csv(report, os);
        text = os.str();
      } else {
        auto j = report_json(report);
        if (dump_config) j["cli"] = {{"args", detail::join_args(args)}};
        text = j.dump(2) + "\n";
      }
      detail::emit(common, text, out);
      if (assert_rates) {
        const auto failures = rate_failures(report);
        for (const auto& f : failures) err << "rate check failed: " << f << '\n';
        if (!failures.empty()) return exit_rates;
      }
      return exit_ok;
    }

    if (interp->parsed()) {
      const PointTable table = read_point_csv_file(points_path, domain.metric());
      const auto* values = table.column("value");
      if (!values) throw IoError("'" + points_path + "' has no value column");
      const Interpolant s = build_interpolant(kernel, table.points, *values);
      std::ostringstream os;
      if (common.format == "csv") {
        write_interpolant_csv(os, s);
      } else {
        auto j = interpolant_sidecar(s, domain);
        std::ostringstream tab;
        write_interpolant_csv(tab, s);
        j["table"] = tab.str();
        os << j.dump(2) << '\n';
      }
      detail::emit(common, os.str(), out);
      if (!common.output.empty() && common.format == "csv") {
        detail::Common side = common;
        side.output += ".json";
        detail::emit(side, interpolant_sidecar(s, domain).dump(2) + "\n", out);
      }
      if (grid > 0 || !eval_path.empty()) {
        if (grid_output.empty()) throw Error("--grid/--eval need --grid-output");
        const PointSet pts = detail::evaluation_points(domain, grid, eval_path);
        detail::Common gout = common;
        gout.output = grid_output;
        detail::emit(gout, detail::table_text(common.format, pts, {"value"}, {s.evaluate_many(pts)}), out);
      }
      return exit_ok;
    }

    if (power->parsed()) {
      PointSet centers(domain.metric(), domain.coord_dim());
      if (!points_path.empty()) {
        PointTable t = read_point_csv_file(points_path, domain.metric());
        if (t.points.size() > 0) centers = std::move(t.points);
      }
      if (grid == 0 && eval_path.empty()) throw Error("power needs --grid or --eval");
      const PointSet pts = detail::evaluation_points(domain, grid, eval_path);
      const PowerFunction pf(kernel, centers);
      std::vector<double> p(pts.size());
      for (std::size_t i = 0; i < pts.size(); ++i) p[i] = pf(pts[i]);
      detail::emit(common, detail::table_text(common.format, pts, {"power"}, {p}), out);
      return exit_ok;
    }

    // pseudo
    const auto* sk = std::get_if<SphereSeriesKernel>(&kernel);
    if (!sk) throw Error("pseudo needs a sphere kernel");
    if (points_path.empty() == interpolant_path.empty()) throw Error("pseudo needs exactly one of --points and --interpolant");
    if (grid == 0 && eval_path.empty()) throw Error("pseudo needs --grid or --eval");
    PointSet centers(domain.metric(), domain.coord_dim());
    std::vector<double> alpha;
    if (!points_path.empty()) {
      const PointTable table = read_point_csv_file(points_path, domain.metric());
      const auto* values = table.column("value");
      if (!values) throw IoError("'" + points_path + "' has no value column");
      const Interpolant s = build_interpolant(kernel, table.points, *values);
      centers = s.centers();
      alpha.assign(s.coefficients().begin(), s.coefficients().end());
    } else {
      std::ifstream csv(interpolant_path), side(interpolant_path + ".json");
      if (!csv || !side) throw IoError("cannot open '" + interpolant_path + "' and its .json sidecar");
      InterpolantDump dump = read_interpolant_dump(csv, side);
      if (kernel_to_config(dump.kernel) != kernel_to_config(kernel))
        throw Error("--kernel differs from the kernel recorded in the interpolant sidecar");
      centers = std::move(dump.centers);
      alpha = std::move(dump.alpha);
    }
    const PseudoDiffSymbol sym = parse_symbol(symbol_text, sk->sphere_dim(), sk->n_max());
    const PointSet pts = detail::evaluation_points(domain, grid, eval_path);
    std::vector<double> profile(sk->coeffs().begin(), sk->coeffs().end());
    for (std::size_t n = 0; n < profile.size(); ++n) profile[n] *= sym[n];
    const auto values = evaluate_profiles(sk->basis(), centers, alpha, {profile}, pts);
    detail::emit(common, detail::table_text(common.format, pts, {"value"}, {values[0]}), out);
    return exit_ok;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_error;
  }
}

}  // namespace phispline::cli
