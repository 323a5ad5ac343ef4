#pragma once

// CSV point tables and interpolant dumps (CSV plus a JSON sidecar).

#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "phispline/error.hpp"
#include "phispline/geometry.hpp"
#include "phispline/harness.hpp"
#include "phispline/interpolation.hpp"
#include "phispline/kernels.hpp"

namespace phispline {

class IoError : public Error {
 public:
  using Error::Error;
};

/// Header `x0,x1,...` followed by optional named value columns.
struct PointTable {
  PointSet points{Metric::euclidean, 1};
  std::vector<std::string> value_names;
  std::vector<std::vector<double>> value_columns;

  const std::vector<double>* column(const std::string& name) const {
    for (std::size_t i = 0; i < value_names.size(); ++i)
      if (value_names[i] == name) return &value_columns[i];
    return nullptr;
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_cell(const std::string& cell, std::size_t line_no) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\r')) --last;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last)
    throw IoError("line " + std::to_string(line_no) + ": '" + cell + "' is not a number");
  return v;
}

}  // namespace detail

inline PointTable read_point_csv(std::istream& is, Metric metric) {
  std::string line;
  if (!std::getline(is, line)) throw IoError("point CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_csv_line(line);
  std::size_t dim = 0;
  while (dim < header.size() && header[dim] == "x" + std::to_string(dim)) ++dim;
  if (dim == 0) throw IoError("point CSV header must start with x0");
  PointTable table;
  for (std::size_t c = dim; c < header.size(); ++c) {
    if (header[c].empty() || header[c][0] == 'x') throw IoError("point CSV header: bad column '" + header[c] + "'");
    table.value_names.push_back(header[c]);
  }
  table.value_columns.resize(table.value_names.size());
  std::vector<double> flat;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw IoError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) + " cells");
    for (std::size_t c = 0; c < dim; ++c) flat.push_back(detail::parse_cell(cells[c], line_no));
    for (std::size_t c = dim; c < cells.size(); ++c) table.value_columns[c - dim].push_back(detail::parse_cell(cells[c], line_no));
  }
  table.points = PointSet(metric, dim, std::move(flat));
  return table;
}

inline PointTable read_point_csv_file(const std::string& path, Metric metric) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_point_csv(in, metric);
}

inline void write_point_csv(std::ostream& os, const PointSet& pts, const std::vector<std::string>& names = {},
                            const std::vector<std::vector<double>>& columns = {}) {
  if (names.size() != columns.size()) throw DimensionError("write_point_csv: names/columns mismatch");
  for (const auto& c : columns)
    if (c.size() != pts.size()) throw DimensionError("write_point_csv: column length differs from point count");
  for (std::size_t a = 0; a < pts.dim(); ++a) os << (a ? "," : "") << 'x' << a;
  for (const auto& n : names) os << ',' << n;
  os << '\n';
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto x = pts[i];
    for (std::size_t a = 0; a < x.size(); ++a) os << (a ? "," : "") << format_number(x[a]);
    for (const auto& c : columns) os << ',' << format_number(c[i]);
    os << '\n';
  }
}

/// Centers and coefficients of an interpolant together with its kernel.
struct InterpolantDump {
  Kernel kernel;
  std::string domain;
  PointSet centers;
  std::vector<double> alpha;
  double condition_estimate = 0.0;
};

inline void write_interpolant_csv(std::ostream& os, const Interpolant& s) {
  write_point_csv(os, s.centers(), {"alpha"}, {std::vector<double>(s.coefficients().begin(), s.coefficients().end())});
}

inline nlohmann::ordered_json interpolant_sidecar(const Interpolant& s, const Domain& domain) {
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["domain"] = domain.describe();
  j["kernel"] = kernel_to_config(s.kernel());
  j["n_centers"] = s.centers().size();
  j["condition_estimate"] = s.condition_estimate();
  j["interpolation_residual"] = s.interpolation_residual();
  return j;
}

/// Parses "sphere<d>", "interval", "box<d>" (unit box) or "ball<d>" (unit ball).
inline Domain parse_domain(const std::string& text) {
  auto dim_after = [&](std::size_t prefix) {
    const std::string rest = text.substr(prefix);
    int d = 0;
    const auto res = std::from_chars(rest.data(), rest.data() + rest.size(), d);
    if (rest.empty() || res.ec != std::errc() || res.ptr != rest.data() + rest.size() || d < 1)
      throw Error("unknown domain '" + text + "'");
    return d;
  };
  if (text == "interval") return Domain::unit_box(1);
  if (text.rfind("sphere", 0) == 0) return Domain::sphere(dim_after(6));
  if (text.rfind("box", 0) == 0) return Domain::unit_box(dim_after(3));
  if (text.rfind("ball", 0) == 0) return Domain::ball(std::vector<double>(static_cast<std::size_t>(dim_after(4)), 0.0), 1.0);
  throw Error("unknown domain '" + text + "'");
}

/// Reads a dump written by `write_interpolant_csv` and its sidecar.
inline InterpolantDump read_interpolant_dump(std::istream& csv, std::istream& sidecar) {
  nlohmann::json j;
  try {
    sidecar >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("interpolant sidecar: ") + e.what());
  }
  if (!j.contains("kernel") || !j.contains("domain")) throw IoError("interpolant sidecar lacks kernel or domain");
  const Domain domain = parse_domain(j["domain"].get<std::string>());
  KeyValues kv;
  for (auto it = j["kernel"].begin(); it != j["kernel"].end(); ++it) kv[it.key()] = it.value().get<std::string>();
  InterpolantDump dump{kernel_from_config(kv, domain), j["domain"].get<std::string>(), PointSet(domain.metric(), domain.coord_dim()),
                       {}, j.value("condition_estimate", 0.0)};
  PointTable t = read_point_csv(csv, domain.metric());
  const auto* alpha = t.column("alpha");
  if (!alpha) throw IoError("interpolant CSV lacks an alpha column");
  if (t.points.size() > 0 && t.points.dim() != domain.coord_dim()) throw IoError("interpolant CSV has the wrong dimension");
  dump.centers = std::move(t.points);
  dump.alpha = *alpha;
  return dump;
}

}  // namespace phispline
