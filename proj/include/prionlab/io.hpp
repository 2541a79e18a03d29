#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "prionlab/grid.hpp"
#include "prionlab/params.hpp"
#include "prionlab/prion_system.hpp"

namespace prionlab {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// number formatting: shortest round-trip representation, deterministic
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// config parsing
// ---------------------------------------------------------------------------

inline FragKernel parse_kernel(const json& j) {
  if (j.is_null()) return FragKernel::uniform();
  const std::string family = j.value("family", "uniform");
  if (family == "uniform") return FragKernel::uniform();
  if (family == "symmetric_power") return FragKernel::symmetric_power(j.value("a", 1.0));
  throw ConfigError("unknown kernel family '" + family +
                    "' (expected uniform or symmetric_power)");
}

inline json kernel_to_json(const FragKernel& k) {
  json j;
  j["family"] = k.family() == FragKernel::Family::Uniform ? "uniform" : "symmetric_power";
  j["a"] = k.exponent();
  return j;
}

inline ModelParams parse_params(const json& j) {
  ModelParams p;
  p.lambda = j.value("lambda", p.lambda);
  p.delta = j.value("delta", p.delta);
  p.tau = j.value("tau", p.tau);
  p.mu = j.value("mu", p.mu);
  p.beta = j.value("beta", p.beta);
  p.gamma = j.value("gamma", p.gamma);
  p.omega = j.value("omega", p.omega);
  p.p = j.value("p", p.p);
  p.r = j.value("r", p.r);
  return validate_params(p);
}

inline json params_to_json(const ModelParams& p) {
  return json{{"lambda", p.lambda}, {"delta", p.delta}, {"tau", p.tau},   {"mu", p.mu},
              {"beta", p.beta},     {"gamma", p.gamma}, {"omega", p.omega}, {"p", p.p},
              {"r", p.r}};
}

inline std::shared_ptr<const SizeGrid> parse_grid(const json& j, const ModelParams& params) {
  if (j.is_null()) return default_grid(params);
  const int n = j.value("n_cells", 400);
  const double x_min = j.value("x_min", 1e-4);
  const std::string layout = j.value("layout", "geometric");
  double x_max;
  if (j.contains("x_max")) {
    x_max = j.at("x_max").get<double>();
  } else {
    x_max = 50.0 * std::pow(params.mu / params.beta, 1.0 / params.gamma);
  }
  if (layout == "geometric") return SizeGrid::geometric(n, x_min, x_max);
  if (layout == "uniform") return SizeGrid::uniform(n, x_min, x_max);
  throw ConfigError("unknown grid layout '" + layout + "' (expected uniform or geometric)");
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline std::string table_csv(const std::vector<std::string>& header,
                             const std::vector<std::vector<double>>& rows) {
  std::ostringstream os;
  for (size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
    os << "\n";
  }
  return os.str();
}

inline std::string density_csv(const Density& u) {
  std::vector<std::vector<double>> rows;
  rows.reserve(u.size());
  for (int i = 0; i < u.size(); ++i)
    rows.push_back({u.grid->centers()[i], u.grid->widths()[i], u.values[i]});
  return table_csv({"x_center", "width", "value"}, rows);
}

inline std::string trajectory_csv(const Trajectory& traj) {
  std::vector<std::vector<double>> rows;
  rows.reserve(traj.samples.size());
  for (const auto& s : traj.samples)
    rows.push_back({s.t, s.V, s.m0, s.m1, s.mp, s.x_norm, s.escaped_m1});
  return table_csv({"t", "V", "m0", "m1", "mp", "x_norm", "escaped_mass"}, rows);
}

inline std::string transform_csv(const Trajectory& traj) {
  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < traj.samples.size(); ++i)
    rows.push_back({traj.samples[i].t, traj.W[i], traj.h[i]});
  return table_csv({"t", "W", "h"}, rows);
}

/// Reads a density from a CSV written by density_csv; checks it matches the
/// grid geometry.
inline Density read_density_csv(const std::string& content,
                                const std::shared_ptr<const SizeGrid>& grid) {
  std::istringstream is(content);
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("density CSV is empty");
  Density u(grid);
  int i = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    double xc, wd, val;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf", &xc, &wd, &val) != 3)
      throw ConfigError("density CSV: malformed row '" + line + "'");
    if (i >= grid->size()) throw ConfigError("density CSV has more rows than grid cells");
    if (std::abs(xc - grid->centers()[i]) > 1e-9 * std::max(1.0, xc))
      throw ConfigError("density CSV does not match the configured grid");
    u.values[i++] = val;
  }
  if (i != grid->size()) throw ConfigError("density CSV has fewer rows than grid cells");
  return u;
}

// ---------------------------------------------------------------------------
// initial condition
// ---------------------------------------------------------------------------

/// u0 forms: {"type":"exponential","scale":s,"rate":a} -> s e^{-a x};
///           {"type":"profile","scale":s}              -> s U;
///           {"type":"csv","path":...};  {"type":"zero"}.
template <typename ProfileFn>
Density parse_initial_density(const json& j, const std::shared_ptr<const SizeGrid>& grid,
                              ProfileFn&& profile_supplier) {
  const std::string type = j.value("type", "exponential");
  if (type == "zero") return Density(grid);
  if (type == "exponential") {
    const double scale = j.value("scale", 1.0);
    const double rate = j.value("rate", 1.0);
    return density_from(grid, [&](double x) { return scale * std::exp(-rate * x); });
  }
  if (type == "profile") {
    const double scale = j.value("scale", 1.0);
    Density u = profile_supplier();
    for (auto& v : u.values) v *= scale;
    return u;
  }
  if (type == "csv") {
    const std::string path = j.at("path").get<std::string>();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open initial density CSV: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return read_density_csv(buf.str(), grid);
  }
  throw ConfigError("unknown initial density type '" + type + "'");
}

// ---------------------------------------------------------------------------
// output directory with manifest
// ---------------------------------------------------------------------------

inline uint64_t fnv1a64(const std::string& data) {
  uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

inline std::string hash_hex(const std::string& data) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(data)));
  return buf;
}

/// Writes run artifacts under one directory and lists every file with a
/// content hash in manifest.json (written last, sorted by path, no
/// timestamps: identical inputs give byte-identical manifests).
class OutputWriter {
 public:
  explicit OutputWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
  }

  const std::filesystem::path& dir() const { return dir_; }

  void write_text(const std::string& relative, const std::string& content) {
    const auto path = dir_ / relative;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << content;
    entries_[relative] = {hash_hex(content), content.size()};
  }

  void write_json(const std::string& relative, const json& j) {
    write_text(relative, j.dump(2) + "\n");
  }

  /// status: "ok" or a failure tag; diagnostic carries the error text.
  std::string write_manifest(const std::string& status = "ok",
                             const std::string& diagnostic = "") {
    json files = json::array();
    for (const auto& [rel, info] : entries_)
      files.push_back({{"path", rel}, {"hash", info.first}, {"bytes", info.second}});
    json manifest{{"files", files}, {"status", status}};
    if (!diagnostic.empty()) manifest["diagnostic"] = diagnostic;
    const std::string text = manifest.dump(2) + "\n";
    std::ofstream out(dir_ / "manifest.json", std::ios::binary);
    out << text;
    return text;
  }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::pair<std::string, size_t>> entries_;  // sorted by path
};

}  // namespace prionlab
