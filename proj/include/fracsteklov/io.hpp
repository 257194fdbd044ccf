#pragma once

// Run configuration (flat key=value), VTK legacy output, error-table CSV and
// plain nodal field files.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "experiments.hpp"
#include "mesh.hpp"

namespace fracsteklov {

struct RunConfig {
  // problem
  double alpha = 0.5;
  double c0 = 5.0;
  double k = 1.0;
  double g = 1.0;
  std::string g_file;  ///< per-node boundary values; overrides g
  // mesh: mesh_file, then rings (+ refine), then grid
  std::string grid = "medium";
  int rings = 0;
  int refine = 0;
  std::string mesh_file;
  // method
  std::string method = "method2";
  int M = 40;
  std::optional<double> eta;
  int N = 40;
  double sigma = 0.5;
  std::optional<double> delta;
  // solver
  double tol = 1e-12;
  std::size_t max_iter = 0;
  // output
  std::string out = "solution";
  std::string formats = "vtk,summary";

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double config_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
    return d;
  } catch (const std::logic_error&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

inline long config_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long i = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::logic_error&) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  }
}

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace detail

/// Sets one key. Keys accept '-' in place of '_' (CLI spelling).
inline void set_config_value(RunConfig& c, std::string key, const std::string& value) {
  for (char& ch : key)
    if (ch == '-') ch = '_';
  const std::string v = detail::trim(value);
  if (key == "alpha") c.alpha = detail::config_double(key, v);
  else if (key == "c0") c.c0 = detail::config_double(key, v);
  else if (key == "k") c.k = detail::config_double(key, v);
  else if (key == "g") c.g = detail::config_double(key, v);
  else if (key == "g_file") c.g_file = v;
  else if (key == "grid") c.grid = v;
  else if (key == "rings") c.rings = static_cast<int>(detail::config_int(key, v));
  else if (key == "refine") c.refine = static_cast<int>(detail::config_int(key, v));
  else if (key == "mesh_file") c.mesh_file = v;
  else if (key == "method") c.method = v;
  else if (key == "M") c.M = static_cast<int>(detail::config_int(key, v));
  else if (key == "eta") c.eta = detail::config_double(key, v);
  else if (key == "N") c.N = static_cast<int>(detail::config_int(key, v));
  else if (key == "sigma") c.sigma = detail::config_double(key, v);
  else if (key == "delta") c.delta = detail::config_double(key, v);
  else if (key == "tol") c.tol = detail::config_double(key, v);
  else if (key == "max_iter") {
    const long m = detail::config_int(key, v);
    if (m < 0) throw ConfigError("config key 'max_iter': must be >= 0");
    c.max_iter = static_cast<std::size_t>(m);
  } else if (key == "out") c.out = v;
  else if (key == "formats") c.formats = v;
  else throw ConfigError("unknown config key '" + key + "'");
}

/// Range checks. Throws ConfigError naming the offending key; returns
/// non-fatal warnings.
inline std::vector<std::string> validate(const RunConfig& c) {
  std::vector<std::string> warnings;
  static const char* methods[] = {"method1", "method2", "spectral", "dirichlet", "neumann"};
  if (std::find(std::begin(methods), std::end(methods), c.method) == std::end(methods))
    throw ConfigError("config key 'method': unknown method '" + c.method +
                      "' (expected method1, method2, spectral, dirichlet or neumann)");
  const bool fractional = c.method == "method1" || c.method == "method2";
  if (fractional && !(c.alpha > 0.0 && c.alpha < 1.0))
    throw ConfigError("config key 'alpha': must lie in (0, 1) for " + c.method + ", got " + detail::format_double(c.alpha));
  if (c.method == "spectral" && !(c.alpha > 0.0 && c.alpha <= 1.0))
    throw ConfigError("config key 'alpha': must lie in (0, 1] for spectral, got " + detail::format_double(c.alpha));
  if (!(c.alpha >= 0.0 && c.alpha <= 1.0))
    throw ConfigError("config key 'alpha': must lie in [0, 1], got " + detail::format_double(c.alpha));
  if (!(c.c0 > 0.0)) throw ConfigError("config key 'c0': must be positive (c = 0 makes the form non-coercive)");
  if (!(c.k > 0.0)) throw ConfigError("config key 'k': must be positive");
  if (c.M < 1) throw ConfigError("config key 'M': must be >= 1");
  if (c.N < 1) throw ConfigError("config key 'N': must be >= 1");
  if (c.eta && !(*c.eta > 0.0)) throw ConfigError("config key 'eta': must be positive");
  if (!(c.sigma > 0.0 && c.sigma <= 1.0)) throw ConfigError("config key 'sigma': must lie in (0, 1]");
  if (c.sigma < 0.5)
    warnings.push_back("sigma = " + detail::format_double(c.sigma) +
                       " < 0.5: the time scheme is not unconditionally stable");
  if (c.delta && !(*c.delta > 0.0)) throw ConfigError("config key 'delta': must be positive");
  if (!(c.tol > 0.0 && c.tol < 1.0)) throw ConfigError("config key 'tol': must lie in (0, 1)");
  if (c.rings != 0 && c.rings < 2) throw ConfigError("config key 'rings': must be >= 2");
  if (c.refine < 0) throw ConfigError("config key 'refine': must be >= 0");
  if (!c.mesh_file.empty() && c.rings != 0) throw ConfigError("config key 'mesh_file': conflicts with 'rings'");
  if (c.mesh_file.empty() && c.rings == 0) {
    try {
      parse_grid(c.grid);
    } catch (const InvalidParameter&) {
      throw ConfigError("config key 'grid': unknown grid '" + c.grid + "'");
    }
  }
  if (c.out.empty()) throw ConfigError("config key 'out': empty output prefix");
  std::istringstream fs(c.formats);
  for (std::string f; std::getline(fs, f, ',');) {
    f = detail::trim(f);
    if (f != "vtk" && f != "summary" && f != "field")
      throw ConfigError("config key 'formats': unknown format '" + f + "' (expected vtk, summary, field)");
  }
  return warnings;
}

/// key=value lines; '#' starts a comment.
inline RunConfig parse_config_text(const std::string& text, RunConfig base = {}) {
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
    set_config_value(base, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

inline RunConfig parse_config_file(const std::string& path, RunConfig base = {}) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str(), std::move(base));
}

/// Inverse of parse_config_text: re-parsing yields an equal RunConfig.
inline std::string serialize(const RunConfig& c) {
  using detail::format_double;
  std::ostringstream os;
  os << "alpha=" << format_double(c.alpha) << '\n'
     << "c0=" << format_double(c.c0) << '\n'
     << "k=" << format_double(c.k) << '\n'
     << "g=" << format_double(c.g) << '\n';
  if (!c.g_file.empty()) os << "g_file=" << c.g_file << '\n';
  os << "grid=" << c.grid << '\n' << "rings=" << c.rings << '\n' << "refine=" << c.refine << '\n';
  if (!c.mesh_file.empty()) os << "mesh_file=" << c.mesh_file << '\n';
  os << "method=" << c.method << '\n' << "M=" << c.M << '\n';
  if (c.eta) os << "eta=" << format_double(*c.eta) << '\n';
  os << "N=" << c.N << '\n' << "sigma=" << format_double(c.sigma) << '\n';
  if (c.delta) os << "delta=" << format_double(*c.delta) << '\n';
  os << "tol=" << format_double(c.tol) << '\n'
     << "max_iter=" << c.max_iter << '\n'
     << "out=" << c.out << '\n'
     << "formats=" << c.formats << '\n';
  return os.str();
}

/// VTK legacy ASCII unstructured grid: triangles (cell type 5), z = 0, one
/// SCALARS block per field, 9 significant digits.
inline void write_vtk(const Mesh& m, const std::vector<std::pair<std::string, const Vector*>>& fields, std::ostream& os) {
  for (const auto& [name, f] : fields) {
    if (f->size() != m.num_vertices())
      throw InvalidParameter("write_vtk: field '" + name + "' does not match the mesh");
    if (name.empty() || name.find_first_of(" \t\n") != std::string::npos)
      throw InvalidParameter("write_vtk: invalid field name '" + name + "'");
  }
  os << "# vtk DataFile Version 3.0\n"
     << "fracsteklov\n"
     << "ASCII\n"
     << "DATASET UNSTRUCTURED_GRID\n";
  os << std::setprecision(9);
  os << "POINTS " << m.num_vertices() << " double\n";
  for (const auto& p : m.vertices()) os << p.x << ' ' << p.y << " 0\n";
  os << "CELLS " << m.num_triangles() << ' ' << 4 * m.num_triangles() << '\n';
  for (const auto& t : m.triangles()) os << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  os << "CELL_TYPES " << m.num_triangles() << '\n';
  for (std::size_t t = 0; t < m.num_triangles(); ++t) os << "5\n";
  if (!fields.empty()) {
    os << "POINT_DATA " << m.num_vertices() << '\n';
    for (const auto& [name, f] : fields) {
      os << "SCALARS " << name << " double 1\n" << "LOOKUP_TABLE default\n";
      for (double v : *f) os << v << '\n';
    }
  }
}

inline void write_vtk(const Mesh& m, const std::vector<std::pair<std::string, const Vector*>>& fields,
                      const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_vtk(m, fields, os);
  if (!os) throw Error("write to '" + path + "' failed");
}

inline const char* kCsvHeader = "method,alpha,c0,param,e_inf,e2_gamma,e2_omega,ref";

namespace detail {
inline std::string sci5(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4e", v);
  return buf;
}
inline std::string general(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}
}  // namespace detail

/// One header line plus one row per record; errors in 5-significant-digit
/// scientific notation. Failed records carry `nan` errors and ref `failed`.
inline void write_csv(const std::vector<ErrorRecord>& records, std::ostream& os) {
  if (records.empty()) throw InvalidParameter("write_csv: no records");
  os << kCsvHeader << '\n';
  for (const auto& r : records) {
    const bool ok = r.ok();
    const double nan = std::nan("");
    os << r.method << ',' << detail::general(r.alpha) << ',' << detail::general(r.c0) << ',' << r.param << ','
       << detail::sci5(ok ? r.e_inf : nan) << ',' << detail::sci5(ok ? r.e2_gamma : nan) << ','
       << detail::sci5(ok ? r.e2_omega : nan) << ',' << (ok ? r.ref : std::string("failed")) << '\n';
  }
}

inline void write_csv(const std::vector<ErrorRecord>& records, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_csv(records, os);
  if (!os) throw Error("write to '" + path + "' failed");
}

inline std::vector<ErrorRecord> read_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(is, line) || detail::trim(line) != kCsvHeader) throw ParseError(1, "missing CSV header");
  std::vector<ErrorRecord> out;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(detail::trim(cell));
    if (f.size() != 8) throw ParseError(lineno, "expected 8 CSV fields");
    ErrorRecord r;
    r.method = f[0];
    r.alpha = detail::parse_double(f[1], lineno);
    r.c0 = detail::parse_double(f[2], lineno);
    r.param = static_cast<int>(detail::parse_index(f[3], lineno));
    r.e_inf = detail::parse_double(f[4], lineno);
    r.e2_gamma = detail::parse_double(f[5], lineno);
    r.e2_omega = detail::parse_double(f[6], lineno);
    r.ref = f[7];
    if (r.ref == "failed") r.failure = "failed";
    out.push_back(std::move(r));
  }
  return out;
}

/// Nodal field file: count on the first line, then one value per line.
inline void write_field(const Vector& v, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os << v.size() << '\n' << std::setprecision(17);
  for (double x : v) os << x << '\n';
  if (!os) throw Error("write to '" + path + "' failed");
}

inline Vector read_field(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path + "' for reading");
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(is, line)) throw ParseError(1, "empty field file");
  const Index n = detail::parse_index(detail::trim(line), 1);
  Vector v;
  v.reserve(n);
  while (v.size() < n && std::getline(is, line)) {
    ++lineno;
    v.push_back(detail::parse_double(detail::trim(line), lineno));
  }
  if (v.size() != n) throw ParseError(lineno, "field file ends after " + std::to_string(v.size()) + " of " + std::to_string(n) + " values");
  return v;
}

}  // namespace fracsteklov
