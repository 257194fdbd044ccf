#pragma once

// Command-line surface: mesh, eig, solve, converge, compare.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "error.hpp"
#include "experiments.hpp"
#include "io.hpp"
#include "mesh.hpp"

namespace fracsteklov {

namespace detail {

/// Mesh selected by a RunConfig: import path, then rings, then named grid;
/// `refine` extra uniform refinements apply to every source.
inline std::pair<Mesh, std::string> config_mesh(const RunConfig& c) {
  Mesh m = !c.mesh_file.empty() ? import_mesh(c.mesh_file)
           : c.rings != 0       ? generate_quarter_disk(c.rings)
                                : make_grid(parse_grid(c.grid));
  std::string id = !c.mesh_file.empty() ? c.mesh_file : c.rings != 0 ? "rings" + std::to_string(c.rings) : c.grid;
  for (int i = 0; i < c.refine; ++i) m = refine_uniform(m);
  if (c.refine) id += "+r" + std::to_string(c.refine);
  return {std::move(m), std::move(id)};
}

inline Problem config_problem(const RunConfig& c) {
  auto [mesh, id] = config_mesh(c);
  if (c.g_file.empty()) return make_problem(std::move(mesh), c.c0, c.k, constant(c.g), id);
  const Vector nodal = read_field(c.g_file);
  if (nodal.size() != mesh.num_vertices())
    throw ConfigError("config key 'g_file': " + std::to_string(nodal.size()) + " values for " +
                      std::to_string(mesh.num_vertices()) + " vertices");
  Problem p = make_problem(std::move(mesh), c.c0, c.k, constant(0.0), id);
  p.load = boundary_load_from_nodal(p.boundary_mass(), nodal);
  return p;
}

inline double smallest_eigenvalue(const Problem& p, const CgOptions& cg) {
  InverseIterationOptions io;
  io.cg = cg;
  return smallest_eig_inverse_iteration(p.op, io).eigenvalue;
}

inline bool has_format(const RunConfig& c, const std::string& f) {
  std::istringstream fs(c.formats);
  for (std::string s; std::getline(fs, s, ',');)
    if (trim(s) == f) return true;
  return false;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string x; std::getline(is, x, ',');)
    if (!trim(x).empty()) out.push_back(trim(x));
  return out;
}

inline const std::map<std::string, std::string>& flag_help() {
  static const std::map<std::string, std::string> help{
      {"alpha", "fractional order"},
      {"c0", "reaction coefficient"},
      {"k", "diffusion coefficient"},
      {"g", "constant boundary data"},
      {"g-file", "nodal boundary data (field file)"},
      {"grid", "coarse, medium or fine"},
      {"rings", "quarter-disk ring count (overrides grid)"},
      {"refine", "extra uniform refinements"},
      {"mesh-file", "mesh to import"},
      {"method", "method1, method2, spectral, dirichlet or neumann"},
      {"M", "method1 half width"},
      {"eta", "method1 step (default M^-1/2)"},
      {"N", "method2 steps"},
      {"sigma", "method2 weight in (0, 1]"},
      {"delta", "method2 spectral lower bound (default 0.95 lambda_1)"},
      {"tol", "CG relative tolerance"},
      {"max-iter", "CG iteration cap (0: 10 n)"},
      {"out", "output prefix"},
      {"formats", "subset of vtk,summary,field"}};
  return help;
}

struct FlagSet {
  struct Entry {
    CLI::Option* option = nullptr;
    std::string value;
  };
  std::map<std::string, Entry> entries;  ///< config key -> flag

  void add(CLI::App& app, const std::string& flag, const std::string& key, std::string help = "") {
    Entry& e = entries[key];
    if (help.empty()) {
      const auto it = flag_help().find(key);
      if (it != flag_help().end()) help = it->second;
    }
    e.option = app.add_option("--" + flag, e.value, help);
  }

  /// Registers --<key> for every config key (underscores spelled as '-').
  void add_config_flags(CLI::App& app) {
    for (const auto& entry : flag_help()) add(app, entry.first, entry.first);
  }

  void apply(RunConfig& c) const {
    for (const auto& [k, e] : entries)
      if (e.option->count()) set_config_value(c, k, e.value);
  }
};

inline void print_report(std::ostream& os, const SolveReport& r) {
  os << "solves=" << r.solves << '\n'
     << "iterations=" << r.iterations << '\n'
     << "max_iterations=" << r.max_iterations << '\n'
     << "relative_residual=" << r.relative_residual << '\n'
     << "wall_seconds=" << r.wall_seconds << '\n';
}

inline int run_mesh(const RunConfig& c, const std::string& out_path, std::ostream& out) {
  const auto [m, id] = config_mesh(c);
  out << std::setprecision(10) << "mesh=" << id << '\n'
      << "vertices=" << m.num_vertices() << '\n'
      << "triangles=" << m.num_triangles() << '\n'
      << "boundary_nodes=" << m.num_boundary_nodes() << '\n'
      << "area=" << m.area() << '\n'
      << "boundary_length=" << m.boundary_length() << '\n';
  if (!out_path.empty()) export_mesh(m, out_path);
  return 0;
}

inline int run_eig(const RunConfig& c, bool full, std::ostream& out) {
  const Problem p = config_problem(c);
  CgOptions cg;
  cg.tol = c.tol;
  cg.max_iter = c.max_iter;
  out << std::setprecision(10);
  const double inv = smallest_eigenvalue(p, {.tol = std::min(c.tol, 1e-13), .max_iter = c.max_iter});
  if (p.op.num_boundary() <= kMaxOracleBoundary) {
    const EigenPairSet eigs = steklov_eigs(schur_complement(p.op));
    out << "lambda_1=" << eigs.smallest() << '\n'
        << "lambda_1_inverse_iteration=" << inv << '\n'
        << "relative_difference=" << std::abs(inv - eigs.smallest()) / eigs.smallest() << '\n';
    if (full)
      for (std::size_t j = 0; j < eigs.size(); ++j) out << "lambda_" << j + 1 << '=' << eigs.values[j] << '\n';
  } else {
    if (full)
      throw InvalidParameter("eig --full needs at most " + std::to_string(kMaxOracleBoundary) + " boundary nodes, mesh has " +
                             std::to_string(p.op.num_boundary()));
    out << "lambda_1=" << inv << '\n';
  }
  return 0;
}

inline int run_solve(const RunConfig& c, std::ostream& out, std::ostream& err) {
  for (const auto& w : validate(c)) err << "warning: " << w << '\n';
  const Problem p = config_problem(c);
  CgOptions cg;
  cg.tol = c.tol;
  cg.max_iter = c.max_iter;

  Vector u;
  SolveReport report;
  std::ostringstream extra;
  extra << std::setprecision(10);
  if (c.method == "method1") {
    Method1Options o;
    o.step_override = c.eta;
    o.cg = cg;
    auto r = solve_method1(p.bilinear(), p.boundary_mass(), p.load, c.alpha, c.M, o);
    u = std::move(r.y);
    report = r.report;
    extra << "eta=" << r.rule.step << '\n';
  } else if (c.method == "method2") {
    const double lambda = smallest_eigenvalue(p, cg);
    const double delta = c.delta ? *c.delta : kDefaultDeltaFactor * lambda;
    Method2Options o;
    o.cg = cg;
    o.lambda_min = lambda;
    auto r = solve_method2(p.op, p.load, c.alpha, {c.N, c.sigma, delta}, o);
    u = std::move(r.w);
    report = r.report;
    extra << "lambda_1=" << lambda << '\n'
          << "delta=" << delta << '\n'
          << "norm_increases=" << r.norm_increases << '\n'
          << "max_harmonicity_defect=" << r.max_harmonicity_defect << '\n';
  } else if (c.method == "spectral") {
    const auto start = std::chrono::steady_clock::now();
    const SpectralReference ref(p);
    u = ref.field(c.alpha, cg);
    report.method = "spectral";
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    extra << "lambda_1=" << ref.smallest_eigenvalue() << '\n';
  } else {
    const auto start = std::chrono::steady_clock::now();
    u = c.method == "dirichlet" ? solve_dirichlet(p, cg) : solve_neumann(p, cg);
    report.method = c.method;
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  const Extrema e = field_extrema(u);
  std::ostringstream summary;
  summary << serialize(c) << std::setprecision(10) << "mesh=" << p.mesh_id << '\n'
          << "vertices=" << p.mesh->num_vertices() << '\n'
          << "boundary_nodes=" << p.op.num_boundary() << '\n'
          << "min=" << e.min << '\n'
          << "max=" << e.max << '\n'
          << extra.str();
  print_report(summary, report);

  out << summary.str();
  if (has_format(c, "vtk")) write_vtk(*p.mesh, {{"u", &u}}, c.out + ".vtk");
  if (has_format(c, "summary")) {
    std::ofstream os(c.out + ".summary.txt", std::ios::binary);
    if (!os) throw Error("cannot open '" + c.out + ".summary.txt' for writing");
    os << summary.str();
  }
  if (has_format(c, "field")) write_field(u, c.out + ".field");
  return 0;
}

inline int run_converge(int table, const std::string& grid, const std::string& methods, const std::string& params,
                        double sigma, double tol, const std::string& out_path, std::ostream& out) {
  SweepSpec spec = table_spec(table);
  spec.grid = parse_grid(grid);
  spec.methods = split_list(methods);
  if (!params.empty()) {
    spec.params.clear();
    for (const auto& s : split_list(params)) spec.params.push_back(static_cast<int>(config_int("params", s)));
  }
  if (!(sigma > 0.0 && sigma <= 1.0)) throw ConfigError("converge: sigma must lie in (0, 1]");
  spec.sigma = sigma;
  spec.cg.tol = tol;
  const auto records = convergence_sweep(spec);
  if (out_path.empty()) {
    write_csv(records, out);
  } else {
    write_csv(records, out_path);
  }
  return 0;
}

inline int run_compare(const RunConfig& c, const std::string& a, const std::string& b, std::ostream& out) {
  const auto [m, id] = config_mesh(c);
  const Vector y = read_field(a);
  const Vector y_ref = read_field(b);
  ErrorRecord r = compute_errors(y, y_ref, assemble_boundary_mass(m), assemble_domain_mass(m));
  r.method = "compare";
  r.mesh_id = id;
  r.ref = "b";
  write_csv({r}, out);
  return 0;
}

}  // namespace detail

/// Exit codes: 0 success, 1 runtime or configuration error, 2 usage error.
inline int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fractional Steklov problems on triangulated planar domains", "fracsteklov"};
  app.require_subcommand(1);

  CLI::App* mesh = app.add_subcommand("mesh", "generate, refine, import or export a mesh");
  detail::FlagSet mesh_flags;
  std::string mesh_out;
  for (const char* k : {"grid", "rings", "refine"}) mesh_flags.add(*mesh, k, k);
  mesh_flags.add(*mesh, "import", "mesh-file", "mesh file to read");
  mesh->add_option("--out", mesh_out, "export path");

  CLI::App* eig = app.add_subcommand("eig", "smallest Steklov eigenvalue and optionally the full spectrum");
  detail::FlagSet eig_flags;
  bool full = false;
  for (const char* k : {"c0", "k", "grid", "rings", "refine", "mesh-file", "tol", "max-iter"})
    eig_flags.add(*eig, k, k);
  eig->add_flag("--full", full, "print every eigenvalue");

  CLI::App* solve = app.add_subcommand("solve", "one solve; writes VTK and a summary");
  detail::FlagSet solve_flags;
  std::string config_path;
  solve->add_option("--config", config_path, "key=value file; flags override it");
  solve_flags.add_config_flags(*solve);

  CLI::App* converge = app.add_subcommand("converge", "error sweep written as CSV");
  int table = 1;
  std::string grid = "coarse", methods = "method1,method2", params, csv_out;
  double sigma = 0.5, tol = 1e-12;
  converge->add_option("--table", table, "1: c0 = 5, alpha sweep; 2: alpha = 0.5, c0 sweep")->required();
  converge->add_option("--grid", grid);
  converge->add_option("--methods", methods);
  converge->add_option("--params", params, "comma-separated M/N values");
  converge->add_option("--sigma", sigma);
  converge->add_option("--tol", tol);
  converge->add_option("--out", csv_out, "CSV path (default stdout)");

  CLI::App* compare = app.add_subcommand("compare", "relative errors of field a against field b");
  detail::FlagSet compare_flags;
  std::string field_a, field_b;
  compare->add_option("--a", field_a)->required();
  compare->add_option("--b", field_b)->required();
  for (const char* k : {"grid", "rings", "refine", "mesh-file"})
    compare_flags.add(*compare, k, k);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    RunConfig c;
    if (*mesh) {
      c.grid = "coarse";
      mesh_flags.apply(c);
      validate(c);
      return detail::run_mesh(c, mesh_out, out);
    }
    if (*eig) {
      eig_flags.apply(c);
      validate(c);
      return detail::run_eig(c, full, out);
    }
    if (*solve) {
      if (!config_path.empty()) c = parse_config_file(config_path);
      solve_flags.apply(c);
      return detail::run_solve(c, out, err);
    }
    if (*converge) return detail::run_converge(table, grid, methods, params, sigma, tol, csv_out, out);
    if (*compare) {
      compare_flags.apply(c);
      validate(c);
      return detail::run_compare(c, field_a, field_b, out);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

inline int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"fracsteklov"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace fracsteklov
