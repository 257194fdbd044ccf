#pragma once

// Problem setup for the quarter-disk model, limiting-case solvers, error
// metrics against a reference, and convergence sweeps over (M or N, alpha, c0).

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "assembly.hpp"
#include "error.hpp"
#include "mesh.hpp"
#include "parallel.hpp"
#include "pseudoparabolic.hpp"
#include "quadrature.hpp"
#include "steklov.hpp"

namespace fracsteklov {

/// Radial ring count of the coarse quarter-disk grid; medium and fine are one
/// and two uniform refinements of it.
inline constexpr int kCoarseRings = 11;

enum class Grid { coarse, medium, fine };

inline Grid parse_grid(const std::string& name) {
  if (name == "coarse") return Grid::coarse;
  if (name == "medium") return Grid::medium;
  if (name == "fine") return Grid::fine;
  throw InvalidParameter("unknown grid '" + name + "' (expected coarse, medium or fine)");
}

inline std::string grid_name(Grid g) {
  switch (g) {
    case Grid::coarse: return "coarse";
    case Grid::medium: return "medium";
    case Grid::fine: return "fine";
  }
  return "?";
}

inline Mesh make_grid(Grid g) {
  Mesh m = generate_quarter_disk(kCoarseRings);
  for (int level = 0; level < static_cast<int>(g); ++level) m = refine_uniform(m);
  return m;
}

/// Everything a solve needs for one (mesh, k, c0, g) combination.
struct Problem {
  std::shared_ptr<const Mesh> mesh;
  std::string mesh_id;
  double k = 1.0;
  double c0 = 1.0;
  SteklovOperator op;
  SparseMatrix domain_mass;
  Vector load;  ///< b_g

  const SparseMatrix& bilinear() const noexcept { return op.bilinear(); }
  const SparseMatrix& boundary_mass() const noexcept { return op.boundary_mass(); }
};

inline Problem make_problem(Mesh mesh, double c0, double k = 1.0, const ScalarField& g = constant(1.0),
                            std::string mesh_id = "mesh") {
  auto m = std::make_shared<const Mesh>(std::move(mesh));
  SteklovOperator op = make_steklov_operator(*m, Coefficients::constant_coefficients(k, c0));
  Vector load = assemble_boundary_load(*m, g);
  SparseMatrix mass = assemble_domain_mass(*m);
  return Problem{m, std::move(mesh_id), k, c0, std::move(op), std::move(mass), std::move(load)};
}

inline Problem make_problem(Grid grid, double c0, double k = 1.0, const ScalarField& g = constant(1.0)) {
  return make_problem(make_grid(grid), c0, k, g, grid_name(grid));
}

/// Dense spectral reference for problems with at most 512 boundary nodes.
class SpectralReference {
 public:
  explicit SpectralReference(const Problem& p) : problem_(&p), eigs_(steklov_eigs(schur_complement(p.op))) {}

  const EigenPairSet& eigenpairs() const noexcept { return eigs_; }
  double smallest_eigenvalue() const { return eigs_.smallest(); }

  Vector trace(double alpha) const {
    return spectral_fractional_solve(eigs_, problem_->op.restrict_to_boundary(problem_->load), alpha);
  }

  /// Discrete harmonic field with the spectral trace.
  Vector field(double alpha, const CgOptions& cg = {}) const { return harmonic_extension(problem_->op, trace(alpha), cg); }

 private:
  const Problem* problem_;
  EigenPairSet eigs_;
};

/// alpha = 0 limit: u = g_hat on the boundary, discrete harmonic inside.
inline Vector solve_dirichlet(const Problem& p, const CgOptions& cg = {}) {
  return harmonic_extension(p.op, project_boundary_data(p.op, p.load), cg);
}

/// alpha = 1 limit: A u = b_g.
inline Vector solve_neumann(const Problem& p, const CgOptions& cg = {}) { return cg_solve(p.bilinear(), p.load, cg).x; }

struct ErrorRecord {
  std::string method;
  double alpha = 0.0;
  double c0 = 0.0;
  int param = 0;  ///< M (method1) or N (method2)
  double sigma = 0.0;
  std::string mesh_id;
  double e_inf = 0.0;
  double e2_gamma = 0.0;
  double e2_omega = 0.0;
  std::string ref;
  std::string failure;  ///< empty on success

  bool ok() const noexcept { return failure.empty(); }
};

/// Relative errors of y against y_ref: nodal max norm, boundary L2 (M_gamma)
/// and domain L2 (M_omega).
inline ErrorRecord compute_errors(std::span<const double> y, std::span<const double> y_ref,
                                  const SparseMatrix& boundary_mass, const SparseMatrix& domain_mass) {
  const std::size_t n = y_ref.size();
  if (y.size() != n || boundary_mass.size() != n || domain_mass.size() != n)
    throw InvalidParameter("compute_errors: fields and matrices are not on the same mesh");
  Vector d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = y[i] - y_ref[i];
  auto energy = [](const SparseMatrix& m, std::span<const double> v) { return std::sqrt(std::max(0.0, dot(v, m * v))); };
  ErrorRecord r;
  const double ref_inf = norm_inf(y_ref);
  r.e_inf = ref_inf == 0.0 ? norm_inf(d) : norm_inf(d) / ref_inf;
  const double rg = energy(boundary_mass, y_ref);
  const double ro = energy(domain_mass, y_ref);
  r.e2_gamma = rg == 0.0 ? energy(boundary_mass, d) : energy(boundary_mass, d) / rg;
  r.e2_omega = ro == 0.0 ? energy(domain_mass, d) : energy(domain_mass, d) / ro;
  return r;
}

inline ErrorRecord compute_errors(const Problem& p, std::span<const double> y, std::span<const double> y_ref) {
  ErrorRecord r = compute_errors(y, y_ref, p.boundary_mass(), p.domain_mass);
  r.mesh_id = p.mesh_id;
  r.c0 = p.c0;
  return r;
}

struct Extrema {
  double min = 0.0;
  double max = 0.0;
};

inline Extrema field_extrema(std::span<const double> y) {
  if (y.empty()) throw InvalidParameter("field_extrema: empty field");
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  return {*lo, *hi};
}

/// Method II default lower bound: 95% of the smallest Steklov eigenvalue.
inline constexpr double kDefaultDeltaFactor = 0.95;

struct SweepSpec {
  Grid grid = Grid::coarse;
  std::optional<Mesh> mesh;  ///< replaces `grid` when set
  std::vector<std::string> methods{"method1", "method2"};
  std::vector<int> params{5, 10, 20, 40, 80, 160};
  std::vector<double> alphas{0.25, 0.5, 0.75};
  std::vector<double> c0s{5.0};
  double sigma = 0.5;
  double delta_factor = kDefaultDeltaFactor;
  CgOptions cg{};
};

/// The two standard error-table parameter grids: (1) c0 = 5 with
/// alpha in {1/4, 1/2, 3/4}; (2) alpha = 1/2 with c0 in {1, 5, 25}.
inline SweepSpec table_spec(int table) {
  SweepSpec s;
  if (table == 1) {
    s.alphas = {0.25, 0.5, 0.75};
    s.c0s = {5.0};
  } else if (table == 2) {
    s.alphas = {0.5};
    s.c0s = {1.0, 5.0, 25.0};
  } else {
    throw InvalidParameter("unknown table " + std::to_string(table) + " (expected 1 or 2)");
  }
  return s;
}

/// Runs every (method, c0, alpha, param) point and measures it against the
/// spectral reference when the boundary is small enough, otherwise against
/// the largest-parameter run of the same method. A failing point is recorded
/// with its message and the sweep continues. Records come back sorted by
/// (method, c0, alpha, param).
inline std::vector<ErrorRecord> convergence_sweep(const SweepSpec& spec) {
  for (const auto& m : spec.methods) {
    if (m != "method1" && m != "method2") throw InvalidParameter("convergence_sweep: unknown method '" + m + "'");
  }
  if (spec.params.empty() || spec.alphas.empty() || spec.c0s.empty())
    throw InvalidParameter("convergence_sweep: empty parameter grid");

  const Mesh mesh = spec.mesh ? *spec.mesh : make_grid(spec.grid);
  const std::string mesh_id = spec.mesh ? "custom" : grid_name(spec.grid);
  struct Setup {
    Problem problem;
    std::optional<SpectralReference> reference;
    double lambda1 = 0.0;
  };
  std::vector<std::unique_ptr<Setup>> setups;
  for (double c0 : spec.c0s) {
    auto s = std::make_unique<Setup>(Setup{make_problem(mesh, c0, 1.0, constant(1.0), mesh_id), {}, 0.0});
    if (s->problem.op.num_boundary() <= kMaxOracleBoundary) {
      s->reference.emplace(s->problem);
      s->lambda1 = s->reference->smallest_eigenvalue();
    } else {
      s->lambda1 = smallest_eig_inverse_iteration(s->problem.op).eigenvalue;
    }
    setups.push_back(std::move(s));
  }

  struct Point {
    std::string method;
    std::size_t setup;
    double alpha;
  };
  std::vector<Point> groups;
  for (const auto& m : spec.methods)
    for (std::size_t c = 0; c < setups.size(); ++c)
      for (double a : spec.alphas) groups.push_back({m, c, a});

  std::vector<int> params = spec.params;
  std::sort(params.begin(), params.end());
  std::vector<std::vector<ErrorRecord>> results(groups.size());

  parallel_for(groups.size(), [&](std::size_t gi) {
    const Point& g = groups[gi];
    const Setup& s = *setups[g.setup];
    const Problem& p = s.problem;
    auto run = [&](int param) -> Vector {
      if (g.method == "method1") {
        Method1Options o;
        o.cg = spec.cg;
        o.threads = 1;
        return solve_method1(p.bilinear(), p.boundary_mass(), p.load, g.alpha, param, o).y;
      }
      Method2Options o;
      o.cg = spec.cg;
      o.lambda_min = s.lambda1;
      return solve_method2(p.op, p.load, g.alpha, {param, spec.sigma, spec.delta_factor * s.lambda1}, o).w;
    };

    Vector ref;
    std::string ref_id;
    std::string ref_failure;
    try {
      if (s.reference) {
        ref = s.reference->field(g.alpha, spec.cg);
        ref_id = "spectral";
      } else {
        ref = run(params.back());
        ref_id = g.method + "@" + std::to_string(params.back());
      }
    } catch (const Error& e) {
      ref_failure = std::string("reference failed: ") + e.what();
    }

    for (int param : params) {
      ErrorRecord r;
      try {
        if (!ref_failure.empty()) throw Error(ref_failure);
        const Vector y = run(param);
        r = compute_errors(p, y, ref);
      } catch (const Error& e) {
        r.failure = e.what();
      }
      r.method = g.method;
      r.alpha = g.alpha;
      r.c0 = p.c0;
      r.param = param;
      r.sigma = g.method == "method2" ? spec.sigma : 0.0;
      r.mesh_id = p.mesh_id;
      r.ref = ref_id;
      results[gi].push_back(std::move(r));
    }
  });

  std::vector<ErrorRecord> out;
  for (auto& v : results)
    for (auto& r : v) out.push_back(std::move(r));
  std::stable_sort(out.begin(), out.end(), [](const ErrorRecord& a, const ErrorRecord& b) {
    return std::tie(a.method, a.c0, a.alpha, a.param) < std::tie(b.method, b.c0, b.alpha, b.param);
  });
  return out;
}

/// Observed order log2(e(N) / e(2N)) for consecutive doubled parameters.
inline std::vector<double> observed_orders(const std::vector<double>& errors) {
  std::vector<double> p;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) p.push_back(std::log2(errors[i] / errors[i + 1]));
  return p;
}

}  // namespace fracsteklov
