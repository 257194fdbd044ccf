// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <fracsteklov/fracsteklov.hpp>

using namespace fracsteklov;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool within(double v, double target, double rel) { return std::abs(v - target) <= rel * std::abs(target); }

/// Coarse-grid problem plus oracle per c0, built once.
struct CoarseCase {
  Problem problem;
  SpectralReference reference;
  double lambda1;
  explicit CoarseCase(double c0)
      : problem(make_problem(Grid::coarse, c0)), reference(problem), lambda1(reference.smallest_eigenvalue()) {}
};

CoarseCase& coarse(double c0) {
  static std::map<double, std::unique_ptr<CoarseCase>> cache;
  auto& slot = cache[c0];
  if (!slot) slot = std::make_unique<CoarseCase>(c0);
  return *slot;
}

double method1_e2(double c0, double alpha, int m) {
  auto& c = coarse(c0);
  const auto& p = c.problem;
  const Vector y = solve_method1(p.bilinear(), p.boundary_mass(), p.load, alpha, m).y;
  return compute_errors(p, y, c.reference.field(alpha)).e2_gamma;
}

Method2Result method2(double c0, double alpha, int n, double sigma) {
  auto& c = coarse(c0);
  Method2Options o;
  o.lambda_min = c.lambda1;
  return solve_method2(c.problem.op, c.problem.load, alpha, {n, sigma, kDefaultDeltaFactor * c.lambda1}, o);
}

double method2_e2(double c0, double alpha, int n, double sigma) {
  auto& c = coarse(c0);
  return compute_errors(c.problem, method2(c0, alpha, n, sigma).w, c.reference.field(alpha)).e2_gamma;
}

const std::vector<int> kParams{5, 10, 20, 40, 80, 160};

void c1_eigenvalues(Outcome& o) {
  const struct {
    double c0, lambda;
  } cases[] = {{1.0, 0.212867}, {5.0, 0.949314}, {25.0, 3.170554}};
  for (const auto& k : cases) {
    const auto t0 = std::chrono::steady_clock::now();
    const Problem p = make_problem(Grid::medium, k.c0);
    const double dense = steklov_eigs(schur_complement(p.op)).smallest();
    const double inv = smallest_eig_inverse_iteration(p.op).eigenvalue;
    const double t = seconds_since(t0);
    const double agree = std::abs(dense - inv) / dense;
    o.detail << " c0=" << k.c0 << ": " << fmt(dense) << " (target " << k.lambda << ", oracle/inverse " << fmt(agree, "%.1e")
             << ", " << fmt(t, "%.2f") << " s);";
    o.check(within(dense, k.lambda, 0.05), "lambda_1 within 5% at c0=" + fmt(k.c0));
    o.check(agree <= 1e-8, "dense vs inverse iteration <= 1e-8 at c0=" + fmt(k.c0));
    o.check(t < 10.0, "runtime < 10 s at c0=" + fmt(k.c0));
  }
}

void c2_limiting_cases(Outcome& o) {
  const Problem p = make_problem(Grid::fine, 5.0);
  const Vector d = solve_dirichlet(p);
  const Extrema de = field_extrema(d);
  double max_boundary = -1e300;
  for (Index v : p.op.boundary_nodes()) max_boundary = std::max(max_boundary, d[v]);
  const Extrema ne = field_extrema(solve_neumann(p));
  o.detail << " dirichlet min " << fmt(de.min) << " (target 0.38688), max " << fmt(de.max, "%.15g") << ";"
           << " neumann min " << fmt(ne.min) << " (target 0.7741), max " << fmt(ne.max) << " (target 1.2417);";
  o.check(within(de.min, 0.38688, 0.02), "dirichlet min within 2% of 0.38688");
  o.check(std::abs(de.max - 1.0) <= 1e-12 && max_boundary == de.max, "dirichlet max = 1 on the boundary");
  o.check(within(ne.min, 0.7741, 0.02), "neumann min within 2%");
  o.check(within(ne.max, 1.2417, 0.02), "neumann max within 2%");
}

void c3_fractional_extrema(Outcome& o) {
  const struct {
    Grid grid;
    double c0, alpha, min, max;
  } cases[] = {{Grid::medium, 5.0, 0.5, 0.7668, 1.151}, {Grid::fine, 5.0, 0.5, 0.7668, 1.151},
               {Grid::fine, 5.0, 0.25, 0.767, 1.087},   {Grid::fine, 5.0, 0.75, 0.769, 1.201},
               {Grid::fine, 1.0, 0.5, 2.034, 2.246},    {Grid::fine, 25.0, 0.5, 0.174, 0.690}};
  Extrema medium{}, fine{};
  for (const auto& k : cases) {
    const Problem p = make_problem(k.grid, k.c0);
    const Extrema e = field_extrema(SpectralReference(p).field(k.alpha));
    if (k.c0 == 5.0 && k.alpha == 0.5) (k.grid == Grid::medium ? medium : fine) = e;
    o.detail << ' ' << grid_name(k.grid) << " c0=" << k.c0 << " a=" << k.alpha << ": (" << fmt(e.min, "%.5g") << ", "
             << fmt(e.max, "%.5g") << ");";
    o.check(within(e.min, k.min, 0.02) && within(e.max, k.max, 0.02),
            grid_name(k.grid) + " c0=" + fmt(k.c0) + " alpha=" + fmt(k.alpha) + " within 2%");
  }
  const double drift = std::max(std::abs(medium.min - fine.min) / fine.min, std::abs(medium.max - fine.max) / fine.max);
  o.detail << " medium/fine drift " << fmt(100 * drift, "%.3f") << "%;";
  o.check(drift < 0.006, "grid drift < 0.6%");
}

void c4_method1(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  for (double a : {0.25, 0.5, 0.75}) {
    std::vector<double> e;
    for (int m : kParams) e.push_back(method1_e2(5.0, a, m));
    bool strict = true;
    for (std::size_t i = 1; i < e.size(); ++i) strict = strict && e[i] < e[i - 1];
    const double total = e.front() / e.back(), last = e[4] / e[5];
    o.detail << " a=" << a << ": e2(5)=" << fmt(e.front(), "%.4e") << " e2(160)=" << fmt(e.back(), "%.4e")
             << " total " << fmt(total, "%.3g") << " last " << fmt(last, "%.3g") << ";";
    o.check(strict, "strict decrease at alpha=" + fmt(a));
    if (a == 0.5) {
      o.check(total >= 5e3, "e2(5)/e2(160) >= 5e3");
      o.check(last >= 10.0, "e2(80)/e2(160) >= 10");
    } else {
      o.check(total >= 50.0, "e2(5)/e2(160) >= 50 at alpha=" + fmt(a));
    }
  }
  const double t = seconds_since(t0);
  o.detail << " sweep " << fmt(t, "%.2f") << " s;";
  o.check(t < 60.0, "runtime < 60 s");
}

void c5_method2_orders(Outcome& o) {
  for (double sigma : {0.5, 1.0}) {
    for (double a : {0.25, 0.5, 0.75}) {
      std::vector<double> e;
      for (int n : {20, 40, 80, 160}) e.push_back(method2_e2(5.0, a, n, sigma));
      const auto p = observed_orders(e);
      const double mean = (p[0] + p[1] + p[2]) / 3.0;
      o.detail << " sigma=" << sigma << " a=" << a << ": p=" << fmt(mean, "%.3f") << ";";
      if (sigma == 0.5)
        o.check(mean >= 1.7 && mean <= 2.3, "order in [1.7, 2.3] at alpha=" + fmt(a));
      else
        o.check(mean >= 0.8 && mean <= 1.2, "order in [0.8, 1.2] at sigma=1, alpha=" + fmt(a));
    }
  }
}

void c6_stability(Outcome& o) {
  std::size_t runs = 0, violations = 0, steps = 0;
  double worst = 0.0;
  const std::vector<std::pair<double, double>> points{{5.0, 0.25}, {5.0, 0.5}, {5.0, 0.75}, {1.0, 0.5}, {25.0, 0.5}};
  for (double sigma : {0.5, 0.75, 1.0})
    for (const auto& [c0, a] : points)
      for (int n : kParams) {
        const auto r = method2(c0, a, n, sigma);
        ++runs;
        violations += r.norm_increases;
        steps += static_cast<std::size_t>(n);
        for (std::size_t k = 1; k < r.norm_history.size(); ++k)
          worst = std::max(worst, r.norm_history[k] / r.norm_history[k - 1]);
      }
  o.detail << ' ' << runs << " runs, " << steps << " steps, " << violations << " norm increases, max ratio "
           << fmt(worst, "%.12f") << ";";
  o.check(violations == 0, "no norm increase");
}

void c7_oracle_equivalence(Outcome& o) {
  for (double c0 : {1.0, 5.0, 25.0}) {
    auto& c = coarse(c0);
    const auto& p = c.problem;
    const Vector ref = c.reference.field(0.5);
    const Vector y1 = solve_method1(p.bilinear(), p.boundary_mass(), p.load, 0.5, 200).y;
    const Vector y2 = method2(c0, 0.5, 2000, 0.5).w;
    const double e1 = compute_errors(p, y1, ref).e2_gamma;
    const double e2 = compute_errors(p, y2, ref).e2_gamma;
    const double e12 = compute_errors(p, y1, y2).e2_gamma;
    o.detail << " c0=" << c0 << ": M1 " << fmt(e1, "%.2e") << ", M2 " << fmt(e2, "%.2e") << ", M1-M2 " << fmt(e12, "%.2e")
             << ";";
    o.check(e1 <= 1e-4, "method1 M=200 e2 <= 1e-4 at c0=" + fmt(c0));
    o.check(e2 <= 1e-4, "method2 N=2000 e2 <= 1e-4 at c0=" + fmt(c0));
    o.check(e12 <= 2e-4, "methods agree to 2e-4 at c0=" + fmt(c0));
  }
}

void c8_apriori_bound(Outcome& o) {
  double worst = 0.0;
  for (double c0 : {1.0, 5.0, 25.0}) {
    auto& c = coarse(c0);
    const auto& op = c.problem.op;
    const Vector g = project_boundary_data(op, c.problem.load);
    const SparseMatrix& mb = op.boundary_mass_block();
    const double gn = std::sqrt(dot(g, mb * g));
    for (double a : {0.25, 0.5, 0.75}) {
      const Vector y = c.reference.trace(a);
      const double ratio = std::sqrt(dot(y, mb * y)) / (std::pow(c.lambda1, -a) * gn);
      worst = std::max(worst, ratio);
      o.check(ratio <= 1.0 + 1e-12, "bound at c0=" + fmt(c0) + " alpha=" + fmt(a));
    }
  }
  // single-eigenvalue spectrum: S_B = lambda M_B makes the bound an equality
  const Mesh m = make_grid(Grid::coarse);
  const SparseMatrix mbf = assemble_boundary_mass(m);
  const SparseMatrix mb = mbf.block(m.boundary_nodes(), m.boundary_nodes());
  const DenseMatrix md = DenseMatrix::from_sparse(mb);
  const double lambda = 0.8;
  DenseMatrix sd = md;
  for (std::size_t i = 0; i < sd.rows(); ++i)
    for (std::size_t j = 0; j < sd.cols(); ++j) sd(i, j) *= lambda;
  const EigenPairSet e = steklov_eigs(sd, md);
  Vector b(m.num_boundary_nodes());
  for (std::size_t i = 0; i < b.size(); ++i) b[i] = 1.0 + m.vertex(m.boundary_nodes()[i]).x;
  const Vector g = dense_cholesky_solve(md, b);
  double equality = 0.0;
  for (double a : {0.25, 0.5, 0.75}) {
    const Vector y = spectral_fractional_solve(e, b, a);
    const double lhs = std::sqrt(dot(y, md * y)), rhs = std::pow(lambda, -a) * std::sqrt(dot(g, md * g));
    equality = std::max(equality, std::abs(lhs - rhs) / rhs);
  }
  o.detail << " max ||y||/bound " << fmt(worst, "%.6f") << "; degenerate-spectrum equality " << fmt(equality, "%.1e")
           << ";";
  o.check(equality <= 1e-12, "equality for a single eigenvalue");
}

void c9_scalar(Outcome& o) {
  const auto mass = SparseMatrix::identity(1);
  double worst1 = 0.0, worst2 = 0.0;
  for (double lambda : {0.5, 1.0, 4.0}) {
    const auto a_mat = SparseMatrix::from_triplets(1, {{0, 0, lambda}});
    const SteklovOperator op(a_mat, mass, {0});
    for (double a : {0.25, 0.5, 0.75}) {
      const double y1 = solve_method1(a_mat, mass, Vector{1.0}, a, 40).y[0];
      const double err1 = std::abs(y1 - std::pow(lambda, -a));
      worst1 = std::max(worst1, err1);
      o.check(err1 <= 1e-3, "method1 M=40 lambda=" + fmt(lambda) + " alpha=" + fmt(a) + " error " + fmt(err1, "%.2e"));
      for (int n : {1, 2, 5, 40, 160}) {
        Method2Options opt;
        opt.lambda_min = lambda;
        const double y2 = solve_method2(op, Vector{1.0}, a, {n, 0.5, lambda}, opt).w[0];
        const double err2 = std::abs(y2 - std::pow(lambda, -a));
        worst2 = std::max(worst2, err2);
        o.check(err2 <= 4.0 * std::numeric_limits<double>::epsilon() * std::pow(lambda, -a),
                "method2 stationary lambda=" + fmt(lambda) + " N=" + std::to_string(n));
      }
    }
  }
  o.detail << " method1 M=40 max error " << fmt(worst1, "%.3e") << " (tolerance 1e-3); method2 max error "
           << fmt(worst2, "%.1e") << ";";
}

void c10_c0_insensitivity(Outcome& o) {
  for (const std::string m : {"method1", "method2"}) {
    double lo = 1e300, hi = 0.0;
    for (double c0 : {1.0, 5.0, 25.0}) {
      const double e = m == "method1" ? method1_e2(c0, 0.5, 40) : method2_e2(c0, 0.5, 40, 0.5);
      lo = std::min(lo, e);
      hi = std::max(hi, e);
    }
    o.detail << ' ' << m << ": e2 in [" << fmt(lo, "%.3e") << ", " << fmt(hi, "%.3e") << "], ratio " << fmt(hi / lo, "%.2f")
             << ";";
    o.check(hi / lo <= 10.0, m + " max/min <= 10");
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"C1 Steklov eigenvalue, medium grid", c1_eigenvalues},
      {"C2 limiting cases, fine grid", c2_limiting_cases},
      {"C3 fractional extrema", c3_fractional_extrema},
      {"C4 Method I convergence", c4_method1},
      {"C5 Method II convergence order", c5_method2_orders},
      {"C6 Method II stability", c6_stability},
      {"C7 oracle equivalence", c7_oracle_equivalence},
      {"C8 a-priori bound", c8_apriori_bound},
      {"C9 scalar sanity", c9_scalar},
      {"C10 c0 insensitivity", c10_c0_insensitivity},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [exception: " << e.what() << "]";
    }
    std::printf("%s %s (%.2f s):%s\n", o.pass ? "PASS" : "FAIL", name.c_str(), seconds_since(t0), o.detail.str().c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
