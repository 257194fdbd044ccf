#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"

using namespace fracsteklov;
using namespace fracsteklov::testing;

namespace {

struct Setup {
  Problem problem = make_problem(Grid::coarse, 5.0);
  SpectralReference reference{problem};
};

const Setup& setup() {
  static const Setup s;
  return s;
}

double method1_error(double alpha, int m) {
  const auto& s = setup();
  const auto& p = s.problem;
  const Vector y = solve_method1(p.bilinear(), p.boundary_mass(), p.load, alpha, m).y;
  return compute_errors(p, y, s.reference.field(alpha)).e2_gamma;
}

/// Scalar rule applied to S = [lambda], summed in long double.
long double scalar_rule(double lambda, double alpha, int m) {
  const QuadratureRule r = build_rule(m, alpha);
  long double sum = 0.0L;
  for (std::size_t i = 0; i < r.size(); ++i) sum += r.weights[i] / (1.0L + r.shifts[i] * lambda);
  return sum;
}

}  // namespace

TEST(Quadrature, RuleForOneNodePair) {
  const QuadratureRule r = build_rule(1, 0.5);
  EXPECT_EQ(r.step, 1.0);
  EXPECT_EQ(r.nodes, (Vector{-1.0, 0.0, 1.0}));
  const double pi = std::numbers::pi, e = std::numbers::e;
  EXPECT_NEAR(r.weights[0], 2.0 / (pi * e), 1e-15);
  EXPECT_NEAR(r.weights[1], 2.0 / pi, 1e-15);
  EXPECT_NEAR(r.weights[2], 2.0 * e / pi, 1e-15);
  EXPECT_NEAR(r.weights[0], 0.234199, 1e-6);
  EXPECT_NEAR(r.weights[2], 1.730512, 1e-6);
  EXPECT_NEAR(r.shifts[2], e * e, 1e-14);
}

TEST(Quadrature, RuleInvariants) {
  for (double a : {0.01, 0.25, 0.5, 0.99})
    for (int m : {1, 5, 40, 160}) {
      const QuadratureRule r = build_rule(m, a);
      ASSERT_EQ(r.size(), static_cast<std::size_t>(2 * m + 1));
      EXPECT_DOUBLE_EQ(r.step, 1.0 / std::sqrt(m));
      for (std::size_t i = 0; i < r.size(); ++i) {
        EXPECT_GT(r.weights[i], 0.0);
        EXPECT_EQ(r.nodes[i], -r.nodes[r.size() - 1 - i]);
      }
    }
}

TEST(Quadrature, StepOverride) {
  const QuadratureRule r = build_rule(4, 0.5, 0.3);
  EXPECT_EQ(r.step, 0.3);
  EXPECT_NEAR(r.nodes.back(), 1.2, 1e-15);
  EXPECT_THROW(build_rule(4, 0.5, 0.0), InvalidParameter);
}

TEST(Quadrature, RuleRejectsBadParameters) {
  EXPECT_THROW(build_rule(0, 0.5), InvalidParameter);
  EXPECT_THROW(build_rule(5, 0.0), InvalidParameter);
  EXPECT_THROW(build_rule(5, 1.0), InvalidParameter);
  EXPECT_THROW(build_rule(5, -0.2), InvalidParameter);
}

TEST(Quadrature, ScalarRuleConvergesToOne) {
  // The integral of (2 sin(pi a)/pi) e^{2as}/(1 + e^{2s}) over R is exactly 1.
  // With step M^{-1/2} the truncation at |s| = sqrt(M) dominates; the error
  // at M = 40 is about 2.1e-3 for a = 1/2, then drops quickly.
  double previous = 1.0;
  for (int m : {5, 10, 20, 40, 80, 160, 320}) {
    const double err = std::abs(static_cast<double>(scalar_rule(1.0, 0.5, m)) - 1.0);
    EXPECT_LT(err, previous) << m;
    previous = err;
  }
  EXPECT_NEAR(std::abs(static_cast<double>(scalar_rule(1.0, 0.5, 40)) - 1.0), 2.1057361829e-3, 1e-11);
  EXPECT_LT(std::abs(static_cast<double>(scalar_rule(1.0, 0.5, 80)) - 1.0), 1e-3);
}

TEST(Quadrature, ScalarSolveMatchesClosedForm) {
  // S_B = [lambda] realized as A = [lambda], M_gamma = [1]
  for (double lambda : {0.5, 1.0, 4.0})
    for (double a : {0.25, 0.5, 0.75}) {
      const auto A = SparseMatrix::from_triplets(1, {{0, 0, lambda}});
      const auto M = SparseMatrix::identity(1);
      const double y = solve_method1(A, M, Vector{1.0}, a, 40).y[0];
      EXPECT_NEAR(y, static_cast<double>(scalar_rule(lambda, a, 40)), 1e-13);
      // the rule error at M = 1280 is below 1e-7 for every case
      const double fine = solve_method1(A, M, Vector{1.0}, a, 1280).y[0];
      EXPECT_NEAR(fine, std::pow(lambda, -a), 1e-7) << lambda << " " << a;
    }
}

TEST(Quadrature, MatchesOracleAtLargeM) {
  EXPECT_LE(method1_error(0.5, 200), 1e-4);
}

TEST(Quadrature, ErrorDecreasesWithM) {
  std::vector<double> e;
  for (int m : {5, 10, 20, 40, 80, 160}) e.push_back(method1_error(0.5, m));
  for (std::size_t i = 1; i < e.size(); ++i) EXPECT_LT(e[i], e[i - 1]);
  EXPECT_NEAR(e.front(), 1.1e-1, 0.3e-1);
  EXPECT_GE(e[4] / e[5], 10.0);
}

TEST(Quadrature, EndpointsConvergeSlower) {
  const double mid = method1_error(0.5, 160);
  EXPECT_GT(method1_error(0.25, 160), 50.0 * mid);
  EXPECT_GT(method1_error(0.75, 160), 50.0 * mid);
}

TEST(Quadrature, TermsAreNonnegativeAndOrderIndependent) {
  const auto& p = setup().problem;
  Method1Options o;
  o.keep_terms = true;
  const Method1Result r = solve_method1(p.bilinear(), p.boundary_mass(), p.load, 0.5, 40, o);
  ASSERT_EQ(r.terms.size(), r.rule.size());
  for (const auto& t : r.terms) EXPECT_GE(field_extrema(p.op.restrict_to_boundary(t)).min, -1e-8);
  Vector reversed(p.bilinear().size(), 0.0);
  for (std::size_t i = r.terms.size(); i-- > 0;)
    for (std::size_t k = 0; k < reversed.size(); ++k) reversed[k] += r.rule.weights[i] * r.terms[i][k];
  EXPECT_LE(rel_diff(reversed, r.y), 1e-13);
}

TEST(Quadrature, ThreadCountDoesNotChangeResult) {
  const auto& p = setup().problem;
  Method1Options one, many;
  one.threads = 1;
  many.threads = 4;
  const Vector a = solve_method1(p.bilinear(), p.boundary_mass(), p.load, 0.25, 20, one).y;
  const Vector b = solve_method1(p.bilinear(), p.boundary_mass(), p.load, 0.25, 20, many).y;
  EXPECT_EQ(a, b);
}

TEST(Quadrature, ReportAggregatesSolves) {
  const auto& p = setup().problem;
  const Method1Result r = solve_method1(p.bilinear(), p.boundary_mass(), p.load, 0.5, 10);
  EXPECT_EQ(r.report.solves, 21u);
  EXPECT_EQ(r.report.per_solve_iterations.size(), 21u);
  std::size_t total = 0;
  for (auto it : r.report.per_solve_iterations) total += it;
  EXPECT_EQ(total, r.report.iterations);
  EXPECT_LE(r.report.relative_residual, 1e-12);
  EXPECT_EQ(r.report.method, "method1");
}

TEST(Quadrature, NodeFailureNamesNode) {
  const auto& p = setup().problem;
  Method1Options o;
  o.cg.max_iter = 1;
  o.threads = 1;
  try {
    solve_method1(p.bilinear(), p.boundary_mass(), p.load, 0.5, 3, o);
    FAIL() << "expected failure";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("node m = -3"), std::string::npos) << e.what();
  }
}

TEST(Quadrature, DimensionMismatch) {
  const auto& p = setup().problem;
  EXPECT_THROW(solve_method1(p.bilinear(), p.boundary_mass(), Vector(3, 1.0), 0.5, 3), InvalidParameter);
}
