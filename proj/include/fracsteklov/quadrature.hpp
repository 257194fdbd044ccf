#pragma once

// Method I: S^{-alpha} g by the rectangle rule applied to
//   S^{-alpha} = (2 sin(pi alpha) / pi) * int_R e^{2 alpha s} (I + e^{2s} S)^{-1} ds,
// i.e. a positively weighted sum of 2M+1 shifted elliptic solves.

#include <chrono>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "parallel.hpp"
#include "sparse.hpp"

namespace fracsteklov {

struct QuadratureRule {
  int half_width = 0;  ///< M; nodes m = -M..M
  double step = 0.0;   ///< eta
  double alpha = 0.0;
  Vector nodes;    ///< s_m = m * eta
  Vector shifts;   ///< e^{2 s_m}
  Vector weights;  ///< (2 eta sin(pi alpha) / pi) e^{2 alpha s_m}

  std::size_t size() const noexcept { return nodes.size(); }
};

/// Rule with step eta = M^{-1/2} unless `step_override` is given.
inline QuadratureRule build_rule(int half_width, double alpha, std::optional<double> step_override = std::nullopt) {
  if (half_width < 1) throw InvalidParameter("quadrature: M must be >= 1, got " + std::to_string(half_width));
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("quadrature: alpha must lie in (0, 1)");
  const double eta = step_override ? *step_override : 1.0 / std::sqrt(static_cast<double>(half_width));
  if (!(eta > 0.0)) throw InvalidParameter("quadrature: step must be positive");
  QuadratureRule rule;
  rule.half_width = half_width;
  rule.step = eta;
  rule.alpha = alpha;
  const double scale = 2.0 * eta * std::sin(std::numbers::pi * alpha) / std::numbers::pi;
  for (int m = -half_width; m <= half_width; ++m) {
    const double s = m * eta;
    rule.nodes.push_back(s);
    rule.shifts.push_back(std::exp(2.0 * s));
    rule.weights.push_back(scale * std::exp(2.0 * alpha * s));
  }
  return rule;
}

struct Method1Options {
  std::optional<double> step_override;
  CgOptions cg{};
  std::size_t threads = 0;  ///< 0: thread_count()
  bool keep_terms = false;  ///< retain the unweighted per-node solutions
};

struct Method1Result {
  Vector y;
  SolveReport report;
  QuadratureRule rule;
  std::vector<Vector> terms;  ///< per node, only with keep_terms
};

/// y_M = sum_m gamma_m y_m with (e^{2 s_m} A + M_gamma) y_m = b. The solves
/// are independent; the weighted sum is formed afterwards in node order with
/// Neumaier compensation, so the result does not depend on the thread count.
inline Method1Result solve_method1(const SparseMatrix& a, const SparseMatrix& boundary_mass, std::span<const double> load,
                                   double alpha, int half_width, const Method1Options& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = a.size();
  if (boundary_mass.size() != n || load.size() != n) throw InvalidParameter("method1: dimension mismatch");

  Method1Result out;
  out.rule = build_rule(half_width, alpha, opt.step_override);
  const std::size_t nodes = out.rule.size();

  std::vector<Vector> terms(nodes);
  std::vector<std::size_t> iterations(nodes, 0);
  std::vector<double> residuals(nodes, 0.0);
  parallel_for(
      nodes,
      [&](std::size_t i) {
        const LinearOperator op{{out.rule.shifts[i], &a}, {1.0, &boundary_mass}};
        try {
          CgResult r = cg_solve(op, load, opt.cg);
          terms[i] = std::move(r.x);
          iterations[i] = r.report.iterations;
          residuals[i] = r.report.relative_residual;
        } catch (const Error& e) {
          throw Error("method1: solve at node m = " + std::to_string(static_cast<int>(i) - half_width) +
                      " failed: " + e.what());
        }
      },
      opt.threads ? opt.threads : thread_count());

  out.y.assign(n, 0.0);
  Vector carry(n, 0.0);
  for (std::size_t i = 0; i < nodes; ++i) {
    const double w = out.rule.weights[i];
    for (std::size_t k = 0; k < n; ++k) {
      const double v = w * terms[i][k];
      const double t = out.y[k] + v;
      carry[k] += std::abs(out.y[k]) >= std::abs(v) ? (out.y[k] - t) + v : (v - t) + out.y[k];
      out.y[k] = t;
    }
  }
  for (std::size_t k = 0; k < n; ++k) out.y[k] += carry[k];

  out.report.method = "method1";
  out.report.solves = nodes;
  out.report.per_solve_iterations = iterations;
  for (std::size_t i = 0; i < nodes; ++i) {
    out.report.iterations += iterations[i];
    out.report.max_iterations = std::max(out.report.max_iterations, iterations[i]);
    out.report.relative_residual = std::max(out.report.relative_residual, residuals[i]);
  }
  if (opt.keep_terms) out.terms = std::move(terms);
  out.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace fracsteklov
