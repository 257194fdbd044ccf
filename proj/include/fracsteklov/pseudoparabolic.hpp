#pragma once

// Method II: the pseudo-time problem
//   (t D + delta I) w' + alpha D w = 0,   w(0) = delta^{-alpha} g,   D = S - delta I,
// whose state at t = 1 is S^{-alpha} g, integrated with the sigma-weighted
// two-level scheme.
//
// The boundary state is carried as its discrete harmonic extension. With
// B = A - delta M_gamma each step solves
//   [(t_s/tau + alpha sigma) B + (delta/tau) M_gamma] w^{n+1}
//     = [(t_s/tau - alpha (1 - sigma)) B + (delta/tau) M_gamma] w^n,
// whose interior rows reduce to multiples of (A w)_I: harmonicity is
// propagated and the boundary rows are the Schur-complement scheme.

#include <chrono>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "sparse.hpp"
#include "steklov.hpp"

namespace fracsteklov {

struct TimeSchemeParams {
  int steps = 0;        ///< N; tau = 1/N
  double sigma = 0.5;   ///< weight in (0, 1]
  double delta = 0.0;   ///< lower spectral bound, 0 < delta <= lambda_1

  double tau() const { return 1.0 / steps; }
  /// sigma >= 1/2 is required for the monotone-norm guarantee.
  bool unconditionally_stable() const { return sigma >= 0.5; }

  void validate() const {
    if (steps < 1) throw InvalidParameter("method2: N must be >= 1, got " + std::to_string(steps));
    if (!(sigma > 0.0 && sigma <= 1.0)) throw InvalidParameter("method2: sigma must lie in (0, 1]");
    if (!(delta > 0.0)) throw InvalidParameter("method2: delta must be positive");
  }
};

struct TimeEvolutionState {
  int step = 0;
  Vector w;  ///< full-space discrete harmonic field
  std::vector<double> norm_history;  ///< ||w^n||_{M_B}, n = 0..step
};

/// w^0 = delta^{-alpha} * harmonic extension of g_hat, M_B g_hat = b_B.
inline TimeEvolutionState initial_state(const SteklovOperator& op, std::span<const double> load, double delta,
                                        double alpha, const CgOptions& cg = {}) {
  if (!(delta > 0.0)) throw InvalidParameter("method2: delta must be positive");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("method2: alpha must lie in (0, 1)");
  Vector trace = project_boundary_data(op, load);
  const double scale = std::pow(delta, -alpha);
  for (double& v : trace) v *= scale;
  TimeEvolutionState s;
  s.w = harmonic_extension(op, trace, cg);
  s.norm_history.push_back(op.boundary_norm(s.w));
  return s;
}

/// Precomputed B = A - delta M_gamma plus the scheme coefficients.
class PseudoParabolicStepper {
 public:
  PseudoParabolicStepper(const SteklovOperator& op, const TimeSchemeParams& params, double alpha,
                         const CgOptions& cg = {})
      : op_(&op), params_(params), alpha_(alpha), cg_(cg) {
    params_.validate();
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidParameter("method2: alpha must lie in (0, 1)");
    std::vector<SparseMatrix::Triplet> t;
    const SparseMatrix& a = op.bilinear();
    const SparseMatrix& m = op.boundary_mass();
    for (const SparseMatrix* mat : {&a, &m}) {
      const double c = mat == &a ? 1.0 : -params.delta;
      auto rp = mat->row_ptr();
      auto ci = mat->col_index();
      auto v = mat->values();
      for (std::size_t i = 0; i < mat->size(); ++i)
        for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) t.push_back({i, ci[k], c * v[k]});
    }
    b_ = SparseMatrix::from_triplets(a.size(), std::move(t));
  }

  const TimeSchemeParams& params() const noexcept { return params_; }
  const SparseMatrix& shifted() const noexcept { return b_; }

  /// One step n -> n+1. The previous state is the CG initial guess.
  TimeEvolutionState step(const TimeEvolutionState& s, SolveReport* report = nullptr) const {
    const double tau = params_.tau();
    const double sigma = params_.sigma;
    const double t_sigma = (s.step + sigma) * tau;
    const double lhs_b = t_sigma / tau + alpha_ * sigma;
    const double rhs_b = t_sigma / tau - alpha_ * (1.0 - sigma);
    const double mass = params_.delta / tau;

    const LinearOperator rhs_op{{rhs_b, &b_}, {mass, &op_->boundary_mass()}};
    Vector rhs(s.w.size());
    rhs_op.apply(s.w, rhs);
    const LinearOperator lhs_op{{lhs_b, &b_}, {mass, &op_->boundary_mass()}};
    CgResult r;
    try {
      r = cg_solve(lhs_op, rhs, cg_, std::span<const double>(s.w));
    } catch (const NotSpdError&) {
      throw ConfigError("method2: step matrix is indefinite; delta = " + std::to_string(params_.delta) +
                        " exceeds the smallest Steklov eigenvalue, choose a smaller delta");
    } catch (const PreconditionError&) {
      throw ConfigError("method2: step matrix has a non-positive diagonal; delta = " + std::to_string(params_.delta) +
                        " is too large, choose a smaller delta");
    }
    if (report) {
      report->iterations += r.report.iterations;
      report->max_iterations = std::max(report->max_iterations, r.report.iterations);
      report->relative_residual = std::max(report->relative_residual, r.report.relative_residual);
      report->per_solve_iterations.push_back(r.report.iterations);
      ++report->solves;
    }
    TimeEvolutionState next;
    next.step = s.step + 1;
    next.w = std::move(r.x);
    next.norm_history = s.norm_history;
    next.norm_history.push_back(op_->boundary_norm(next.w));
    return next;
  }

 private:
  const SteklovOperator* op_;
  TimeSchemeParams params_;
  double alpha_;
  CgOptions cg_;
  SparseMatrix b_;
};

inline TimeEvolutionState step(const TimeEvolutionState& s, const TimeSchemeParams& params, const SteklovOperator& op,
                               double alpha, const CgOptions& cg = {}) {
  return PseudoParabolicStepper(op, params, alpha, cg).step(s);
}

struct Method2Options {
  CgOptions cg{};
  /// Check delta <= lambda_1 once before stepping. Uses `lambda_min` when
  /// given, otherwise runs inverse iteration.
  bool verify_delta = true;
  std::optional<double> lambda_min;
};

struct Method2Result {
  Vector w;
  SolveReport report;
  std::vector<double> norm_history;
  /// max over steps of ||(A w^n)_I||_inf / (||A||_inf ||w^n||_inf)
  double max_harmonicity_defect = 0.0;
  /// steps with ||w^{n+1}|| > ||w^n||
  std::size_t norm_increases = 0;
};

inline Method2Result solve_method2(const SteklovOperator& op, std::span<const double> load, double alpha,
                                   const TimeSchemeParams& params, const Method2Options& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  params.validate();
  if (opt.verify_delta) {
    double lambda = 0.0;
    if (opt.lambda_min) {
      lambda = *opt.lambda_min;
    } else {
      InverseIterationOptions io;
      io.tol = 1e-12;
      io.cg = opt.cg;
      lambda = smallest_eig_inverse_iteration(op, io).eigenvalue;
    }
    if (params.delta > lambda * (1.0 + 1e-9))
      throw ConfigError("method2: delta = " + std::to_string(params.delta) +
                        " exceeds the smallest Steklov eigenvalue " + std::to_string(lambda) +
                        "; choose delta <= lambda_1");
  }

  Method2Result out;
  out.report.method = "method2";
  out.report.solves = 0;
  const PseudoParabolicStepper stepper(op, params, alpha, opt.cg);
  TimeEvolutionState state = initial_state(op, load, params.delta, alpha, opt.cg);
  const double a_norm = op.bilinear().norm_inf();
  auto defect = [&](const Vector& w) {
    const double wn = norm_inf(w);
    return wn == 0.0 ? 0.0 : op.interior_residual(w) / (a_norm * wn);
  };
  out.max_harmonicity_defect = defect(state.w);
  for (int n = 0; n < params.steps; ++n) {
    state = stepper.step(state, &out.report);
    out.max_harmonicity_defect = std::max(out.max_harmonicity_defect, defect(state.w));
    const auto& h = state.norm_history;
    if (h[h.size() - 1] > h[h.size() - 2]) ++out.norm_increases;
  }
  out.w = std::move(state.w);
  out.norm_history = std::move(state.norm_history);
  out.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace fracsteklov
