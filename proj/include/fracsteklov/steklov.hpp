#pragma once

// Discrete Dirichlet-to-Neumann operator: boundary Schur complement of the
// FE matrix, generalized Steklov eigenpairs, and the spectral solution of
// S^alpha y = g that serves as reference for the two fractional solvers.

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "assembly.hpp"
#include "error.hpp"
#include "parallel.hpp"
#include "sparse.hpp"

namespace fracsteklov {

/// Matrix realization of S through <S y, v>_boundary = a(y, v): the full
/// bilinear form A, the boundary mass M_gamma, and the boundary/interior
/// partition of the unknowns.
class SteklovOperator {
 public:
  SteklovOperator(SparseMatrix a, SparseMatrix boundary_mass, std::vector<Index> boundary_nodes)
      : a_(std::move(a)), mg_(std::move(boundary_mass)), boundary_(std::move(boundary_nodes)) {
    const std::size_t n = a_.size();
    if (mg_.size() != n) throw InvalidParameter("SteklovOperator: A and M_gamma differ in size");
    if (boundary_.empty()) throw InvalidParameter("SteklovOperator: empty boundary");
    std::vector<bool> is_boundary(n, false);
    for (std::size_t i = 0; i < boundary_.size(); ++i) {
      if (boundary_[i] >= n || (i > 0 && boundary_[i] <= boundary_[i - 1]))
        throw InvalidParameter("SteklovOperator: boundary nodes must be sorted, unique and in range");
      is_boundary[boundary_[i]] = true;
    }
    local_.assign(n, 0);
    std::size_t nb = 0, ni = 0;
    for (Index v = 0; v < n; ++v) {
      if (is_boundary[v]) {
        local_[v] = nb++;
      } else {
        local_[v] = ni++;
        interior_.push_back(v);
      }
    }
    auto rp = mg_.row_ptr();
    auto ci = mg_.col_index();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) {
        if (mg_.values()[k] != 0.0 && !(is_boundary[i] && is_boundary[ci[k]]))
          throw InvalidParameter("SteklovOperator: boundary mass has entries outside boundary rows/columns");
      }
    }
    a_ii_ = a_.block(interior_, interior_);
    a_ib_ = a_.block(interior_, boundary_);
    a_bi_ = a_.block(boundary_, interior_);
    a_bb_ = a_.block(boundary_, boundary_);
    m_b_ = mg_.block(boundary_, boundary_);
  }

  std::size_t size() const noexcept { return a_.size(); }
  std::size_t num_boundary() const noexcept { return boundary_.size(); }
  std::size_t num_interior() const noexcept { return interior_.size(); }

  const SparseMatrix& bilinear() const noexcept { return a_; }
  const SparseMatrix& boundary_mass() const noexcept { return mg_; }
  const std::vector<Index>& boundary_nodes() const noexcept { return boundary_; }
  const std::vector<Index>& interior_nodes() const noexcept { return interior_; }

  const SparseMatrix& interior_block() const noexcept { return a_ii_; }
  const SparseMatrix& interior_boundary_block() const noexcept { return a_ib_; }
  const SparseMatrix& boundary_interior_block() const noexcept { return a_bi_; }
  const SparseMatrix& boundary_block() const noexcept { return a_bb_; }
  /// M_B: boundary restriction of M_gamma (SPD).
  const SparseMatrix& boundary_mass_block() const noexcept { return m_b_; }

  Vector restrict_to_boundary(std::span<const double> full) const {
    Vector out(boundary_.size());
    for (std::size_t i = 0; i < boundary_.size(); ++i) out[i] = full[boundary_[i]];
    return out;
  }

  Vector restrict_to_interior(std::span<const double> full) const {
    Vector out(interior_.size());
    for (std::size_t i = 0; i < interior_.size(); ++i) out[i] = full[interior_[i]];
    return out;
  }

  /// Full vector from boundary and interior parts.
  Vector assemble(std::span<const double> boundary, std::span<const double> interior) const {
    Vector full(size(), 0.0);
    for (std::size_t i = 0; i < boundary_.size(); ++i) full[boundary_[i]] = boundary[i];
    for (std::size_t i = 0; i < interior_.size(); ++i) full[interior_[i]] = interior[i];
    return full;
  }

  /// max |(A w)_i| over interior rows; zero for a discrete harmonic w.
  double interior_residual(std::span<const double> w) const {
    const Vector aw = a_ * w;
    double m = 0.0;
    for (Index v : interior_) m = std::max(m, std::abs(aw[v]));
    return m;
  }

  /// sqrt(w' M_gamma w)
  double boundary_norm(std::span<const double> w) const { return std::sqrt(std::max(0.0, dot(w, mg_ * w))); }

 private:
  SparseMatrix a_, mg_;
  std::vector<Index> boundary_, interior_;
  std::vector<std::size_t> local_;
  SparseMatrix a_ii_, a_ib_, a_bi_, a_bb_, m_b_;
};

inline SteklovOperator make_steklov_operator(const Mesh& m, const Coefficients& coeff) {
  return SteklovOperator(assemble_bilinear(m, coeff), assemble_boundary_mass(m), m.boundary_nodes());
}

/// Boundary values u with A_II u_I = -A_IB y_B; the returned full vector has
/// trace exactly y_B.
inline Vector harmonic_extension(const SteklovOperator& op, std::span<const double> boundary_values,
                                 const CgOptions& cg = {}) {
  if (boundary_values.size() != op.num_boundary()) throw InvalidParameter("harmonic_extension: wrong trace length");
  Vector interior(op.num_interior(), 0.0);
  if (op.num_interior() > 0) {
    Vector rhs(op.num_interior());
    op.interior_boundary_block().multiply_add(boundary_values, rhs, -1.0);
    interior = cg_solve(op.interior_block(), rhs, cg).x;
  }
  return op.assemble(boundary_values, interior);
}

/// Nodal boundary values of the L2(boundary) projection: M_B g_hat = b_B.
inline Vector project_boundary_data(const SteklovOperator& op, std::span<const double> load, double tol = 1e-14) {
  const Vector rhs = load.size() == op.size() ? op.restrict_to_boundary(load) : Vector(load.begin(), load.end());
  if (rhs.size() != op.num_boundary()) throw InvalidParameter("project_boundary_data: wrong load length");
  CgOptions cg;
  cg.tol = tol;
  return cg_solve(op.boundary_mass_block(), rhs, cg).x;
}

struct SchurBlocks {
  DenseMatrix stiffness;  ///< S_B = A_BB - A_BI A_II^{-1} A_IB
  DenseMatrix mass;       ///< M_B
};

inline constexpr std::size_t kMaxOracleBoundary = 512;

/// Dense S_B and M_B, one interior solve per boundary node. Limited to at
/// most 512 boundary nodes.
inline SchurBlocks schur_complement(const SteklovOperator& op, CgOptions cg = {.tol = 1e-13}) {
  const std::size_t nb = op.num_boundary();
  if (nb > kMaxOracleBoundary)
    throw InvalidParameter("schur_complement: " + std::to_string(nb) + " boundary nodes exceed the dense limit of " +
                           std::to_string(kMaxOracleBoundary));
  SchurBlocks out{DenseMatrix::from_sparse(op.boundary_block()), DenseMatrix::from_sparse(op.boundary_mass_block())};
  if (op.num_interior() == 0) return out;

  std::vector<Vector> columns(nb);
  parallel_for(nb, [&](std::size_t j) {
    Vector e(nb, 0.0);
    e[j] = 1.0;
    Vector rhs(op.num_interior());
    op.interior_boundary_block().multiply_add(e, rhs, -1.0);
    const Vector x = cg_solve(op.interior_block(), rhs, cg).x;
    columns[j] = op.boundary_interior_block() * x;
  });
  for (std::size_t j = 0; j < nb; ++j)
    for (std::size_t i = 0; i < nb; ++i) out.stiffness(i, j) += columns[j][i];
  return out;
}

/// Steklov eigenpairs: ascending eigenvalues, M_B-orthonormal eigenvectors
/// (column j of `vectors` is psi_j on the boundary nodes).
struct EigenPairSet {
  Vector values;
  DenseMatrix vectors;

  std::size_t size() const noexcept { return values.size(); }
  double smallest() const { return values.front(); }
};

/// Solves S_B psi = lambda M_B psi via M_B = L L' and a Jacobi eigensolve of
/// L^{-1} S_B L^{-T}.
inline EigenPairSet steklov_eigs(const DenseMatrix& stiffness, const DenseMatrix& mass) {
  const std::size_t n = stiffness.rows();
  if (mass.rows() != n || stiffness.cols() != n || mass.cols() != n) throw InvalidParameter("steklov_eigs: size mismatch");
  std::optional<Cholesky> chol;
  try {
    chol.emplace(mass);
  } catch (const NotSpdError& e) {
    throw NotSpdError(std::string("steklov_eigs: boundary mass is not SPD: ") + e.what());
  }
  // C = L^{-1} S L^{-T}, built column by column
  DenseMatrix tmp(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const Vector col = chol->solve_lower(stiffness.column(j));
    for (std::size_t i = 0; i < n; ++i) tmp(i, j) = col[i];
  }
  DenseMatrix c(n, n);
  const DenseMatrix tt = tmp.transpose();
  for (std::size_t j = 0; j < n; ++j) {
    const Vector col = chol->solve_lower(tt.column(j));
    for (std::size_t i = 0; i < n; ++i) c(i, j) = col[i];
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) c(i, j) = c(j, i) = 0.5 * (c(i, j) + c(j, i));

  const SymmetricEigen eig = dense_sym_eig(c);
  EigenPairSet out{eig.values, DenseMatrix(n, n)};
  for (std::size_t j = 0; j < n; ++j) {
    const Vector psi = chol->solve_upper(eig.vectors.column(j));
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = psi[i];
  }
  return out;
}

inline EigenPairSet steklov_eigs(const SchurBlocks& blocks) { return steklov_eigs(blocks.stiffness, blocks.mass); }

struct InverseIterationOptions {
  double tol = 1e-13;
  std::size_t max_iter = 1000;
  CgOptions cg{};
};

struct InverseIterationResult {
  double eigenvalue = 0.0;
  std::size_t iterations = 0;
  Vector eigenvector;  ///< full-space, discrete harmonic, unit boundary norm
};

/// Smallest Steklov eigenvalue by x <- A^{-1} M_gamma x with boundary-norm
/// normalization. Stops when consecutive Rayleigh quotients a(x,x)/<x,x>
/// agree to `tol` relative.
inline InverseIterationResult smallest_eig_inverse_iteration(const SteklovOperator& op,
                                                             const InverseIterationOptions& opt = {},
                                                             std::optional<Vector> start = std::nullopt) {
  const std::size_t n = op.size();
  Vector x = start ? *start : Vector(n, 1.0);
  if (x.size() != n) throw InvalidParameter("inverse iteration: start vector has wrong length");
  if (op.boundary_norm(x) == 0.0) {
    // no boundary trace: restart from the boundary indicator
    x.assign(n, 0.0);
    for (Index v : op.boundary_nodes()) x[v] = 1.0;
  }
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t it = 1; it <= opt.max_iter; ++it) {
    const Vector rhs = op.boundary_mass() * x;
    x = cg_solve(op.bilinear(), rhs, opt.cg).x;
    const double scale = op.boundary_norm(x);
    for (double& v : x) v /= scale;
    const double q = dot(x, op.bilinear() * x);
    if (std::abs(q - previous) <= opt.tol * std::abs(q)) return {q, it, std::move(x)};
    previous = q;
  }
  throw NonConvergence("inverse iteration: no convergence in " + std::to_string(opt.max_iter) + " iterations",
                       std::abs(previous));
}

/// y_B = sum_j lambda_j^{-alpha} (psi_j' b_B) psi_j, the discrete solution of
/// S^alpha y = g with boundary load b_B. alpha = 1 is allowed for checks.
inline Vector spectral_fractional_solve(const EigenPairSet& eigs, std::span<const double> boundary_load, double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InvalidParameter("spectral solve: alpha must lie in (0, 1]");
  const std::size_t n = eigs.size();
  if (boundary_load.size() != n) throw InvalidParameter("spectral solve: load length differs from eigenbasis");
  Vector y(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double coef = 0.0;
    for (std::size_t i = 0; i < n; ++i) coef += eigs.vectors(i, j) * boundary_load[i];
    coef *= std::pow(eigs.values[j], -alpha);
    for (std::size_t i = 0; i < n; ++i) y[i] += coef * eigs.vectors(i, j);
  }
  return y;
}

}  // namespace fracsteklov
