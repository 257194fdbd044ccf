#pragma once

// Linear-algebra kernels: CSR storage, Jacobi-preconditioned conjugate
// gradients, dense Cholesky and a cyclic Jacobi symmetric eigensolver.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "error.hpp"

namespace fracsteklov {

using Vector = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

/// Square sparse matrix in compressed-row form. Column indices are sorted
/// within each row and unique.
class SparseMatrix {
 public:
  struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
  };

  SparseMatrix() = default;

  /// Duplicate entries are summed in insertion order, so the result is a
  /// deterministic function of the triplet sequence.
  static SparseMatrix from_triplets(std::size_t n, std::vector<Triplet> triplets) {
    std::vector<std::size_t> order(triplets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::tie(triplets[a].row, triplets[a].col) < std::tie(triplets[b].row, triplets[b].col);
    });
    SparseMatrix m;
    m.n_ = n;
    m.cols_count_ = n;
    m.row_ptr_.assign(n + 1, 0);
    for (std::size_t k = 0; k < order.size();) {
      const auto& t = triplets[order[k]];
      if (t.row >= n || t.col >= n) throw Error("SparseMatrix: triplet index out of range");
      double sum = 0.0;
      std::size_t j = k;
      for (; j < order.size() && triplets[order[j]].row == t.row && triplets[order[j]].col == t.col; ++j)
        sum += triplets[order[j]].value;
      m.cols_.push_back(t.col);
      m.vals_.push_back(sum);
      ++m.row_ptr_[t.row + 1];
      k = j;
    }
    for (std::size_t i = 0; i < n; ++i) m.row_ptr_[i + 1] += m.row_ptr_[i];
    return m;
  }

  static SparseMatrix identity(std::size_t n) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
    return from_triplets(n, std::move(t));
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t nonzeros() const noexcept { return vals_.size(); }
  std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const std::size_t> col_index() const noexcept { return cols_; }
  std::span<const double> values() const noexcept { return vals_; }

  /// Entry (i, j), zero when not stored.
  double at(std::size_t i, std::size_t j) const {
    auto first = cols_.begin() + row_ptr_[i];
    auto last = cols_.begin() + row_ptr_[i + 1];
    auto it = std::lower_bound(first, last, j);
    return (it != last && *it == j) ? vals_[it - cols_.begin()] : 0.0;
  }

  /// y = scale * A x + beta * y
  void multiply_add(std::span<const double> x, std::span<double> y, double scale = 1.0, double beta = 0.0) const {
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += vals_[k] * x[cols_[k]];
      y[i] = scale * s + (beta == 0.0 ? 0.0 : beta * y[i]);
    }
  }

  Vector operator*(std::span<const double> x) const {
    Vector y(n_);
    multiply_add(x, y);
    return y;
  }

  Vector diagonal() const {
    Vector d(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) d[i] = at(i, i);
    return d;
  }

  double norm_inf() const {
    double m = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      double s = 0.0;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) s += std::abs(vals_[k]);
      m = std::max(m, s);
    }
    return m;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : vals_) m = std::max(m, std::abs(v));
    return m;
  }

  /// Exact (bitwise) structural and numerical symmetry.
  bool is_symmetric() const {
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        if (at(cols_[k], i) != vals_[k]) return false;
      }
    }
    return true;
  }

  /// Submatrix A[rows, cols]; `rows` and `cols` are index lists into this matrix.
  SparseMatrix block(std::span<const std::size_t> rows, std::span<const std::size_t> cols) const {
    std::vector<std::size_t> col_map(n_, npos);
    for (std::size_t j = 0; j < cols.size(); ++j) col_map[cols[j]] = j;
    SparseMatrix b;
    b.n_ = rows.size();
    b.cols_count_ = cols.size();
    b.row_ptr_.assign(rows.size() + 1, 0);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      const std::size_t i = rows[r];
      std::vector<std::pair<std::size_t, double>> entries;
      for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
        if (col_map[cols_[k]] != npos) entries.push_back({col_map[cols_[k]], vals_[k]});
      }
      std::sort(entries.begin(), entries.end());
      for (auto& [c, v] : entries) {
        b.cols_.push_back(c);
        b.vals_.push_back(v);
      }
      b.row_ptr_[r + 1] = b.cols_.size();
    }
    return b;
  }

  /// Column count; equals size() except for rectangular blocks.
  std::size_t cols() const noexcept { return cols_count_; }

 private:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::size_t n_ = 0;
  std::size_t cols_count_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> cols_;
  std::vector<double> vals_;
};

using SymSparseMatrix = SparseMatrix;

/// Lazily applied linear combination sum_i c_i M_i of same-size sparse matrices.
class LinearOperator {
 public:
  struct Term {
    double coefficient;
    const SparseMatrix* matrix;
  };

  LinearOperator() = default;
  LinearOperator(std::initializer_list<std::pair<double, const SparseMatrix*>> terms) {
    for (auto [c, m] : terms) add(c, *m);
  }
  explicit LinearOperator(const SparseMatrix& m) { add(1.0, m); }

  LinearOperator& add(double coefficient, const SparseMatrix& m) {
    if (!terms_.empty() && m.size() != terms_.front().matrix->size())
      throw Error("LinearOperator: matrix dimensions differ");
    terms_.push_back({coefficient, &m});
    return *this;
  }

  std::size_t size() const { return terms_.empty() ? 0 : terms_.front().matrix->size(); }
  const std::vector<Term>& terms() const noexcept { return terms_; }

  void apply(std::span<const double> x, std::span<double> y) const {
    std::fill(y.begin(), y.end(), 0.0);
    for (const auto& t : terms_) {
      if (t.coefficient != 0.0) t.matrix->multiply_add(x, y, t.coefficient, 1.0);
    }
  }

  Vector diagonal() const {
    Vector d(size(), 0.0);
    for (const auto& t : terms_) {
      const Vector td = t.matrix->diagonal();
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += t.coefficient * td[i];
    }
    return d;
  }

 private:
  std::vector<Term> terms_;
};

struct SolveReport {
  std::string method;
  std::size_t iterations = 0;
  double relative_residual = 0.0;
  double wall_seconds = 0.0;
  /// Aggregates over multiple inner solves (Method I nodes, Method II steps).
  std::size_t solves = 1;
  std::size_t max_iterations = 0;
  std::vector<std::size_t> per_solve_iterations;
};

struct CgOptions {
  double tol = 1e-12;
  /// 0 selects 10 * N.
  std::size_t max_iter = 0;
  /// Record the CG energy 1/2 x'Ax - b'x after every iteration.
  bool track_energy = false;
};

struct CgResult {
  Vector x;
  SolveReport report;
  std::vector<double> energy;
};

/// Jacobi-preconditioned conjugate gradients for an SPD operator. Stops when
/// the true residual satisfies ||b - Ax|| <= tol ||b||. A non-positive
/// curvature p'Ap <= 0 raises NotSpdError.
inline CgResult cg_solve(const LinearOperator& op, std::span<const double> b, const CgOptions& opt = {},
                         std::optional<std::span<const double>> x0 = std::nullopt) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = op.size();
  if (b.size() != n) throw Error("cg_solve: right-hand side has wrong length");
  const std::size_t max_iter = opt.max_iter ? opt.max_iter : 10 * std::max<std::size_t>(n, 1);

  CgResult res;
  res.report.method = "pcg-jacobi";
  res.x.assign(n, 0.0);
  if (x0) std::copy(x0->begin(), x0->end(), res.x.begin());

  const double bnorm = norm2(b);
  auto finish = [&](double rel) {
    res.report.relative_residual = rel;
    res.report.max_iterations = res.report.iterations;
    res.report.per_solve_iterations = {res.report.iterations};
    res.report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
  };
  if (bnorm == 0.0) {
    std::fill(res.x.begin(), res.x.end(), 0.0);
    return finish(0.0);
  }
  for (double v : b) {
    if (!std::isfinite(v)) throw Error("cg_solve: right-hand side is not finite");
  }

  Vector inv_diag = op.diagonal();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(inv_diag[i] > 0.0))
      throw PreconditionError("cg_solve: non-positive diagonal entry " + std::to_string(inv_diag[i]) + " in row " +
                              std::to_string(i));
    inv_diag[i] = 1.0 / inv_diag[i];
  }

  Vector r(n), z(n), p(n), q(n);
  auto true_residual = [&] {
    op.apply(res.x, q);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
    return norm2(r) / bnorm;
  };
  Vector ax(opt.track_energy ? n : 0);
  auto energy = [&] {
    op.apply(res.x, ax);
    return 0.5 * dot(res.x, ax) - dot(res.x, b);
  };

  double rel = true_residual();
  if (opt.track_energy) res.energy.push_back(energy());
  // Restart from the true residual whenever the recursive one claims
  // convergence that the true one does not confirm.
  while (rel > opt.tol) {
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = dot(r, z);
    double rec = rel;
    while (rec > opt.tol) {
      if (res.report.iterations >= max_iter)
        throw NonConvergence("cg_solve: no convergence in " + std::to_string(max_iter) + " iterations", rec);
      op.apply(p, q);
      const double pq = dot(p, q);
      if (!(pq > 0.0)) throw NotSpdError("cg_solve: operator is not positive definite (p'Ap <= 0)");
      const double step = rz / pq;
      for (std::size_t i = 0; i < n; ++i) {
        res.x[i] += step * p[i];
        r[i] -= step * q[i];
      }
      ++res.report.iterations;
      if (opt.track_energy) res.energy.push_back(energy());
      rec = norm2(r) / bnorm;
      for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    rel = true_residual();
  }
  return finish(rel);
}

inline CgResult cg_solve(const SparseMatrix& a, std::span<const double> b, const CgOptions& opt = {}) {
  return cg_solve(LinearOperator(a), b, opt);
}

/// Row-major dense matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static DenseMatrix from_sparse(const SparseMatrix& s) {
    DenseMatrix m(s.size(), s.cols());
    auto rp = s.row_ptr();
    auto ci = s.col_index();
    auto v = s.values();
    for (std::size_t i = 0; i < s.size(); ++i)
      for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) m(i, ci[k]) = v[k];
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  Vector operator*(std::span<const double> x) const {
    Vector y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) s += (*this)(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }

  DenseMatrix operator*(const DenseMatrix& b) const {
    DenseMatrix c(rows_, b.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t k = 0; k < cols_; ++k) {
        const double a = (*this)(i, k);
        if (a == 0.0) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += a * b(k, j);
      }
    return c;
  }

  DenseMatrix transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Vector column(std::size_t j) const {
    Vector c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

  double trace() const {
    double s = 0.0;
    for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) s += (*this)(i, i);
    return s;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Lower-triangular factor M = L L'; construction fails with NotSpdError on a
/// non-positive pivot.
class Cholesky {
 public:
  explicit Cholesky(const DenseMatrix& m) : l_(m.rows(), m.rows()) {
    const std::size_t n = m.rows();
    if (m.cols() != n) throw Error("Cholesky: matrix is not square");
    for (std::size_t j = 0; j < n; ++j) {
      double d = m(j, j);
      for (std::size_t k = 0; k < j; ++k) d -= l_(j, k) * l_(j, k);
      if (!(d > 0.0)) throw NotSpdError("Cholesky: non-positive pivot " + std::to_string(d) + " at " + std::to_string(j));
      const double ljj = std::sqrt(d);
      l_(j, j) = ljj;
      for (std::size_t i = j + 1; i < n; ++i) {
        double s = m(i, j);
        for (std::size_t k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
        l_(i, j) = s / ljj;
      }
    }
  }

  const DenseMatrix& lower() const noexcept { return l_; }
  std::size_t size() const noexcept { return l_.rows(); }

  /// L y = b
  Vector solve_lower(std::span<const double> b) const {
    const std::size_t n = size();
    Vector y(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < i; ++k) y[i] -= l_(i, k) * y[k];
      y[i] /= l_(i, i);
    }
    return y;
  }

  /// L' x = y
  Vector solve_upper(std::span<const double> y) const {
    const std::size_t n = size();
    Vector x(y.begin(), y.end());
    for (std::size_t i = n; i-- > 0;) {
      for (std::size_t k = i + 1; k < n; ++k) x[i] -= l_(k, i) * x[k];
      x[i] /= l_(i, i);
    }
    return x;
  }

  Vector solve(std::span<const double> b) const { return solve_upper(solve_lower(b)); }

 private:
  DenseMatrix l_;
};

inline Vector dense_cholesky_solve(const DenseMatrix& m, std::span<const double> b) { return Cholesky(m).solve(b); }

struct SymmetricEigen {
  Vector values;        ///< ascending
  DenseMatrix vectors;  ///< column j pairs with values[j]; orthonormal
  int sweeps = 0;
};

/// Cyclic Jacobi rotations on a symmetric matrix (only the upper triangle is
/// read). Converges when the off-diagonal Frobenius norm drops below
/// 1e-15 of the total; fails after 100 sweeps.
inline SymmetricEigen dense_sym_eig(const DenseMatrix& input) {
  const std::size_t n = input.rows();
  if (input.cols() != n) throw Error("dense_sym_eig: matrix is not square");
  DenseMatrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = input(i, j);
  DenseMatrix v = DenseMatrix::identity(n);

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) total += a(i, j) * a(i, j);

  auto off = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
    return s;
  };

  constexpr int max_sweeps = 100;
  int sweep = 0;
  for (; off() > 1e-30 * total; ++sweep) {
    if (sweep == max_sweeps) throw NonConvergence("dense_sym_eig: Jacobi sweeps exhausted", std::sqrt(off() / total));
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  SymmetricEigen out;
  out.sweeps = sweep;
  out.values.resize(n);
  out.vectors = DenseMatrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = a(order[j], order[j]);
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
  }
  return out;
}

}  // namespace fracsteklov
