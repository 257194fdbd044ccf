#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <fracsteklov/fracsteklov.hpp>

namespace fracsteklov::testing {

inline std::mt19937_64& rng() {
  static std::mt19937_64 g(20240611);
  return g;
}

inline Vector random_vector(std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vector v(n);
  for (double& x : v) x = d(rng());
  return v;
}

/// B'B + shift I for a random B; SPD for shift > 0.
inline DenseMatrix random_spd(std::size_t n, double shift = 1.0) {
  DenseMatrix b(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) b(i, j) = random_vector(1)[0];
  DenseMatrix m = b.transpose() * b;
  for (std::size_t i = 0; i < n; ++i) m(i, i) += shift;
  return m;
}

inline DenseMatrix random_symmetric(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) m(i, j) = m(j, i) = random_vector(1)[0];
  return m;
}

inline SparseMatrix to_sparse(const DenseMatrix& d) {
  std::vector<SparseMatrix::Triplet> t;
  for (std::size_t i = 0; i < d.rows(); ++i)
    for (std::size_t j = 0; j < d.cols(); ++j)
      if (d(i, j) != 0.0) t.push_back({i, j, d(i, j)});
  return SparseMatrix::from_triplets(d.rows(), std::move(t));
}

inline double rel_diff(std::span<const double> a, std::span<const double> b) {
  Vector d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return norm2(d) / norm2(b);
}

/// Fresh directory under the system temp path.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("fracsteklov_" + name + "_" + std::to_string(std::random_device{}()));
  std::filesystem::create_directories(p);
  return p;
}

/// The unit square as two triangles, all four vertices on the boundary.
inline const char* kUnitSquare =
    "4 2 4\n"
    "0 0\n"
    "1 0\n"
    "1 1\n"
    "0 1\n"
    "0 1 2\n"
    "0 2 3\n"
    "0 1\n"
    "1 2\n"
    "2 3\n"
    "3 0\n";

}  // namespace fracsteklov::testing
