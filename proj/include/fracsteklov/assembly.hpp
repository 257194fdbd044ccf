#pragma once

// P1 finite-element matrices: the bilinear form k grad u . grad v + c u v over
// the domain, the boundary mass matrix, and boundary load vectors.

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "mesh.hpp"
#include "sparse.hpp"

namespace fracsteklov {

using ScalarField = std::function<double(const Point&)>;

inline ScalarField constant(double value) {
  return [value](const Point&) { return value; };
}

/// Diffusion k and reaction c, sampled at triangle centroids.
struct Coefficients {
  ScalarField k = constant(1.0);
  ScalarField c = constant(1.0);

  static Coefficients constant_coefficients(double k, double c) { return {constant(k), constant(c)}; }
};

/// Per-vertex values over a mesh.
struct NodalField {
  const Mesh* mesh = nullptr;
  Vector values;

  NodalField() = default;
  NodalField(const Mesh& m, Vector v) : mesh(&m), values(std::move(v)) {
    if (values.size() != m.num_vertices())
      throw InvalidParameter("NodalField: " + std::to_string(values.size()) + " values for " +
                             std::to_string(m.num_vertices()) + " vertices");
  }

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

namespace detail {

inline Point centroid(const Mesh& m, const Triangle& t) {
  const Point& a = m.vertex(t[0]);
  const Point& b = m.vertex(t[1]);
  const Point& c = m.vertex(t[2]);
  return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

// Element matrix of k grad.grad + c mass on one triangle. `k` and `c` are
// the centroid values.
inline void element_matrix(const Point& p0, const Point& p1, const Point& p2, double k, double c, double out[3][3]) {
  const double area = signed_area(p0, p1, p2);
  if (!(area > 0.0)) throw AssemblyError("degenerate triangle (area " + std::to_string(area) + ")");
  // grad chi_i = rot90(opposite edge) / (2 area)
  const double gx[3] = {p1.y - p2.y, p2.y - p0.y, p0.y - p1.y};
  const double gy[3] = {p2.x - p1.x, p0.x - p2.x, p1.x - p0.x};
  const double scale = k / (4.0 * area);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double mass = c * area / 12.0 * (i == j ? 2.0 : 1.0);
      out[i][j] = scale * (gx[i] * gx[j] + gy[i] * gy[j]) + mass;
    }
  }
}

inline SparseMatrix assemble_domain(const Mesh& m, const std::function<void(std::size_t, double&, double&)>& coeff) {
  std::vector<SparseMatrix::Triplet> trip;
  trip.reserve(9 * m.num_triangles());
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto& tri = m.triangles()[t];
    double k = 0.0, c = 0.0;
    coeff(t, k, c);
    double ke[3][3];
    element_matrix(m.vertex(tri[0]), m.vertex(tri[1]), m.vertex(tri[2]), k, c, ke);
    for (int i = 0; i < 3; ++i) {
      trip.push_back({tri[i], tri[i], ke[i][i]});
      for (int j = i + 1; j < 3; ++j) {
        // one value for both (i,j) and (j,i) keeps the matrix bitwise symmetric
        const double v = 0.5 * (ke[i][j] + ke[j][i]);
        trip.push_back({tri[i], tri[j], v});
        trip.push_back({tri[j], tri[i], v});
      }
    }
  }
  return SparseMatrix::from_triplets(m.num_vertices(), std::move(trip));
}

}  // namespace detail

/// A = sum_T k_T (grad chi_j, grad chi_i)_T + c_T (chi_j, chi_i)_T.
///
/// Requires k > 0 on every triangle and c >= 0 everywhere with c > 0 on at
/// least one triangle; without a reaction term the Neumann form is singular.
inline SparseMatrix assemble_bilinear(const Mesh& m, const Coefficients& coeff) {
  bool any_reaction = false;
  SparseMatrix a = detail::assemble_domain(m, [&](std::size_t t, double& k, double& c) {
    const Point x = detail::centroid(m, m.triangles()[t]);
    k = coeff.k(x);
    c = coeff.c(x);
    if (!(k > 0.0)) throw InvalidParameter("diffusion coefficient must be positive, got " + std::to_string(k));
    if (!(c >= 0.0)) throw InvalidParameter("reaction coefficient must be nonnegative, got " + std::to_string(c));
    any_reaction = any_reaction || c > 0.0;
  });
  if (!any_reaction)
    throw InvalidParameter("reaction coefficient vanishes identically; the bilinear form would not be coercive");
  return a;
}

/// Gram matrix of the P1 basis in L2(domain).
inline SparseMatrix assemble_domain_mass(const Mesh& m) {
  return detail::assemble_domain(m, [](std::size_t, double& k, double& c) {
    k = 0.0;
    c = 1.0;
  });
}

/// Gram matrix of P1 traces in L2(boundary): h/3 on the diagonal and h/6
/// off the diagonal per boundary edge of length h.
inline SparseMatrix assemble_boundary_mass(const Mesh& m) {
  std::vector<SparseMatrix::Triplet> trip;
  for (const auto& e : m.boundary_edges()) {
    const double h = distance(m.vertex(e[0]), m.vertex(e[1]));
    trip.push_back({e[0], e[0], h / 3.0});
    trip.push_back({e[1], e[1], h / 3.0});
    trip.push_back({e[0], e[1], h / 6.0});
    trip.push_back({e[1], e[0], h / 6.0});
  }
  return SparseMatrix::from_triplets(m.num_vertices(), std::move(trip));
}

/// b[i] = integral over the boundary of g chi_i, two-point Gauss per edge.
inline Vector assemble_boundary_load(const Mesh& m, const ScalarField& g) {
  static const double gauss[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
  Vector b(m.num_vertices(), 0.0);
  for (const auto& e : m.boundary_edges()) {
    const Point& pa = m.vertex(e[0]);
    const Point& pb = m.vertex(e[1]);
    const double h = distance(pa, pb);
    for (double s : gauss) {
      const Point x{pa.x + s * (pb.x - pa.x), pa.y + s * (pb.y - pa.y)};
      const double gv = g(x) * 0.5 * h;
      b[e[0]] += gv * (1.0 - s);
      b[e[1]] += gv * s;
    }
  }
  return b;
}

/// Load vector of the P1 interpolant of nodal boundary values: M_gamma * g.
inline Vector boundary_load_from_nodal(const SparseMatrix& boundary_mass, std::span<const double> nodal) {
  return boundary_mass * nodal;
}

}  // namespace fracsteklov
