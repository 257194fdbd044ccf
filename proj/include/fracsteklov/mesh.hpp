#pragma once

// Conforming P1 triangulations of planar domains with an explicit boundary loop.

#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"

namespace fracsteklov {

using Index = std::size_t;

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

using Triangle = std::array<Index, 3>;
using Edge = std::array<Index, 2>;

/// How the boundary was produced; decides whether refinement may move
/// boundary midpoints back onto the curved arc.
enum class BoundaryGeometry {
  polygonal,
  quarter_unit_disk,
};

inline double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

inline double distance(const Point& a, const Point& b) { return std::hypot(b.x - a.x, b.y - a.y); }

/// Immutable triangulation. Construction checks every structural invariant:
/// positive triangle areas, a single closed counterclockwise boundary loop,
/// and conforming edge multiplicities (one triangle per boundary edge, two per
/// interior edge).
class Mesh {
 public:
  Mesh(std::vector<Point> vertices, std::vector<Triangle> triangles, std::vector<Edge> boundary_edges,
       BoundaryGeometry geometry = BoundaryGeometry::polygonal)
      : vertices_(std::move(vertices)),
        triangles_(std::move(triangles)),
        boundary_edges_(std::move(boundary_edges)),
        geometry_(geometry) {
    validate();
  }

  std::size_t num_vertices() const noexcept { return vertices_.size(); }
  std::size_t num_triangles() const noexcept { return triangles_.size(); }
  std::size_t num_boundary_nodes() const noexcept { return boundary_nodes_.size(); }

  const std::vector<Point>& vertices() const noexcept { return vertices_; }
  const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
  /// Ordered counterclockwise along the boundary; edge i ends where edge i+1 starts.
  const std::vector<Edge>& boundary_edges() const noexcept { return boundary_edges_; }
  /// Sorted ascending.
  const std::vector<Index>& boundary_nodes() const noexcept { return boundary_nodes_; }
  const std::vector<bool>& on_boundary() const noexcept { return on_boundary_; }
  BoundaryGeometry geometry() const noexcept { return geometry_; }

  const Point& vertex(Index i) const { return vertices_[i]; }

  double triangle_area(std::size_t t) const {
    const auto& tri = triangles_[t];
    return signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
  }

  double area() const {
    double sum = 0.0;
    for (std::size_t t = 0; t < triangles_.size(); ++t) sum += triangle_area(t);
    return sum;
  }

  double boundary_length() const {
    double sum = 0.0;
    for (const auto& e : boundary_edges_) sum += distance(vertices_[e[0]], vertices_[e[1]]);
    return sum;
  }

  /// Shoelace area of the boundary polygon; positive for counterclockwise loops.
  double boundary_polygon_area() const {
    double sum = 0.0;
    for (const auto& e : boundary_edges_) {
      const Point& a = vertices_[e[0]];
      const Point& b = vertices_[e[1]];
      sum += a.x * b.y - b.x * a.y;
    }
    return 0.5 * sum;
  }

  /// Geometry and connectivity equality. The boundary-geometry tag is not
  /// part of the file format and is therefore not compared.
  friend bool operator==(const Mesh& a, const Mesh& b) {
    return a.vertices_ == b.vertices_ && a.triangles_ == b.triangles_ && a.boundary_edges_ == b.boundary_edges_;
  }

 private:
  void validate();

  std::vector<Point> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> boundary_edges_;
  std::vector<Index> boundary_nodes_;
  std::vector<bool> on_boundary_;
  BoundaryGeometry geometry_;
};

inline void Mesh::validate() {
  const std::size_t nv = vertices_.size();
  if (nv < 3) throw InvariantError("mesh needs at least 3 vertices");
  if (triangles_.empty()) throw InvariantError("mesh has no triangles");
  if (boundary_edges_.size() < 3) throw InvariantError("boundary loop needs at least 3 edges");

  for (const auto& p : vertices_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InvariantError("non-finite vertex coordinate");
  }

  std::vector<bool> used(nv, false);
  std::map<std::pair<Index, Index>, int> edge_count;
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& tri = triangles_[t];
    for (Index v : tri) {
      if (v >= nv) throw InvariantError("triangle " + std::to_string(t) + " references vertex out of range");
      used[v] = true;
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2])
      throw InvariantError("triangle " + std::to_string(t) + " repeats a vertex");
    if (!(triangle_area(t) > 0.0))
      throw InvariantError("triangle " + std::to_string(t) + " has non-positive signed area");
    for (int k = 0; k < 3; ++k) {
      Index a = tri[k], b = tri[(k + 1) % 3];
      ++edge_count[{std::min(a, b), std::max(a, b)}];
    }
  }
  for (Index v = 0; v < nv; ++v) {
    if (!used[v]) throw InvariantError("vertex " + std::to_string(v) + " belongs to no triangle");
  }

  // Boundary: closed, simple, each edge on exactly one triangle.
  on_boundary_.assign(nv, false);
  std::map<std::pair<Index, Index>, int> boundary_set;
  for (std::size_t i = 0; i < boundary_edges_.size(); ++i) {
    const auto& e = boundary_edges_[i];
    if (e[0] >= nv || e[1] >= nv) throw InvariantError("boundary edge references vertex out of range");
    if (e[0] == e[1]) throw InvariantError("degenerate boundary edge");
    const auto& next = boundary_edges_[(i + 1) % boundary_edges_.size()];
    if (e[1] != next[0]) throw InvariantError("boundary edges do not form a closed ordered loop");
    if (on_boundary_[e[0]]) throw InvariantError("boundary loop is not simple");
    on_boundary_[e[0]] = true;
    auto key = std::make_pair(std::min(e[0], e[1]), std::max(e[0], e[1]));
    auto it = edge_count.find(key);
    if (it == edge_count.end() || it->second != 1)
      throw InvariantError("boundary edge " + std::to_string(i) + " is not on exactly one triangle");
    boundary_set[key] = 1;
  }
  for (const auto& [key, count] : edge_count) {
    const bool is_boundary = boundary_set.count(key) != 0;
    if (!is_boundary && count != 2)
      throw InvariantError("edge (" + std::to_string(key.first) + "," + std::to_string(key.second) +
                           ") is not shared by exactly two triangles and is not listed as boundary");
  }

  // Orientation: each boundary edge must appear in its triangle with the same
  // direction, so the domain lies to the left.
  std::map<std::pair<Index, Index>, bool> directed;
  for (const auto& tri : triangles_) {
    for (int k = 0; k < 3; ++k) directed[{tri[k], tri[(k + 1) % 3]}] = true;
  }
  for (const auto& e : boundary_edges_) {
    if (!directed.count({e[0], e[1]})) throw InvariantError("boundary loop is not counterclockwise");
  }
  if (!(boundary_polygon_area() > 0.0)) throw InvariantError("boundary polygon has non-positive area");

  boundary_nodes_.clear();
  for (Index v = 0; v < nv; ++v) {
    if (on_boundary_[v]) boundary_nodes_.push_back(v);
  }
}

/// Structured polar triangulation of {x >= 0, y >= 0, x^2 + y^2 <= 1}.
///
/// Ring i (i = 1..rings) has radius i/rings and ceil(pi*i/2) arc segments, so
/// the triangles stay close to isotropic. Consecutive rings are zipped by
/// angle; the innermost ring is fanned around the origin.
inline Mesh generate_quarter_disk(int rings) {
  if (rings < 2) throw InvalidParameter("generate_quarter_disk: ring count must be >= 2, got " + std::to_string(rings));
  const double half_pi = std::numbers::pi / 2.0;

  std::vector<Point> vertices{{0.0, 0.0}};
  // first vertex index and segment count of each ring; ring 0 is the origin
  std::vector<Index> ring_start{0};
  std::vector<int> segments{0};
  for (int i = 1; i <= rings; ++i) {
    const int k = static_cast<int>(std::ceil(half_pi * i));
    const double r = (i == rings) ? 1.0 : static_cast<double>(i) / rings;
    ring_start.push_back(vertices.size());
    segments.push_back(k);
    for (int j = 0; j <= k; ++j) {
      if (j == 0) {
        vertices.push_back({r, 0.0});
      } else if (j == k) {
        vertices.push_back({0.0, r});
      } else {
        const double phi = half_pi * j / k;
        vertices.push_back({r * std::cos(phi), r * std::sin(phi)});
      }
    }
  }

  std::vector<Triangle> triangles;
  for (int j = 0; j < segments[1]; ++j) {
    triangles.push_back({0, ring_start[1] + j, ring_start[1] + j + 1});
  }
  for (int i = 2; i <= rings; ++i) {
    const int p = segments[i - 1], q = segments[i];
    const Index a0 = ring_start[i - 1], b0 = ring_start[i];
    int ia = 0, ib = 0;
    while (ia < p || ib < q) {
      // advance on whichever ring has the smaller next angle
      const bool outer = ia == p || (ib < q && static_cast<double>(ib + 1) / q <= static_cast<double>(ia + 1) / p);
      if (outer) {
        triangles.push_back({a0 + ia, b0 + ib, b0 + ib + 1});
        ++ib;
      } else {
        triangles.push_back({a0 + ia, b0 + ib, a0 + ia + 1});
        ++ia;
      }
    }
  }

  std::vector<Edge> boundary;
  Index prev = 0;
  for (int i = 1; i <= rings; ++i) {
    boundary.push_back({prev, ring_start[i]});
    prev = ring_start[i];
  }
  for (int j = 1; j <= segments[rings]; ++j) {
    boundary.push_back({prev, ring_start[rings] + j});
    prev = ring_start[rings] + j;
  }
  for (int i = rings - 1; i >= 1; --i) {
    const Index v = ring_start[i] + segments[i];
    boundary.push_back({prev, v});
    prev = v;
  }
  boundary.push_back({prev, 0});

  return Mesh(std::move(vertices), std::move(triangles), std::move(boundary), BoundaryGeometry::quarter_unit_disk);
}

/// Red refinement: every triangle is split into four through its edge
/// midpoints. Parent vertices keep their indices; midpoints are appended in
/// order of first appearance. For quarter-disk meshes, midpoints of boundary
/// edges on the unit arc are pushed radially onto the circle.
inline Mesh refine_uniform(const Mesh& m) {
  std::vector<Point> vertices = m.vertices();
  std::map<std::pair<Index, Index>, Index> midpoint;
  auto mid = [&](Index a, Index b) {
    auto key = std::make_pair(std::min(a, b), std::max(a, b));
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const Point& pa = m.vertex(a);
    const Point& pb = m.vertex(b);
    vertices.push_back({0.5 * (pa.x + pb.x), 0.5 * (pa.y + pb.y)});
    const Index id = vertices.size() - 1;
    midpoint.emplace(key, id);
    return id;
  };

  std::vector<Triangle> triangles;
  triangles.reserve(4 * m.num_triangles());
  for (const auto& t : m.triangles()) {
    const Index m01 = mid(t[0], t[1]);
    const Index m12 = mid(t[1], t[2]);
    const Index m20 = mid(t[2], t[0]);
    triangles.push_back({t[0], m01, m20});
    triangles.push_back({m01, t[1], m12});
    triangles.push_back({m20, m12, t[2]});
    triangles.push_back({m01, m12, m20});
  }

  std::vector<Edge> boundary;
  boundary.reserve(2 * m.boundary_edges().size());
  const bool curved = m.geometry() == BoundaryGeometry::quarter_unit_disk;
  auto on_arc = [](const Point& p) { return std::abs(std::hypot(p.x, p.y) - 1.0) < 1e-12; };
  for (const auto& e : m.boundary_edges()) {
    const Index c = midpoint.at({std::min(e[0], e[1]), std::max(e[0], e[1])});
    if (curved && on_arc(m.vertex(e[0])) && on_arc(m.vertex(e[1]))) {
      Point& p = vertices[c];
      const double r = std::hypot(p.x, p.y);
      p = {p.x / r, p.y / r};
    }
    boundary.push_back({e[0], c});
    boundary.push_back({c, e[1]});
  }
  return Mesh(std::move(vertices), std::move(triangles), std::move(boundary), m.geometry());
}

/// Plain-text mesh listing: `NV NT NB`, NV lines `x y`, NT lines `i j k`,
/// NB lines `i j` (0-based, boundary edges in loop order).
inline void write_mesh(const Mesh& m, std::ostream& os) {
  os << m.num_vertices() << ' ' << m.num_triangles() << ' ' << m.boundary_edges().size() << '\n';
  os << std::setprecision(17);
  for (const auto& p : m.vertices()) os << p.x << ' ' << p.y << '\n';
  for (const auto& t : m.triangles()) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (const auto& e : m.boundary_edges()) os << e[0] << ' ' << e[1] << '\n';
}

inline void export_mesh(const Mesh& m, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_mesh(m, os);
  if (!os) throw Error("write to '" + path + "' failed");
}

namespace detail {

inline std::vector<std::string> tokens(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

inline double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw ParseError(line, "invalid number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw ParseError(line, "invalid number '" + s + "'");
  }
}

inline Index parse_index(const std::string& s, std::size_t line) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw ParseError(line, "invalid index '" + s + "'");
  try {
    return static_cast<Index>(std::stoull(s));
  } catch (const std::logic_error&) {
    throw ParseError(line, "invalid index '" + s + "'");
  }
}

}  // namespace detail

/// Reads a mesh written by write_mesh. Malformed content raises ParseError
/// with the offending line; a well-formed but non-conforming mesh raises
/// InvariantError.
inline Mesh read_mesh(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  auto next = [&](std::size_t expected, const char* what) {
    if (!std::getline(is, line)) throw ParseError(lineno + 1, std::string("unexpected end of file, expected ") + what);
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto tok = detail::tokens(line);
    if (tok.size() != expected)
      throw ParseError(lineno, std::string("expected ") + std::to_string(expected) + " fields for " + what + ", got " +
                                   std::to_string(tok.size()));
    return tok;
  };

  auto header = next(3, "header");
  const Index nv = detail::parse_index(header[0], lineno);
  const Index nt = detail::parse_index(header[1], lineno);
  const Index nb = detail::parse_index(header[2], lineno);

  std::vector<Point> vertices(nv);
  for (auto& p : vertices) {
    auto tok = next(2, "vertex");
    p = {detail::parse_double(tok[0], lineno), detail::parse_double(tok[1], lineno)};
  }
  std::vector<Triangle> triangles(nt);
  for (auto& t : triangles) {
    auto tok = next(3, "triangle");
    for (int k = 0; k < 3; ++k) {
      t[k] = detail::parse_index(tok[k], lineno);
      if (t[k] >= nv) throw ParseError(lineno, "vertex index " + tok[k] + " out of range [0, " + std::to_string(nv) + ")");
    }
  }
  std::vector<Edge> edges(nb);
  for (auto& e : edges) {
    auto tok = next(2, "boundary edge");
    for (int k = 0; k < 2; ++k) {
      e[k] = detail::parse_index(tok[k], lineno);
      if (e[k] >= nv) throw ParseError(lineno, "vertex index " + tok[k] + " out of range [0, " + std::to_string(nv) + ")");
    }
  }
  while (std::getline(is, line)) {
    ++lineno;
    if (!detail::tokens(line).empty()) throw ParseError(lineno, "trailing content after boundary edges");
  }
  return Mesh(std::move(vertices), std::move(triangles), std::move(edges));
}

inline Mesh import_mesh(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "' for reading");
  return read_mesh(is);
}

}  // namespace fracsteklov
