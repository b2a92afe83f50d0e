#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "oseen/errors.hpp"
#include "oseen/geometry.hpp"

namespace oseen {

using Triangle = std::array<int, 3>;

/// Result of a point-location query.
struct Location {
  int triangle = -1;
  std::array<double, 3> bary{};
};

inline constexpr double kInsideTol = 1e-12;

/// Uniform background grid mapping each cell to the triangles whose bounding box touches it.
class BackgroundGrid {
 public:
  BackgroundGrid() = default;

  BackgroundGrid(const std::vector<Point2>& vertices, const std::vector<Triangle>& triangles) {
    lo_ = {1e300, 1e300};
    hi_ = {-1e300, -1e300};
    for (const auto& v : vertices) {
      lo_ = {std::min(lo_.x, v.x), std::min(lo_.y, v.y)};
      hi_ = {std::max(hi_.x, v.x), std::max(hi_.y, v.y)};
    }
    const auto n = static_cast<int>(std::lround(std::sqrt(triangles.size() / 2.0)));
    nx_ = ny_ = std::max(1, n);
    cells_.assign(static_cast<std::size_t>(nx_) * ny_, {});
    for (int t = 0; t < static_cast<int>(triangles.size()); ++t) {
      Point2 a = vertices[triangles[t][0]], b = vertices[triangles[t][1]], c = vertices[triangles[t][2]];
      Point2 blo{std::min({a.x, b.x, c.x}), std::min({a.y, b.y, c.y})};
      Point2 bhi{std::max({a.x, b.x, c.x}), std::max({a.y, b.y, c.y})};
      for_cells(blo, bhi, [&](int cell) { cells_[cell].push_back(t); });
    }
    // triangles were pushed in increasing order, so every list is already sorted
  }

  /// Candidate triangles (ascending index, de-duplicated) whose boxes touch the closed box [lo, hi].
  std::vector<int> candidates(Point2 lo, Point2 hi) const {
    std::vector<int> out;
    for_cells(lo, hi, [&](int cell) { out.insert(out.end(), cells_[cell].begin(), cells_[cell].end()); });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  Point2 lower() const { return lo_; }
  Point2 upper() const { return hi_; }

 private:
  int clamp_index(double v, double lo, double hi, int n) const {
    const double s = (v - lo) / (hi - lo) * n;
    return std::clamp(static_cast<int>(std::floor(s)), 0, n - 1);
  }

  template <typename F>
  void for_cells(Point2 blo, Point2 bhi, F&& f) const {
    // closed boxes: widen by the inside tolerance so that touching cells are included
    const double eps = 1e-10 * std::max(hi_.x - lo_.x, hi_.y - lo_.y);
    const int i0 = clamp_index(blo.x - eps, lo_.x, hi_.x, nx_), i1 = clamp_index(bhi.x + eps, lo_.x, hi_.x, nx_);
    const int j0 = clamp_index(blo.y - eps, lo_.y, hi_.y, ny_), j1 = clamp_index(bhi.y + eps, lo_.y, hi_.y, ny_);
    for (int j = j0; j <= j1; ++j)
      for (int i = i0; i <= i1; ++i) f(j * nx_ + i);
  }

  Point2 lo_{}, hi_{};
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> cells_;
};

/// Conforming triangulation with CCW triangles. Immutable after construction.
class TriMesh {
 public:
  TriMesh(std::vector<Point2> vertices, std::vector<Triangle> triangles, std::vector<std::uint8_t> boundary)
      : vertices_(std::move(vertices)), triangles_(std::move(triangles)), boundary_(std::move(boundary)) {
    if (boundary_.size() != vertices_.size()) throw InvalidArgument("TriMesh: boundary flag count mismatch");
    diameters_.reserve(triangles_.size());
    areas_.reserve(triangles_.size());
    vertex_to_triangles_.assign(vertices_.size(), {});
    for (int t = 0; t < num_triangles(); ++t) {
      for (int v : triangles_[t]) {
        if (v < 0 || v >= num_vertices()) throw InvalidArgument("TriMesh: vertex index out of range");
        vertex_to_triangles_[v].push_back(t);
      }
      auto [a, b, c] = corners(t);
      const double area = signed_area(a, b, c);
      if (!(area > 0.0))
        throw InvalidArgument("TriMesh: triangle " + std::to_string(t) + " is not counter-clockwise");
      areas_.push_back(area);
      const double d = std::max({norm(b - a), norm(c - b), norm(a - c)});
      diameters_.push_back(d);
      h_ = std::max(h_, d);
    }
    grid_ = BackgroundGrid(vertices_, triangles_);
  }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }
  const std::vector<Point2>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const Triangle& triangle(int t) const { return triangles_[t]; }
  Point2 vertex(int v) const { return vertices_[v]; }
  bool is_boundary_vertex(int v) const { return boundary_[v] != 0; }
  const std::vector<std::uint8_t>& boundary_flags() const { return boundary_; }
  double diameter(int t) const { return diameters_[t]; }
  const std::vector<double>& diameters() const { return diameters_; }
  double area(int t) const { return areas_[t]; }
  double mesh_size() const { return h_; }
  const std::vector<int>& triangles_of_vertex(int v) const { return vertex_to_triangles_[v]; }
  const BackgroundGrid& grid() const { return grid_; }

  std::array<Point2, 3> corners(int t) const {
    const auto& tri = triangles_[t];
    return {vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]};
  }

  Point2 centroid(int t) const {
    auto [a, b, c] = corners(t);
    return (1.0 / 3.0) * (a + b + c);
  }

  /// Physical point for barycentric coordinates on triangle t.
  Point2 map_to_physical(int t, const std::array<double, 3>& bary) const {
    auto [a, b, c] = corners(t);
    return bary[0] * a + bary[1] * b + bary[2] * c;
  }

  /// Triangle containing x (smallest index on ties) and clamped barycentric coordinates.
  Location locate_point(Point2 x) const {
    const Point2 lo = grid_.lower(), hi = grid_.upper();
    if (x.x < lo.x - kInsideTol || x.x > hi.x + kInsideTol || x.y < lo.y - kInsideTol || x.y > hi.y + kInsideTol)
      throw DomainViolation("locate_point: point (" + fmt(x.x) + ", " + fmt(x.y) + ") is outside the domain");
    x = {std::clamp(x.x, lo.x, hi.x), std::clamp(x.y, lo.y, hi.y)};
    Location best;
    double best_min = -1e300;
    for (int t : grid_.candidates(x, x)) {
      auto [a, b, c] = corners(t);
      auto bc = barycentric(a, b, c, x);
      const double m = std::min({bc[0], bc[1], bc[2]});
      if (m >= -kInsideTol) return {t, clamp_bary(bc)};
      if (m > best_min) {
        best_min = m;
        best = {t, bc};
      }
    }
    // rounding slack for points sitting on the boundary of a non-convex mesh region
    if (best.triangle >= 0 && best_min >= -1e-9) return {best.triangle, clamp_bary(best.bary)};
    throw DomainViolation("locate_point: point (" + fmt(x.x) + ", " + fmt(x.y) + ") is not inside any triangle");
  }

  static std::array<double, 3> clamp_bary(std::array<double, 3> bc) {
    double s = 0.0;
    for (auto& v : bc) {
      v = std::max(v, 0.0);
      s += v;
    }
    for (auto& v : bc) v /= s;
    return bc;
  }

 private:
  static std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  }

  std::vector<Point2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<std::uint8_t> boundary_;
  std::vector<double> diameters_;
  std::vector<double> areas_;
  std::vector<std::vector<int>> vertex_to_triangles_;
  double h_ = 0.0;
  BackgroundGrid grid_;
};

/// Structured triangulation of [0,1]^2: N x N squares, each cut along the lower-left to upper-right diagonal.
inline TriMesh build_unit_square_mesh(int n) {
  if (n < 1) throw InvalidArgument("build_unit_square_mesh: N must be >= 1, got " + std::to_string(n));
  std::vector<Point2> verts;
  std::vector<std::uint8_t> boundary;
  verts.reserve(static_cast<std::size_t>(n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j) {
    for (int i = 0; i <= n; ++i) {
      verts.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
      boundary.push_back(i == 0 || j == 0 || i == n || j == n);
    }
  }
  std::vector<Triangle> tris;
  tris.reserve(2 * static_cast<std::size_t>(n) * n);
  auto id = [n](int i, int j) { return j * (n + 1) + i; };
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  }
  return TriMesh(std::move(verts), std::move(tris), std::move(boundary));
}

/// Edge -> number of incident triangles. Keys are (min, max) vertex pairs.
inline std::map<std::pair<int, int>, int> edge_incidence(const TriMesh& mesh) {
  std::map<std::pair<int, int>, int> count;
  for (const auto& tri : mesh.triangles())
    for (int e = 0; e < 3; ++e) {
      int a = tri[(e + 1) % 3], b = tri[(e + 2) % 3];
      ++count[{std::min(a, b), std::max(a, b)}];
    }
  return count;
}

/// Plain-text mesh format: `vertices <n> triangles <m>`, vertex lines `x y flag`, triangle lines `i j k`.
inline void write_mesh(std::ostream& os, const TriMesh& mesh) {
  os << "vertices " << mesh.num_vertices() << " triangles " << mesh.num_triangles() << '\n';
  os.precision(17);
  for (int v = 0; v < mesh.num_vertices(); ++v)
    os << mesh.vertex(v).x << ' ' << mesh.vertex(v).y << ' ' << (mesh.is_boundary_vertex(v) ? 1 : 0) << '\n';
  for (const auto& t : mesh.triangles()) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

inline TriMesh read_mesh(std::istream& is) {
  std::string kv, kt;
  int nv = 0, nt = 0;
  if (!(is >> kv >> nv >> kt >> nt) || kv != "vertices" || kt != "triangles" || nv < 3 || nt < 1)
    throw InvalidArgument("read_mesh: malformed header");
  std::vector<Point2> verts(nv);
  std::vector<std::uint8_t> flags(nv);
  for (int v = 0; v < nv; ++v) {
    int f = 0;
    if (!(is >> verts[v].x >> verts[v].y >> f)) throw InvalidArgument("read_mesh: bad vertex line " + std::to_string(v));
    flags[v] = f != 0;
  }
  std::vector<Triangle> tris(nt);
  for (int t = 0; t < nt; ++t)
    if (!(is >> tris[t][0] >> tris[t][1] >> tris[t][2]))
      throw InvalidArgument("read_mesh: bad triangle line " + std::to_string(t));
  return TriMesh(std::move(verts), std::move(tris), std::move(flags));
}

}  // namespace oseen
