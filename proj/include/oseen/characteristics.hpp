#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "oseen/errors.hpp"
#include "oseen/fe_space.hpp"
#include "oseen/geometry.hpp"
#include "oseen/linalg.hpp"
#include "oseen/mesh.hpp"
#include "oseen/quadrature.hpp"

namespace oseen {

/// P1 nodal interpolant w_h of the convecting velocity, with its W^{1,inf} seminorm.
struct LinearizedVelocity {
  VectorField p1_field;
  double lipschitz_seminorm = 0.0;
  double time_label = 0.0;

  /// Elementwise constant gradient of w_h.
  Mat2 gradient(int t) const { return p1_field.gradient(t, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}); }
};

using VectorFunction = std::function<Point2(Point2, double)>;

inline double lipschitz_seminorm(const VectorField& p1) {
  double m = 0.0;
  for (int t = 0; t < p1.space->mesh().num_triangles(); ++t)
    m = std::max(m, p1.gradient(t, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}).frobenius());
  return m;
}

/// Interpolates w(., t) at the vertices. Boundary values must vanish (within 1e-12) and are then set to zero.
inline LinearizedVelocity build_linearized_velocity(const VectorFunction& w, double t,
                                                    std::shared_ptr<const ScalarSpace> p1_space) {
  if (p1_space->degree() != 1) throw InvalidArgument("build_linearized_velocity: needs a P1 space");
  LinearizedVelocity lv{VectorField(p1_space), 0.0, t};
  lv.p1_field.time_label = t;
  const auto& xs = p1_space->dof_coordinates();
  for (int d = 0; d < p1_space->dim(); ++d) {
    Point2 v = w(xs[d], t);
    if (!std::isfinite(v.x) || !std::isfinite(v.y))
      throw Divergence("build_linearized_velocity: non-finite w at vertex " + std::to_string(d));
    if (p1_space->is_boundary_dof(d)) {
      if (std::max(std::abs(v.x), std::abs(v.y)) > 1e-12)
        throw HypothesisViolation("build_linearized_velocity: w does not vanish at boundary vertex " +
                                  std::to_string(d));
      v = {};
    }
    lv.p1_field.components[0][d] = v.x;
    lv.p1_field.components[1][d] = v.y;
  }
  lv.lipschitz_seminorm = lipschitz_seminorm(lv.p1_field);
  return lv;
}

/// How a large time step is judged when dt |w_h|_{1,inf} >= 1.
enum class BijectivityCheck {
  /// reject as soon as the sufficient condition dt |w_h|_{1,inf} < 1 fails
  seminorm,
  /// reject only when some element is actually folded (J_K <= 0)
  jacobian,
};

/// Per-element affine images of X1(w_h) = x - dt w_h(x).
struct X1Map {
  double dt = 0.0;
  double dt_lipschitz = 0.0;
  std::vector<std::array<Point2, 3>> images;
  std::vector<double> jacobians;
  double jac_min = 1.0;
  double jac_max = 1.0;
  /// dt |w_h|_{1,inf} <= 1/4, under which 1/2 <= J <= 3/2 must hold.
  bool hypothesis_holds = true;
};

inline X1Map map_x1(const LinearizedVelocity& wh, double dt, BijectivityCheck check = BijectivityCheck::seminorm) {
  const auto& space = *wh.p1_field.space;
  const auto& mesh = space.mesh();
  X1Map m;
  m.dt = dt;
  m.dt_lipschitz = dt * wh.lipschitz_seminorm;
  m.hypothesis_holds = m.dt_lipschitz <= 0.25;
  if (check == BijectivityCheck::seminorm && m.dt_lipschitz >= 1.0)
    throw HypothesisViolation("map_x1: dt |w_h|_{1,inf} = " + std::to_string(m.dt_lipschitz) +
                              " >= 1, characteristic map may not be bijective");

  const Point2 lo = mesh.grid().lower(), hi = mesh.grid().upper();
  std::vector<Point2> vimg(mesh.num_vertices());
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    Point2 y = mesh.vertex(v) - dt * Point2{wh.p1_field.components[0][v], wh.p1_field.components[1][v]};
    if (y.x < lo.x - kInsideTol || y.x > hi.x + kInsideTol || y.y < lo.y - kInsideTol || y.y > hi.y + kInsideTol)
      throw DomainViolation("map_x1: image of vertex " + std::to_string(v) + " leaves the domain");
    vimg[v] = {std::clamp(y.x, lo.x, hi.x), std::clamp(y.y, lo.y, hi.y)};
  }
  m.images.resize(mesh.num_triangles());
  m.jacobians.resize(mesh.num_triangles());
  m.jac_min = 1e300;
  m.jac_max = -1e300;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    m.images[t] = {vimg[tri[0]], vimg[tri[1]], vimg[tri[2]]};
    const Mat2 g = wh.gradient(t);
    const Mat2 jm{1.0 - dt * g.a00, -dt * g.a01, -dt * g.a10, 1.0 - dt * g.a11};
    const double j = jm.det();
    m.jacobians[t] = j;
    m.jac_min = std::min(m.jac_min, j);
    m.jac_max = std::max(m.jac_max, j);
    if (!(j > 0.0))
      throw HypothesisViolation("map_x1: element " + std::to_string(t) + " is folded (J = " + std::to_string(j) + ")");
  }
  return m;
}

/// Images x - dt w_h(x) of arbitrary points (clamped to the domain within 1e-12).
inline std::vector<Point2> map_points(const LinearizedVelocity& wh, double dt, std::span<const Point2> points) {
  const auto& mesh = wh.p1_field.space->mesh();
  const Point2 lo = mesh.grid().lower(), hi = mesh.grid().upper();
  std::vector<Point2> out;
  out.reserve(points.size());
  for (Point2 x : points) {
    const Location loc = mesh.locate_point(x);
    Point2 y = x - dt * wh.p1_field.value(loc.triangle, loc.bary);
    if (y.x < lo.x - kInsideTol || y.x > hi.x + kInsideTol || y.y < lo.y - kInsideTol || y.y > hi.y + kInsideTol)
      throw DomainViolation("map_points: image leaves the domain");
    out.push_back({std::clamp(y.x, lo.x, hi.x), std::clamp(y.y, lo.y, hi.y)});
  }
  return out;
}

/// Convex polygon with at most 9 vertices (triangle clipped by three half-planes).
struct Polygon {
  std::array<Point2, 9> v{};
  int n = 0;

  double area() const {
    double a = 0.0;
    for (int i = 0; i < n; ++i) a += cross(v[i], v[(i + 1) % n]);
    return 0.5 * a;
  }
};

/// Sutherland-Hodgman: clip `subject` against the CCW triangle `clip`.
inline Polygon clip_polygon(const Polygon& subject, const std::array<Point2, 3>& clip) {
  Polygon cur = subject;
  for (int e = 0; e < 3 && cur.n > 0; ++e) {
    const Point2 a = clip[e], b = clip[(e + 1) % 3];
    const Point2 ab = b - a;
    Polygon next;
    for (int i = 0; i < cur.n; ++i) {
      const Point2 p = cur.v[i], q = cur.v[(i + 1) % cur.n];
      const double dp = cross(ab, p - a), dq = cross(ab, q - a);
      if (dp >= 0.0) next.v[next.n++] = p;
      if ((dp >= 0.0) != (dq >= 0.0)) {
        const double s = dp / (dp - dq);
        next.v[next.n++] = p + s * (q - p);
      }
    }
    cur = next;
  }
  return cur;
}

/// One convex piece of X1(K) intersected with a source element.
struct ClippedCell {
  int parent = -1;
  int source = -1;
  Polygon polygon;
};

inline constexpr double kSliverArea = 1e-16;
inline constexpr double kAreaMismatchTol = 1e-10;

struct ComposedTerm {
  /// entries (field_a o X1, phi_i) in full numbering, per component
  std::array<Vector, 2> rhs;
  double piece_area = 0.0;
  double image_area = 0.0;
};

/// Exact ((field o X1(w_h)), phi_i) by clipping each image triangle X1(K) against the mesh.
/// Quadrature points on each piece are pulled back to K through the affine inverse of X1|_K.
inline ComposedTerm integrate_composed_term(const VectorField& field, const X1Map& map, std::ostream* dump = nullptr) {
  const auto& space = *field.space;
  const auto& mesh = space.mesh();
  const auto rule = rule_for_degree(2 * space.degree());
  const int nloc = space.local_dofs();
  ComposedTerm out{{Vector(space.dim(), 0.0), Vector(space.dim(), 0.0)}, 0.0, 0.0};

  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const auto& img = map.images[k];
    const double image_area = signed_area(img[0], img[1], img[2]);
    const Point2 blo{std::min({img[0].x, img[1].x, img[2].x}), std::min({img[0].y, img[1].y, img[2].y})};
    const Point2 bhi{std::max({img[0].x, img[1].x, img[2].x}), std::max({img[0].y, img[1].y, img[2].y})};
    std::array<double, 2 * kMaxLocalDofs> local{};
    double covered = 0.0;
    for (int s : mesh.grid().candidates(blo, bhi)) {
      Polygon src;
      const auto sc = mesh.corners(s);
      src.v = {sc[0], sc[1], sc[2]};
      src.n = 3;
      const Polygon piece = clip_polygon(src, img);
      if (piece.n < 3) continue;
      const double parea = piece.area();
      if (parea < kSliverArea) continue;
      covered += parea;
      if (dump) {
        *dump << k << ' ' << s;
        for (int i = 0; i < piece.n; ++i) *dump << ' ' << piece.v[i].x << ' ' << piece.v[i].y;
        *dump << '\n';
      }
      auto sdofs = space.element_dofs(s);
      for (int f = 1; f + 1 < piece.n; ++f) {
        const Point2 a = piece.v[0], b = piece.v[f], c = piece.v[f + 1];
        const double sub = signed_area(a, b, c);
        if (sub <= 0.0) continue;
        for (std::size_t q = 0; q < rule.size(); ++q) {
          const auto& l = rule.points[q];
          const Point2 y = l[0] * a + l[1] * b + l[2] * c;
          const auto src_bary = TriMesh::clamp_bary(barycentric(sc[0], sc[1], sc[2], y));
          const auto test_bary = TriMesh::clamp_bary(barycentric(img[0], img[1], img[2], y));
          const auto es = space.eval_basis(s, src_bary);
          double g0 = 0.0, g1 = 0.0;
          for (int i = 0; i < es.count; ++i) {
            g0 += field.components[0][sdofs[i]] * es.values[i];
            g1 += field.components[1][sdofs[i]] * es.values[i];
          }
          const auto et = space.eval_basis(k, test_bary);
          const double w = rule.weights[q] * sub / map.jacobians[k];
          for (int i = 0; i < nloc; ++i) {
            local[i] += w * g0 * et.values[i];
            local[kMaxLocalDofs + i] += w * g1 * et.values[i];
          }
        }
      }
    }
    if (std::abs(covered - image_area) > kAreaMismatchTol)
      throw GeometryError("integrate_composed_term: element " + std::to_string(k) + " image area " +
                          std::to_string(image_area) + " but clipped pieces cover " + std::to_string(covered));
    out.piece_area += covered;
    out.image_area += image_area;
    auto dofs = space.element_dofs(k);
    for (int i = 0; i < nloc; ++i) {
      out.rhs[0][dofs[i]] += local[i];
      out.rhs[1][dofs[i]] += local[kMaxLocalDofs + i];
    }
  }
  return out;
}

/// Clipped pieces for one test element (debugging / inspection).
inline std::vector<ClippedCell> clipped_cells(const TriMesh& mesh, const X1Map& map, int k) {
  std::vector<ClippedCell> cells;
  const auto& img = map.images[k];
  const Point2 blo{std::min({img[0].x, img[1].x, img[2].x}), std::min({img[0].y, img[1].y, img[2].y})};
  const Point2 bhi{std::max({img[0].x, img[1].x, img[2].x}), std::max({img[0].y, img[1].y, img[2].y})};
  for (int s : mesh.grid().candidates(blo, bhi)) {
    Polygon src;
    const auto sc = mesh.corners(s);
    src.v = {sc[0], sc[1], sc[2]};
    src.n = 3;
    Polygon piece = clip_polygon(src, img);
    if (piece.n >= 3 && piece.area() >= kSliverArea) cells.push_back({k, s, piece});
  }
  return cells;
}

/// Quadrature-only approximation of the same integral: the composed field is evaluated by point
/// location at the images of the quadrature points of each test element. With a high-order rule this
/// is the oracle for the clipped integral; low-order rules reproduce the known instability.
inline std::array<Vector, 2> composed_term_quadrature(const VectorField& field, const X1Map& map,
                                                      const QuadratureRule& rule) {
  const auto& space = *field.space;
  const auto& mesh = space.mesh();
  std::array<Vector, 2> rhs{Vector(space.dim(), 0.0), Vector(space.dim(), 0.0)};
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const auto& img = map.images[k];
    const double area = mesh.area(k);
    auto dofs = space.element_dofs(k);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto& l = rule.points[q];
      const Point2 y = l[0] * img[0] + l[1] * img[1] + l[2] * img[2];
      const Location loc = mesh.locate_point(y);
      const Point2 g = field.value(loc.triangle, loc.bary);
      const auto e = space.eval_basis(k, l);
      const double w = rule.weights[q] * area;
      for (int i = 0; i < e.count; ++i) {
        rhs[0][dofs[i]] += w * g.x * e.values[i];
        rhs[1][dofs[i]] += w * g.y * e.values[i];
      }
    }
  }
  return rhs;
}

}  // namespace oseen
