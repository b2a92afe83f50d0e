#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "oseen/errors.hpp"
#include "oseen/geometry.hpp"
#include "oseen/mesh.hpp"
#include "oseen/quadrature.hpp"

namespace oseen {

enum class Constraint { none, zero_boundary, zero_mean };

/// Affine data of one triangle: area and the constant gradients of the barycentric coordinates.
struct ElementGeometry {
  double area = 0.0;
  std::array<Point2, 3> grad_lambda{};
};

inline ElementGeometry element_geometry(const TriMesh& mesh, int t) {
  auto [a, b, c] = mesh.corners(t);
  ElementGeometry g;
  g.area = signed_area(a, b, c);
  const double inv = 1.0 / (2.0 * g.area);
  g.grad_lambda[0] = {(b.y - c.y) * inv, (c.x - b.x) * inv};
  g.grad_lambda[1] = {(c.y - a.y) * inv, (a.x - c.x) * inv};
  g.grad_lambda[2] = {(a.y - b.y) * inv, (b.x - a.x) * inv};
  return g;
}

inline constexpr int kMaxLocalDofs = 6;

/// Local shape function values and physical gradients at one point.
struct BasisEval {
  int count = 0;
  std::array<double, kMaxLocalDofs> values{};
  std::array<Point2, kMaxLocalDofs> grads{};
};

/// Second derivatives (d2/dx2, d2/dxdy, d2/dy2) of one local shape function.
struct Hessian {
  double xx = 0.0, xy = 0.0, yy = 0.0;
};

/// Local values/gradients for P1 or P2 on an element with the given geometry.
/// P2 local order: three vertices, then the three edge midpoints opposite vertex 0, 1, 2.
inline BasisEval eval_local_basis(int degree, const ElementGeometry& g, const std::array<double, 3>& l) {
  BasisEval e;
  if (degree == 1) {
    e.count = 3;
    for (int i = 0; i < 3; ++i) {
      e.values[i] = l[i];
      e.grads[i] = g.grad_lambda[i];
    }
    return e;
  }
  e.count = 6;
  for (int i = 0; i < 3; ++i) {
    e.values[i] = l[i] * (2.0 * l[i] - 1.0);
    e.grads[i] = (4.0 * l[i] - 1.0) * g.grad_lambda[i];
    const int j = (i + 1) % 3, k = (i + 2) % 3;
    e.values[3 + i] = 4.0 * l[j] * l[k];
    e.grads[3 + i] = 4.0 * l[k] * g.grad_lambda[j] + 4.0 * l[j] * g.grad_lambda[k];
  }
  return e;
}

/// Constant Hessians of the P2 shape functions on an element.
inline std::array<Hessian, 6> p2_hessians(const ElementGeometry& g) {
  auto outer = [](Point2 a, Point2 b, double s) {
    return Hessian{s * a.x * b.x, s * 0.5 * (a.x * b.y + a.y * b.x), s * a.y * b.y};
  };
  std::array<Hessian, 6> h{};
  for (int i = 0; i < 3; ++i) {
    h[i] = outer(g.grad_lambda[i], g.grad_lambda[i], 4.0);
    const int j = (i + 1) % 3, k = (i + 2) % 3;
    h[3 + i] = outer(g.grad_lambda[j], g.grad_lambda[k], 8.0);
  }
  return h;
}

/// Continuous Lagrange P1/P2 space on a triangulation.
class ScalarSpace {
 public:
  ScalarSpace(std::shared_ptr<const TriMesh> mesh, int degree, Constraint constraint)
      : mesh_(std::move(mesh)), degree_(degree), constraint_(constraint) {
    if (degree_ != 1 && degree_ != 2)
      throw InvalidArgument("build_space: unsupported degree " + std::to_string(degree_));
    const TriMesh& m = *mesh_;
    dof_coords_ = m.vertices();
    boundary_.assign(m.boundary_flags().begin(), m.boundary_flags().end());
    element_dofs_.resize(m.num_triangles());
    geometry_.reserve(m.num_triangles());
    std::map<std::pair<int, int>, int> edge_dof;
    for (int t = 0; t < m.num_triangles(); ++t) {
      geometry_.push_back(element_geometry(m, t));
      const auto& tri = m.triangle(t);
      auto& dofs = element_dofs_[t];
      dofs.fill(-1);
      for (int i = 0; i < 3; ++i) dofs[i] = tri[i];
      if (degree_ == 2) {
        for (int i = 0; i < 3; ++i) {
          const int a = tri[(i + 1) % 3], b = tri[(i + 2) % 3];
          auto key = std::make_pair(std::min(a, b), std::max(a, b));
          auto [it, inserted] = edge_dof.try_emplace(key, static_cast<int>(dof_coords_.size()));
          if (inserted) {
            dof_coords_.push_back(0.5 * (m.vertex(a) + m.vertex(b)));
            boundary_.push_back(m.is_boundary_vertex(a) && m.is_boundary_vertex(b) && on_boundary_edge(m, a, b));
          }
          dofs[3 + i] = it->second;
        }
      }
    }
    for (int d = 0; d < dim(); ++d)
      if (boundary_[d]) boundary_dofs_.push_back(d);

    full_to_free_.assign(dim(), -1);
    for (int d = 0; d < dim(); ++d)
      if (constraint_ != Constraint::zero_boundary || !boundary_[d]) {
        full_to_free_[d] = static_cast<int>(free_to_full_.size());
        free_to_full_.push_back(d);
      }

    basis_integrals_.assign(dim(), 0.0);
    const auto rule = dunavant_degree2();
    for (int t = 0; t < m.num_triangles(); ++t)
      for (std::size_t q = 0; q < rule.size(); ++q) {
        auto e = eval_local_basis(degree_, geometry_[t], rule.points[q]);
        for (int i = 0; i < e.count; ++i)
          basis_integrals_[element_dofs_[t][i]] += rule.weights[q] * geometry_[t].area * e.values[i];
      }
  }

  const TriMesh& mesh() const { return *mesh_; }
  const std::shared_ptr<const TriMesh>& mesh_ptr() const { return mesh_; }
  int degree() const { return degree_; }
  Constraint constraint() const { return constraint_; }
  int dim() const { return static_cast<int>(dof_coords_.size()); }
  int local_dofs() const { return degree_ == 1 ? 3 : 6; }
  const std::vector<Point2>& dof_coordinates() const { return dof_coords_; }
  std::span<const int> element_dofs(int t) const { return {element_dofs_[t].data(), static_cast<std::size_t>(local_dofs())}; }
  const std::vector<int>& boundary_dofs() const { return boundary_dofs_; }
  bool is_boundary_dof(int d) const { return boundary_[d] != 0; }
  const ElementGeometry& geometry(int t) const { return geometry_[t]; }

  /// Number of unknowns after Dirichlet elimination (equals dim() unless zero_boundary).
  int num_free() const { return static_cast<int>(free_to_full_.size()); }
  const std::vector<int>& free_to_full() const { return free_to_full_; }
  const std::vector<int>& full_to_free() const { return full_to_free_; }

  /// Integral of each basis function over the domain.
  const std::vector<double>& basis_integrals() const { return basis_integrals_; }

  BasisEval eval_basis(int t, const std::array<double, 3>& bary) const {
    return eval_local_basis(degree_, geometry_[t], bary);
  }

 private:
  static bool on_boundary_edge(const TriMesh& m, int a, int b) {
    // an edge is on the boundary iff it has exactly one incident triangle
    int shared = 0;
    for (int t : m.triangles_of_vertex(a)) {
      const auto& tri = m.triangle(t);
      if (tri[0] == b || tri[1] == b || tri[2] == b) ++shared;
    }
    return shared == 1;
  }

  std::shared_ptr<const TriMesh> mesh_;
  int degree_;
  Constraint constraint_;
  std::vector<Point2> dof_coords_;
  std::vector<std::uint8_t> boundary_;
  std::vector<std::array<int, kMaxLocalDofs>> element_dofs_;
  std::vector<ElementGeometry> geometry_;
  std::vector<int> boundary_dofs_;
  std::vector<int> full_to_free_;
  std::vector<int> free_to_full_;
  std::vector<double> basis_integrals_;
};

inline std::shared_ptr<const ScalarSpace> build_space(std::shared_ptr<const TriMesh> mesh, int degree,
                                                      Constraint constraint) {
  return std::make_shared<const ScalarSpace>(std::move(mesh), degree, constraint);
}

/// Coefficient vector over a scalar space (full numbering, boundary DOFs included).
struct ScalarField {
  std::shared_ptr<const ScalarSpace> space;
  std::vector<double> coeffs;

  ScalarField() = default;
  explicit ScalarField(std::shared_ptr<const ScalarSpace> s) : space(std::move(s)), coeffs(space->dim(), 0.0) {}
  ScalarField(std::shared_ptr<const ScalarSpace> s, std::vector<double> c) : space(std::move(s)), coeffs(std::move(c)) {}

  double value(int t, const std::array<double, 3>& bary) const {
    auto e = space->eval_basis(t, bary);
    auto dofs = space->element_dofs(t);
    double v = 0.0;
    for (int i = 0; i < e.count; ++i) v += coeffs[dofs[i]] * e.values[i];
    return v;
  }

  Point2 gradient(int t, const std::array<double, 3>& bary) const {
    auto e = space->eval_basis(t, bary);
    auto dofs = space->element_dofs(t);
    Point2 g{};
    for (int i = 0; i < e.count; ++i) g = g + coeffs[dofs[i]] * e.grads[i];
    return g;
  }

  /// Integral over the domain.
  double integral() const {
    const auto& m = space->basis_integrals();
    double s = 0.0;
    for (int d = 0; d < space->dim(); ++d) s += m[d] * coeffs[d];
    return s;
  }
};

/// Two-component velocity field on one scalar space.
struct VectorField {
  std::shared_ptr<const ScalarSpace> space;
  std::array<std::vector<double>, 2> components;
  std::optional<double> time_label;

  VectorField() = default;
  explicit VectorField(std::shared_ptr<const ScalarSpace> s) : space(std::move(s)) {
    components[0].assign(space->dim(), 0.0);
    components[1].assign(space->dim(), 0.0);
  }

  ScalarField component(int a) const { return ScalarField(space, components[a]); }

  Point2 value(int t, const std::array<double, 3>& bary) const {
    auto e = space->eval_basis(t, bary);
    auto dofs = space->element_dofs(t);
    Point2 v{};
    for (int i = 0; i < e.count; ++i) v = v + e.values[i] * Point2{components[0][dofs[i]], components[1][dofs[i]]};
    return v;
  }

  /// Jacobian [[du1/dx, du1/dy], [du2/dx, du2/dy]].
  Mat2 gradient(int t, const std::array<double, 3>& bary) const {
    auto e = space->eval_basis(t, bary);
    auto dofs = space->element_dofs(t);
    Mat2 g;
    for (int i = 0; i < e.count; ++i) {
      const double c0 = components[0][dofs[i]], c1 = components[1][dofs[i]];
      g.a00 += c0 * e.grads[i].x;
      g.a01 += c0 * e.grads[i].y;
      g.a10 += c1 * e.grads[i].x;
      g.a11 += c1 * e.grads[i].y;
    }
    return g;
  }
};

using ScalarFunction = std::function<double(Point2, double)>;

/// Nodal interpolation; zero_mean spaces get the discrete mean subtracted.
inline ScalarField lagrange_interpolate(std::shared_ptr<const ScalarSpace> space, const ScalarFunction& f, double t) {
  ScalarField out(space);
  const auto& xs = space->dof_coordinates();
  for (int d = 0; d < space->dim(); ++d) {
    const double v = f(xs[d], t);
    if (!std::isfinite(v))
      throw Divergence("lagrange_interpolate: non-finite value at DOF " + std::to_string(d) + " (" +
                       std::to_string(xs[d].x) + ", " + std::to_string(xs[d].y) + ")");
    out.coeffs[d] = v;
  }
  if (space->constraint() == Constraint::zero_mean) {
    const double mean = out.integral();
    for (auto& c : out.coeffs) c -= mean;
  }
  return out;
}

}  // namespace oseen
