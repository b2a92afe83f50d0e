#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "oseen/errors.hpp"
#include "oseen/fe_space.hpp"
#include "oseen/linalg.hpp"
#include "oseen/quadrature.hpp"

namespace oseen {

namespace detail {

/// Element loop with quadrature; kernel(i, j, e) is the (i, j) integrand at one point.
template <typename Kernel>
SparseMatrix assemble_square(const ScalarSpace& space, const QuadratureRule& rule, Kernel&& kernel) {
  const int nloc = space.local_dofs();
  std::vector<Triplet> trip;
  trip.reserve(static_cast<std::size_t>(space.mesh().num_triangles()) * nloc * nloc);
  std::array<double, kMaxLocalDofs * kMaxLocalDofs> local{};
  for (int t = 0; t < space.mesh().num_triangles(); ++t) {
    local.fill(0.0);
    const double area = space.geometry(t).area;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto e = space.eval_basis(t, rule.points[q]);
      const double w = rule.weights[q] * area;
      for (int i = 0; i < nloc; ++i)
        for (int j = 0; j < nloc; ++j) local[i * nloc + j] += w * kernel(i, j, e);
    }
    auto dofs = space.element_dofs(t);
    for (int i = 0; i < nloc; ++i)
      for (int j = 0; j < nloc; ++j) trip.push_back({dofs[i], dofs[j], local[i * nloc + j]});
  }
  return SparseMatrix(space.dim(), space.dim(), std::move(trip));
}

}  // namespace detail

/// (phi_j, phi_i); exact with a degree-2k rule.
inline SparseSym assemble_mass(const ScalarSpace& space) {
  const auto rule = rule_for_degree(2 * space.degree());
  return SparseSym(detail::assemble_square(
      space, rule, [](int i, int j, const BasisEval& e) { return e.values[i] * e.values[j]; }));
}

/// coefficient * (grad phi_j, grad phi_i); exact with a degree-2(k-1) rule.
inline SparseSym assemble_stiffness(const ScalarSpace& space, double coefficient = 1.0) {
  const auto rule = rule_for_degree(2 * (space.degree() - 1));
  return SparseSym(detail::assemble_square(space, rule, [coefficient](int i, int j, const BasisEval& e) {
    return coefficient * dot(e.grads[i], e.grads[j]);
  }));
}

/// B_a[i][j] = integral of (d q_j / d x_a) phi_i. Serves both (grad p, v) and (u, grad q) via the transpose.
struct PressureGradient {
  std::array<SparseMatrix, 2> components;

  const SparseMatrix& operator[](int a) const { return components[a]; }
};

inline PressureGradient assemble_pressure_gradient(const ScalarSpace& v_space, const ScalarSpace& q_space) {
  if (&v_space.mesh() != &q_space.mesh())
    throw InvalidArgument("assemble_pressure_gradient: velocity and pressure spaces live on different meshes");
  const auto rule = rule_for_degree(v_space.degree() + q_space.degree() - 1);
  const int nv = v_space.local_dofs(), nq = q_space.local_dofs();
  std::array<std::vector<Triplet>, 2> trip;
  for (int t = 0; t < v_space.mesh().num_triangles(); ++t) {
    std::array<std::array<double, kMaxLocalDofs * kMaxLocalDofs>, 2> local{};
    const double area = v_space.geometry(t).area;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto ev = v_space.eval_basis(t, rule.points[q]);
      const auto eq = q_space.eval_basis(t, rule.points[q]);
      const double w = rule.weights[q] * area;
      for (int i = 0; i < nv; ++i)
        for (int j = 0; j < nq; ++j) {
          local[0][i * nq + j] += w * ev.values[i] * eq.grads[j].x;
          local[1][i * nq + j] += w * ev.values[i] * eq.grads[j].y;
        }
    }
    auto vd = v_space.element_dofs(t);
    auto qd = q_space.element_dofs(t);
    for (int a = 0; a < 2; ++a)
      for (int i = 0; i < nv; ++i)
        for (int j = 0; j < nq; ++j) trip[a].push_back({vd[i], qd[j], local[a][i * nq + j]});
  }
  return {{SparseMatrix(v_space.dim(), q_space.dim(), std::move(trip[0])),
           SparseMatrix(v_space.dim(), q_space.dim(), std::move(trip[1]))}};
}

/// Stabilization s0(p, q) = sum_K h_K^{2k} sum_{|alpha|=k} (D^alpha p, D^alpha q)_K, for k = 1, 2.
/// For k = 2 the mixed derivative (1,1) enters once, as a multi-index.
inline SparseSym assemble_stabilization(const ScalarSpace& q_space, int k) {
  if (k < 1 || k > 2) throw InvalidArgument("assemble_stabilization: k = " + std::to_string(k) + " unsupported");
  if (q_space.degree() != k)
    throw InvalidArgument("assemble_stabilization: pressure degree must equal k");
  const auto& mesh = q_space.mesh();
  const int nloc = q_space.local_dofs();
  std::vector<Triplet> trip;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& g = q_space.geometry(t);
    const double hk = mesh.diameter(t);
    auto dofs = q_space.element_dofs(t);
    if (k == 1) {
      const double scale = hk * hk * g.area;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) trip.push_back({dofs[i], dofs[j], scale * dot(g.grad_lambda[i], g.grad_lambda[j])});
    } else {
      const double scale = std::pow(hk, 4) * g.area;
      const auto h = p2_hessians(g);
      for (int i = 0; i < nloc; ++i)
        for (int j = 0; j < nloc; ++j)
          trip.push_back({dofs[i], dofs[j], scale * (h[i].xx * h[j].xx + h[i].xy * h[j].xy + h[i].yy * h[j].yy)});
    }
  }
  return SparseSym(SparseMatrix(q_space.dim(), q_space.dim(), std::move(trip)));
}

/// (f, phi_i) with the given rule (full numbering).
inline Vector assemble_load(const ScalarSpace& space, const std::function<double(Point2)>& f, const QuadratureRule& rule) {
  Vector out(space.dim(), 0.0);
  const auto& mesh = space.mesh();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double area = space.geometry(t).area;
    auto dofs = space.element_dofs(t);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto e = space.eval_basis(t, rule.points[q]);
      const double fw = f(mesh.map_to_physical(t, rule.points[q])) * rule.weights[q] * area;
      for (int i = 0; i < e.count; ++i) out[dofs[i]] += fw * e.values[i];
    }
  }
  return out;
}

/// Same, for a vector-valued integrand: returns ((f_1, phi_i), (f_2, phi_i)).
inline std::array<Vector, 2> assemble_vector_load(const ScalarSpace& space, const std::function<Point2(Point2)>& f,
                                                  const QuadratureRule& rule) {
  std::array<Vector, 2> out{Vector(space.dim(), 0.0), Vector(space.dim(), 0.0)};
  const auto& mesh = space.mesh();
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const double area = space.geometry(t).area;
    auto dofs = space.element_dofs(t);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto e = space.eval_basis(t, rule.points[q]);
      const Point2 fv = f(mesh.map_to_physical(t, rule.points[q]));
      const double w = rule.weights[q] * area;
      for (int i = 0; i < e.count; ++i) {
        out[0][dofs[i]] += w * fv.x * e.values[i];
        out[1][dofs[i]] += w * fv.y * e.values[i];
      }
    }
  }
  return out;
}

/// Gather the free (non-Dirichlet) entries of a full-numbering vector.
inline Vector restrict_to_free(const ScalarSpace& space, std::span<const double> full) {
  Vector out(space.num_free());
  for (int i = 0; i < space.num_free(); ++i) out[i] = full[space.free_to_full()[i]];
  return out;
}

/// Scatter free entries back; Dirichlet entries are zero.
inline Vector extend_from_free(const ScalarSpace& space, std::span<const double> free) {
  Vector out(space.dim(), 0.0);
  for (int i = 0; i < space.num_free(); ++i) out[space.free_to_full()[i]] = free[i];
  return out;
}

inline SparseSym restrict_to_free(const ScalarSpace& space, const SparseSym& m) {
  return m.restrict(space.full_to_free(), space.num_free());
}

}  // namespace oseen
