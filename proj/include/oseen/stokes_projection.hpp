#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <utility>

#include "oseen/assembly.hpp"
#include "oseen/fe_space.hpp"
#include "oseen/linalg.hpp"
#include "oseen/problems.hpp"

namespace oseen {

struct StokesProjection {
  VectorField velocity;
  ScalarField pressure;
  /// ||block residual|| / ||block right-hand side|| of the assembled system
  double relative_residual = 0.0;
  int outer_iterations = 0;
};

struct StokesOptions {
  double outer_tol = 1e-11;
  double inner_tol = 1e-13;
};

/// Discrete pair (S_h u*, S_h p*) in V_h x Q_h solving
///   a(S_h u, v) - (S_h p, div v) = a(u*, v) - (p*, div v),
///   -(div S_h u, q) - delta0 s0(S_h p, q) = -(div u*, q),
/// with u*, p* taken from `problem` at time t. Solved by CG on the pressure Schur complement.
inline StokesProjection solve_stokes_projection(const ExactSolution& problem, double t,
                                                std::shared_ptr<const ScalarSpace> v_space,
                                                std::shared_ptr<const ScalarSpace> q_space, double nu, double delta0,
                                                const StokesOptions& opt = {}) {
  if (v_space->constraint() != Constraint::zero_boundary || q_space->constraint() != Constraint::zero_mean)
    throw InvalidArgument("solve_stokes_projection: expects zero_boundary velocity and zero_mean pressure spaces");
  if (v_space->degree() == q_space->degree() && !(delta0 > 0.0))
    throw InvalidArgument("solve_stokes_projection: equal-order pairs need delta0 > 0");
  const ScalarSpace& V = *v_space;
  const ScalarSpace& Q = *q_space;
  const int nv = V.num_free(), nq = Q.dim();

  const SparseSym A = restrict_to_free(V, assemble_stiffness(V, nu));
  const auto B_full = assemble_pressure_gradient(V, Q);
  std::vector<int> all_q(nq);
  for (int j = 0; j < nq; ++j) all_q[j] = j;
  const std::array<SparseMatrix, 2> B{B_full[0].restrict(V.full_to_free(), nv, all_q, nq),
                                      B_full[1].restrict(V.full_to_free(), nv, all_q, nq)};
  const bool stabilized = delta0 > 0.0;
  const SparseSym S = stabilized ? assemble_stabilization(Q, Q.degree()) : SparseSym();

  const auto rule = dunavant_degree9();
  // a(u*, v) - (p*, div v) = (grad p*, v) + nu (grad u*, grad v) for v vanishing on the boundary
  auto F = assemble_vector_load(V, [&](Point2 x) { return problem.grad_p(x, t); }, rule);
  const auto& mesh = V.mesh();
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const double area = V.geometry(k).area;
    auto dofs = V.element_dofs(k);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto e = V.eval_basis(k, rule.points[q]);
      const Mat2 g = problem.grad_u(mesh.map_to_physical(k, rule.points[q]), t);
      const double w = nu * rule.weights[q] * area;
      for (int i = 0; i < e.count; ++i) {
        F[0][dofs[i]] += w * (g.a00 * e.grads[i].x + g.a01 * e.grads[i].y);
        F[1][dofs[i]] += w * (g.a10 * e.grads[i].x + g.a11 * e.grads[i].y);
      }
    }
  }
  const std::array<Vector, 2> Ff{restrict_to_free(V, F[0]), restrict_to_free(V, F[1])};
  const Vector G = assemble_load(
      Q,
      [&](Point2 x) {
        const Mat2 gu = problem.grad_u(x, t);
        return -(gu.a00 + gu.a11);
      },
      rule);

  CgOptions inner;
  inner.tol = opt.inner_tol;
  auto solve_velocity = [&](const Vector& rhs) {
    if (norm2(rhs) == 0.0) return Vector(nv, 0.0);
    return cg_solve(A, rhs, inner).x;
  };

  // Schur complement: (sum_a B_a^T A^{-1} B_a + delta0 S) P = sum_a B_a^T A^{-1} F_a - G
  LinearOperator schur;
  schur.size = nq;
  schur.apply = [&](std::span<const double> p, std::span<double> y) {
    std::fill(y.begin(), y.end(), 0.0);
    for (int a = 0; a < 2; ++a) {
      const Vector z = solve_velocity(B[a] * p);
      const Vector bt = B[a].multiply_transpose(z);
      for (int j = 0; j < nq; ++j) y[j] += bt[j];
    }
    if (stabilized) {
      const Vector sp = S * p;
      for (int j = 0; j < nq; ++j) y[j] += delta0 * sp[j];
    }
  };
  Vector rhs(nq, 0.0);
  std::array<Vector, 2> AinvF;
  for (int a = 0; a < 2; ++a) {
    AinvF[a] = solve_velocity(Ff[a]);
    const Vector bt = B[a].multiply_transpose(AinvF[a]);
    for (int j = 0; j < nq; ++j) rhs[j] += bt[j];
  }
  for (int j = 0; j < nq; ++j) rhs[j] -= G[j];

  const DeflationVector deflate(Q.basis_integrals());
  CgOptions outer;
  outer.tol = opt.outer_tol;
  outer.precond = Preconditioner::none;
  outer.deflate = &deflate;
  outer.max_iter = 10 * nq;
  auto pres = cg_solve(schur, rhs, outer);

  StokesProjection out;
  out.outer_iterations = pres.iterations;
  out.pressure = ScalarField(q_space, pres.x);
  out.velocity = VectorField(v_space);
  std::array<Vector, 2> U;
  for (int a = 0; a < 2; ++a) {
    Vector r = Ff[a];
    const Vector bp = B[a] * pres.x;
    for (int i = 0; i < nv; ++i) r[i] -= bp[i];
    U[a] = solve_velocity(r);
    out.velocity.components[a] = extend_from_free(V, U[a]);
  }

  // residual of the assembled block system
  double res2 = 0.0, rhs2 = 0.0;
  for (int a = 0; a < 2; ++a) {
    const Vector au = A * U[a];
    const Vector bp = B[a] * pres.x;
    for (int i = 0; i < nv; ++i) {
      const double r = Ff[a][i] - au[i] - bp[i];
      res2 += r * r;
      rhs2 += Ff[a][i] * Ff[a][i];
    }
  }
  Vector second(nq, 0.0);
  for (int a = 0; a < 2; ++a) {
    const Vector bt = B[a].multiply_transpose(U[a]);
    for (int j = 0; j < nq; ++j) second[j] += bt[j];
  }
  if (stabilized) {
    const Vector sp = S * pres.x;
    for (int j = 0; j < nq; ++j) second[j] -= delta0 * sp[j];
  }
  for (int j = 0; j < nq; ++j) {
    const double r = G[j] - second[j];
    res2 += r * r;
    rhs2 += G[j] * G[j];
  }
  out.relative_residual = rhs2 > 0.0 ? std::sqrt(res2 / rhs2) : std::sqrt(res2);
  return out;
}

}  // namespace oseen
