#include <gtest/gtest.h>

#include <sstream>

#include "oseen/scheme.hpp"

using namespace oseen;

namespace {

std::shared_ptr<const TriMesh> square(int n) { return std::make_shared<const TriMesh>(build_unit_square_mesh(n)); }

SchemeParams params(int k, int l, double d0, double dt, double T, double nu = 1.0) {
  SchemeParams p;
  p.k = k;
  p.l = l;
  p.delta0 = d0;
  p.dt = dt;
  p.T = T;
  p.nu = nu;
  return p;
}

/// Velocity-only problem: w = 0, p = 0, u a smooth field vanishing on the boundary.
class HeatProblem final : public ExactSolution {
 public:
  using ExactSolution::ExactSolution;
  Point2 u(Point2 x, double t) const override {
    const double b = x.x * (1 - x.x) * x.y * (1 - x.y);
    return {(1 + t) * b, (1 - t) * b * x.x};
  }
  Mat2 grad_u(Point2, double) const override { return {}; }
  Point2 u_t(Point2, double) const override { return {}; }
  Point2 laplace_u(Point2, double) const override { return {}; }
  double p(Point2, double) const override { return 0.0; }
  Point2 grad_p(Point2, double) const override { return {}; }
  Point2 w(Point2, double) const override { return {}; }
  Mat2 grad_w(Point2, double) const override { return {}; }
};

}  // namespace

TEST(Scheme, ParameterValidation) {
  EXPECT_THROW(params(2, 2, 0.0, 0.1, 1).validate(), InvalidArgument);
  EXPECT_THROW(params(2, 1, 0.1, 0.1, 1).validate(), InvalidArgument);
  EXPECT_THROW(params(3, 1, 0.0, 0.1, 1).validate(), InvalidArgument);
  EXPECT_THROW(params(1, 2, 0.1, 0.1, 1).validate(), InvalidArgument);
  EXPECT_THROW(params(2, 1, 0.0, 0.1, 1, 0.0).validate(), InvalidArgument);
  EXPECT_THROW(params(2, 1, 0.0, -0.1, 1).validate(), InvalidArgument);
  EXPECT_NO_THROW(params(2, 1, 0.0, 0.1, 1).validate());
  EXPECT_NO_THROW(params(1, 1, 0.1, 0.1, 1).validate());
}

TEST(Scheme, StepCountFromFinalTime) {
  EXPECT_EQ(params(2, 1, 0, 1.0 / 64, 1).num_steps(), 64);
  EXPECT_EQ(params(2, 1, 0, 0.1, 1).num_steps(), 10);
  EXPECT_EQ(params(2, 1, 0, 0.3, 1).num_steps(), 3);
  EXPECT_EQ(params(2, 1, 0, 0.5, 0.2).num_steps(), 0);
}

TEST(Scheme, MeshWithoutInteriorUnknownsRejected) {
  EXPECT_THROW(Scheme(square(1), params(1, 1, 0.1, 0.1, 1)), InvalidArgument);
}

TEST(Scheme, LagrangeInitialStateInterpolates) {
  const ManufacturedProblem prob(1.0);
  const Scheme s(square(4), params(2, 1, 0, 1.0 / 16, 1));
  const auto st = s.initialize(prob);
  const auto& xs = s.velocity_space()->dof_coordinates();
  for (int d = 0; d < s.velocity_space()->dim(); ++d) {
    const Point2 u0 = prob.u0(xs[d]);
    EXPECT_NEAR(st.u_tilde.components[0][d], u0.x, 1e-15);
    EXPECT_NEAR(st.u_tilde.components[1][d], u0.y, 1e-15);
  }
  EXPECT_EQ(st.p_prev.coeffs, st.p_now.coeffs);
  EXPECT_NEAR(st.p_now.integral(), 0.0, 1e-14);
}

TEST(Scheme, ZeroDataStaysZero) {
  const ZeroProblem zero(1.0);
  for (auto [k, l, d0] : {std::tuple{2, 1, 0.0}, std::tuple{2, 2, 0.01}, std::tuple{1, 1, 0.1}}) {
    const auto r = run(zero, params(k, l, d0, 0.05, 0.2), square(4));
    EXPECT_EQ(r.num_steps, 4);
    for (int a = 0; a < 2; ++a)
      for (double v : r.final_state.u_tilde.components[a]) EXPECT_EQ(v, 0.0);
    for (double v : r.final_state.p_now.coeffs) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(r.max_u_l2, 0.0);
  }
}

TEST(Scheme, ZeroVelocityStepIsImplicitEuler) {
  const HeatProblem heat(0.5);
  const double dt = 0.05;
  auto p = params(2, 1, 0, dt, 1, 0.5);
  p.cg_tol = 1e-13;
  const Scheme s(square(6), p);
  const auto st0 = s.initialize(heat);
  StepDiagnostics d;
  const auto st1 = s.step(st0, heat, &d);
  // with w = 0, p^0 = 0 (heat.p = 0) and f = 0 the momentum step is (M/dt + nu A) u1 = M u0 / dt
  const auto& V = *s.velocity_space();
  const auto M = restrict_to_free(V, s.mass());
  const auto K = combine(1.0 / dt, M, 1.0, restrict_to_free(V, assemble_stiffness(V, 0.5)));
  CgOptions tight;
  tight.tol = 1e-13;
  for (int a = 0; a < 2; ++a) {
    Vector rhs = M * restrict_to_free(V, st0.u_tilde.components[a]);
    for (auto& v : rhs) v /= dt;
    const auto ref = extend_from_free(V, cg_solve(K, rhs, tight).x);
    double scale = 0.0;
    for (double v : ref) scale = std::max(scale, std::abs(v));
    for (int i = 0; i < V.dim(); ++i) EXPECT_NEAR(st1.u_tilde.components[a][i], ref[i], 1e-12 * scale);
  }
  EXPECT_EQ(d.jac_min, 1.0);
  EXPECT_EQ(d.cg_iters_s1, 0);
}

TEST(Scheme, FinalTimeBelowStepReturnsInitialState) {
  const ManufacturedProblem prob(1.0);
  const auto r = run(prob, params(2, 1, 0, 0.5, 0.2), square(4));
  EXPECT_EQ(r.num_steps, 0);
  EXPECT_TRUE(r.diagnostics.empty());
  EXPECT_EQ(r.final_state.n, 0);
  EXPECT_EQ(r.errors.norm_l2_h10_u, 0.0);
  EXPECT_EQ(r.errors.norm_l2_l2_p, 0.0);
  EXPECT_GT(r.errors.norm_linf_l2_u, 0.0);
}

TEST(Scheme, SmokeRunKeepsPerStepInvariants) {
  const ManufacturedProblem prob(1.0);
  const auto p = params(2, 1, 0, 1.0 / 64, 1);
  std::ostringstream diag;
  RunOptions opt;
  opt.diagnostics_csv = &diag;
  const auto r = run(prob, p, square(8), opt);
  EXPECT_EQ(r.num_steps, 64);
  ASSERT_EQ(r.diagnostics.size(), 64u);
  for (const auto& d : r.diagnostics) {
    EXPECT_LE(d.div_residual, 10 * p.cg_tol * d.div_scale) << "step " << d.n;
    EXPECT_LE(std::abs(d.p_mean), 1e-10);
    if (d.hypothesis_holds) {
      EXPECT_GE(d.jac_min, 0.5);
      EXPECT_LE(d.jac_max, 1.5);
    }
  }
  EXPECT_LT(r.errors.E_linf_l2_u, 0.05);
  EXPECT_LT(r.errors.E_l2_l2_p, 0.5);
  std::istringstream is(diag.str());
  std::string line;
  int lines = 0;
  while (std::getline(is, line)) ++lines;
  EXPECT_EQ(lines, 65);
}

TEST(Scheme, OneStepFromExactDataIsClose) {
  const ManufacturedProblem prob(1.0);
  const Scheme s(square(8), params(2, 1, 0, 1.0 / 64, 1));
  const auto st1 = s.step(s.initialize(prob), prob);
  const auto n = compute_step_norms(prob, st1.u_tilde, st1.p_now, 1.0 / 64);
  // regression value of the first verified build
  constexpr double pinned = 6.654e-3;
  EXPECT_LT(n.u_l2_err, 10 * pinned);
  EXPECT_GT(n.u_l2_err, 0.0);
}

TEST(Scheme, EqualOrderRunsReportStabilizationDiagnostic) {
  const ManufacturedProblem prob(1.0);
  const auto r = run(prob, params(1, 1, 0.1, 1.0 / 16, 0.25), square(4));
  ASSERT_TRUE(r.errors.stab_seminorm.has_value());
  EXPECT_GT(*r.errors.stab_seminorm, 0.0);
  const auto th = run(prob, params(2, 1, 0, 1.0 / 16, 0.25), square(4));
  EXPECT_FALSE(th.errors.stab_seminorm.has_value());
}

TEST(Scheme, QuadratureModeTracksClippingMode) {
  const ManufacturedProblem prob(1.0);
  auto p = params(2, 1, 0, 1.0 / 64, 0.125);
  const auto exact = run(prob, p, square(8));
  p.composed = ComposedIntegration::quadrature;
  const auto quad = run(prob, p, square(8));
  EXPECT_NEAR(quad.errors.E_linf_l2_u, exact.errors.E_linf_l2_u, 0.2 * exact.errors.E_linf_l2_u);
}

TEST(Scheme, StokesProjectionInitialisation) {
  const ManufacturedProblem prob(1.0);
  auto p = params(2, 2, 0.01, 1.0 / 64, 1);
  const Scheme lag(square(8), p);
  p.init_mode = InitMode::stokes_projection;
  const Scheme sto(square(8), p);
  const auto a = compute_step_norms(prob, lag.initialize(prob).u_tilde, lag.initialize(prob).p_now, 0.0);
  const auto b = compute_step_norms(prob, sto.initialize(prob).u_tilde, sto.initialize(prob).p_now, 0.0);
  EXPECT_LE(b.u_l2_err, 10 * a.u_l2_err);
  EXPECT_NEAR(sto.initialize(prob).p_now.integral(), 0.0, 1e-12);
}

TEST(Scheme, StokesProjectionPressureConvergesAtOrderTwo) {
  const ManufacturedProblem prob(1.0);
  std::vector<double> ep, eu;
  for (int n : {4, 8, 16}) {
    const auto mesh = square(n);
    const auto V = build_space(mesh, 2, Constraint::zero_boundary);
    const auto Q = build_space(mesh, 2, Constraint::zero_mean);
    const auto sp = solve_stokes_projection(prob, 0.0, V, Q, 1.0, 0.01);
    EXPECT_LE(sp.relative_residual, 1e-9);
    const auto norms = compute_step_norms(prob, sp.velocity, sp.pressure, 0.0);
    ep.push_back(norms.p_l2_err);
    eu.push_back(norms.u_l2_err);
  }
  for (int i = 0; i < 2; ++i) {
    const double r = std::log2(ep[i] / ep[i + 1]);
    EXPECT_GE(r, 1.5) << i;
    EXPECT_LE(r, 2.5) << i;
    EXPECT_GE(std::log2(eu[i] / eu[i + 1]), 1.5) << i;
  }
}

TEST(Scheme, StokesProjectionOfZeroIsZero) {
  const ZeroProblem zero(1.0);
  const auto mesh = square(4);
  const auto sp = solve_stokes_projection(zero, 0.0, build_space(mesh, 2, Constraint::zero_boundary),
                                          build_space(mesh, 1, Constraint::zero_mean), 1.0, 0.0);
  for (double v : sp.pressure.coeffs) EXPECT_EQ(v, 0.0);
  for (int a = 0; a < 2; ++a)
    for (double v : sp.velocity.components[a]) EXPECT_EQ(v, 0.0);
}

TEST(Scheme, StokesProjectionRejectsUnstabilisedEqualOrder) {
  const ManufacturedProblem prob(1.0);
  const auto mesh = square(4);
  EXPECT_THROW(solve_stokes_projection(prob, 0.0, build_space(mesh, 1, Constraint::zero_boundary),
                                       build_space(mesh, 1, Constraint::zero_mean), 1.0, 0.0),
               InvalidArgument);
}

TEST(Scheme, CoarseStepStaysBounded) {
  const ManufacturedProblem prob(1e-4);
  auto p = params(1, 1, 0.1, 1.0 / 16, 1, 1e-4);
  std::ostringstream warnings;
  RunOptions opt;
  opt.warnings = &warnings;
  const auto r = run(prob, p, square(16), opt);
  EXPECT_LE(r.max_u_l2, 10 * r.max_exact_u_l2);
  EXPECT_GT(r.hypothesis_warnings, 0);
  EXPECT_NE(warnings.str().find("exceeds 1/4"), std::string::npos);
}

TEST(Scheme, SeminormPolicyRefusesCoarseStep) {
  const ManufacturedProblem prob(1e-4);
  auto p = params(1, 1, 0.1, 1.0 / 16, 1, 1e-4);
  p.bijectivity = BijectivityCheck::seminorm;
  EXPECT_THROW(run(prob, p, square(16)), HypothesisViolation);
}

TEST(Scheme, RunsAreDeterministic) {
  const ManufacturedProblem prob(1.0);
  const auto p = params(2, 2, 0.01, 1.0 / 16, 0.25);
  const auto a = run(prob, p, square(4));
  const auto b = run(prob, p, square(4));
  EXPECT_EQ(a.errors.E_linf_l2_u, b.errors.E_linf_l2_u);
  EXPECT_EQ(a.final_state.p_now.coeffs, b.final_state.p_now.coeffs);
}
