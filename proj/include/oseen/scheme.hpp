#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "oseen/assembly.hpp"
#include "oseen/characteristics.hpp"
#include "oseen/errors.hpp"
#include "oseen/fe_space.hpp"
#include "oseen/linalg.hpp"
#include "oseen/mesh.hpp"
#include "oseen/problems.hpp"
#include "oseen/stokes_projection.hpp"

namespace oseen {

enum class InitMode { lagrange, stokes_projection };

/// How the composed term (u o X1(w_h), v) is integrated.
enum class ComposedIntegration { exact_clipping, quadrature };

struct SchemeParams {
  int k = 2;
  int l = 1;
  double delta0 = 0.0;
  double nu = 1.0;
  double dt = 1.0 / 64.0;
  double T = 1.0;
  double cg_tol = 1e-10;
  InitMode init_mode = InitMode::lagrange;
  BijectivityCheck bijectivity = BijectivityCheck::jacobian;
  ComposedIntegration composed = ComposedIntegration::exact_clipping;
  /// rule degree for ComposedIntegration::quadrature
  int composed_quadrature_degree = 11;
  /// accumulate delta0^{1/2} |p_h - I_h p|_{l2(s)} (equal-order, delta0 > 0 only)
  bool stab_diagnostic = true;

  void validate() const {
    if (k < 1 || k > 2 || l < 1 || l > 2 || l > k)
      throw InvalidArgument("SchemeParams: unsupported pair (k, l) = (" + std::to_string(k) + ", " + std::to_string(l) + ")");
    if (!(nu > 0.0)) throw InvalidArgument("SchemeParams: nu must be positive");
    if (!(dt > 0.0)) throw InvalidArgument("SchemeParams: dt must be positive");
    if (!(T >= 0.0)) throw InvalidArgument("SchemeParams: T must be non-negative");
    if (delta0 < 0.0) throw InvalidArgument("SchemeParams: delta0 must be non-negative");
    if (k == l && !(delta0 > 0.0)) throw InvalidArgument("SchemeParams: equal-order pairs need delta0 > 0");
    if (k != l && delta0 != 0.0)
      throw InvalidArgument("SchemeParams: delta0 > 0 is only defined for equal-order pairs");
    if (!(cg_tol > 0.0)) throw InvalidArgument("SchemeParams: cg_tol must be positive");
  }

  /// N_T = floor(T / dt); the small slack absorbs rounding in T / dt for exact ratios.
  int num_steps() const { return static_cast<int>(std::floor(T / dt * (1.0 + 1e-12))); }
};

/// Per-step state. u_h^n itself is never stored: it equals u_tilde - dt grad(p_now - p_prev).
struct SchemeState {
  int n = 0;
  double t = 0.0;
  VectorField u_tilde;
  ScalarField p_now;
  ScalarField p_prev;
  VectorField u_proj;
};

struct StepDiagnostics {
  int n = 0;
  double t = 0.0;
  int cg_iters_s1 = 0;
  int cg_iters_s2a = 0;
  int cg_iters_s2b = 0;
  int cg_iters_s3 = 0;
  /// max_j |(u_h^{n+1}, grad q_j) - c_h(p_h^{n+1}, q_j)|
  double div_residual = 0.0;
  /// dt * ||right-hand side of the pressure step||_2
  double div_scale = 0.0;
  double jac_min = 1.0;
  double jac_max = 1.0;
  double dt_lipschitz = 0.0;
  bool hypothesis_holds = true;
  double u_l2 = 0.0;
  double p_mean = 0.0;
};

inline void write_diagnostics_header(std::ostream& os) {
  os << "n,t,cg_iters_s1,cg_iters_s2a,cg_iters_s2b,cg_iters_s3,div_residual,jac_min,jac_max,u_l2\n";
}

inline void write_diagnostics_row(std::ostream& os, const StepDiagnostics& d) {
  os.precision(12);
  os << d.n << ',' << d.t << ',' << d.cg_iters_s1 << ',' << d.cg_iters_s2a << ',' << d.cg_iters_s2b << ','
     << d.cg_iters_s3 << ',' << d.div_residual << ',' << d.jac_min << ',' << d.jac_max << ',' << d.u_l2 << '\n';
}

/// Scheme(k, l, delta0): assembles the three constant stage matrices once and advances
///   Stage 1  (i_h^T u^n, v) = (u~^n - dt grad(p^n - p^{n-1}), v)
///   Stage 2  (u~^{n+1}, v)/dt + a(u~^{n+1}, v) = ((i_h^T u^n) o X1(w_h^n), v)/dt - (grad p^n, v) + (f^{n+1}, v)
///   Stage 3  (grad p^{n+1}, grad q) + c_h(p^{n+1}, q)/dt = (grad p^n, grad q) + (u~^{n+1}, grad q)/dt
class Scheme {
 public:
  Scheme(std::shared_ptr<const TriMesh> mesh, SchemeParams params) : params_(params) {
    params_.validate();
    v_space_ = build_space(mesh, params_.k, Constraint::zero_boundary);
    q_space_ = build_space(mesh, params_.l, Constraint::zero_mean);
    w_space_ = build_space(mesh, 1, Constraint::none);
    const ScalarSpace& V = *v_space_;
    const ScalarSpace& Q = *q_space_;
    if (V.num_free() == 0) throw InvalidArgument("Scheme: mesh has no interior velocity unknowns");

    mass_full_ = assemble_mass(V);
    mass_free_ = restrict_to_free(V, mass_full_);
    stiff_free_ = restrict_to_free(V, assemble_stiffness(V, params_.nu));
    momentum_ = combine(1.0 / params_.dt, mass_free_, 1.0, stiff_free_);
    grad_ = assemble_pressure_gradient(V, Q);
    lap_p_ = assemble_stiffness(Q, 1.0);
    if (params_.delta0 > 0.0) {
      stab_ = assemble_stabilization(Q, params_.k);
      pressure_ = combine(1.0, lap_p_, params_.delta0 / params_.dt, *stab_);
    } else {
      pressure_ = lap_p_;
    }
    deflate_.emplace(Q.basis_integrals());
  }

  const SchemeParams& params() const { return params_; }
  const std::shared_ptr<const ScalarSpace>& velocity_space() const { return v_space_; }
  const std::shared_ptr<const ScalarSpace>& pressure_space() const { return q_space_; }
  const std::shared_ptr<const ScalarSpace>& p1_space() const { return w_space_; }
  const SparseSym& mass() const { return mass_full_; }
  const SparseSym& stage1_matrix() const { return mass_free_; }
  const SparseSym& stage2_matrix() const { return momentum_; }
  const SparseSym& stage3_matrix() const { return pressure_; }
  const PressureGradient& gradient() const { return grad_; }
  const SparseSym& pressure_laplacian() const { return lap_p_; }
  const std::optional<SparseSym>& stabilization() const { return stab_; }

  SchemeState initialize(const ExactSolution& problem) const {
    SchemeState s;
    if (params_.init_mode == InitMode::lagrange) {
      s.u_tilde = VectorField(v_space_);
      const auto& xs = v_space_->dof_coordinates();
      for (int d = 0; d < v_space_->dim(); ++d) {
        if (v_space_->is_boundary_dof(d)) continue;
        const Point2 u0 = problem.u0(xs[d]);
        s.u_tilde.components[0][d] = u0.x;
        s.u_tilde.components[1][d] = u0.y;
      }
      s.p_now = lagrange_interpolate(q_space_, [&](Point2 x, double t) { return problem.p(x, t); }, 0.0);
    } else {
      auto sp = solve_stokes_projection(problem, 0.0, v_space_, q_space_, params_.nu, params_.delta0);
      s.u_tilde = std::move(sp.velocity);
      s.p_now = std::move(sp.pressure);
    }
    s.u_tilde.time_label = 0.0;
    s.p_prev = s.p_now;
    s.u_proj = s.u_tilde;
    return s;
  }

  SchemeState step(const SchemeState& cur, const ExactSolution& problem, StepDiagnostics* diag = nullptr,
                   std::ostream* warn = nullptr) const {
    const ScalarSpace& V = *v_space_;
    const ScalarSpace& Q = *q_space_;
    const double dt = params_.dt;
    const double t_next = (cur.n + 1) * dt;
    StepDiagnostics d;
    d.n = cur.n + 1;
    d.t = t_next;

    CgOptions opt;
    opt.tol = params_.cg_tol;

    // Stage 1: L2 projection of u_h^n onto V_h (identity at n = 0)
    SchemeState next;
    next.n = cur.n + 1;
    next.t = t_next;
    VectorField u_proj = cur.u_tilde;
    if (cur.n >= 1) {
      Vector dp(Q.dim());
      for (int j = 0; j < Q.dim(); ++j) dp[j] = cur.p_now.coeffs[j] - cur.p_prev.coeffs[j];
      for (int a = 0; a < 2; ++a) {
        Vector rhs = mass_full_ * cur.u_tilde.components[a];
        const Vector bdp = grad_[a] * dp;
        axpy(-dt, bdp, rhs);
        auto r = cg_solve(mass_free_, restrict_to_free(V, rhs), opt, restrict_to_free(V, cur.u_tilde.components[a]));
        u_proj.components[a] = extend_from_free(V, r.x);
        d.cg_iters_s1 += r.iterations;
      }
    }
    u_proj.time_label = cur.t;

    // Stage 2: momentum with the characteristic composition
    const auto wh = build_linearized_velocity([&](Point2 x, double t) { return problem.w(x, t); }, cur.t, w_space_);
    const X1Map x1 = map_x1(wh, dt, params_.bijectivity);
    d.jac_min = x1.jac_min;
    d.jac_max = x1.jac_max;
    d.dt_lipschitz = x1.dt_lipschitz;
    d.hypothesis_holds = x1.hypothesis_holds;
    if (warn && !x1.hypothesis_holds)
      *warn << "warning: step " << d.n << ": dt |w_h|_{1,inf} = " << x1.dt_lipschitz << " exceeds 1/4\n";

    std::array<Vector, 2> composed;
    if (params_.composed == ComposedIntegration::exact_clipping) {
      composed = integrate_composed_term(u_proj, x1).rhs;
    } else {
      composed = composed_term_quadrature(u_proj, x1, rule_for_degree(params_.composed_quadrature_degree));
    }
    const auto force = assemble_vector_load(V, [&](Point2 x) { return problem.f(x, t_next); }, dunavant_degree9());

    next.u_tilde = VectorField(v_space_);
    next.u_tilde.time_label = t_next;
    for (int a = 0; a < 2; ++a) {
      Vector rhs = force[a];
      axpy(1.0 / dt, composed[a], rhs);
      axpy(-1.0, grad_[a] * cur.p_now.coeffs, rhs);
      auto r = cg_solve(momentum_, restrict_to_free(V, rhs), opt, restrict_to_free(V, cur.u_tilde.components[a]));
      next.u_tilde.components[a] = extend_from_free(V, r.x);
      (a == 0 ? d.cg_iters_s2a : d.cg_iters_s2b) = r.iterations;
    }

    // Stage 3: stabilized pressure Poisson problem with Neumann conditions
    Vector div_u(Q.dim(), 0.0);
    for (int a = 0; a < 2; ++a) axpy(1.0, grad_[a].multiply_transpose(next.u_tilde.components[a]), div_u);
    Vector rhs3 = lap_p_ * cur.p_now.coeffs;
    axpy(1.0 / dt, div_u, rhs3);
    CgOptions popt = opt;
    popt.deflate = &*deflate_;
    auto pr = cg_solve(pressure_, rhs3, popt, cur.p_now.coeffs);
    d.cg_iters_s3 = pr.iterations;
    next.p_now = ScalarField(q_space_, std::move(pr.x));
    next.p_prev = cur.p_now;
    next.u_proj = std::move(u_proj);

    // (u^{n+1}, grad q) - c_h(p^{n+1}, q) with u^{n+1} = u~^{n+1} - dt grad(p^{n+1} - p^n)
    Vector dp(Q.dim());
    for (int j = 0; j < Q.dim(); ++j) dp[j] = next.p_now.coeffs[j] - cur.p_now.coeffs[j];
    Vector res = div_u;
    axpy(-dt, lap_p_ * dp, res);
    if (stab_) axpy(-params_.delta0, *stab_ * next.p_now.coeffs, res);
    d.div_residual = 0.0;
    for (double r : res) d.div_residual = std::max(d.div_residual, std::abs(r));
    d.div_scale = dt * norm2(rhs3);
    d.p_mean = next.p_now.integral();
    d.u_l2 = velocity_l2(next.u_tilde);
    if (diag) *diag = d;
    return next;
  }

  /// ||v||_0 via the mass matrix.
  double velocity_l2(const VectorField& v) const {
    double s = 0.0;
    for (int a = 0; a < 2; ++a) s += mass_full_.quadratic_form(v.components[a]);
    return std::sqrt(std::max(s, 0.0));
  }

 private:
  SchemeParams params_;
  std::shared_ptr<const ScalarSpace> v_space_, q_space_, w_space_;
  SparseSym mass_full_, mass_free_, stiff_free_, momentum_, lap_p_, pressure_;
  std::optional<SparseSym> stab_;
  PressureGradient grad_;
  std::optional<DeflationVector> deflate_;
};

struct RunOptions {
  bool compute_errors = true;
  std::ostream* diagnostics_csv = nullptr;
  std::ostream* warnings = nullptr;
};

struct RunResult {
  SchemeState final_state;
  ErrorReport errors;
  std::vector<StepDiagnostics> diagnostics;
  int num_steps = 0;
  int hypothesis_warnings = 0;
  /// max_n ||u~_h^n||_0 and max_n ||u(t^n)||_0 over n = 0..N_T
  double max_u_l2 = 0.0;
  double max_exact_u_l2 = 0.0;
  double runtime_s = 0.0;
};

/// Runs N_T = floor(T/dt) steps from the initial state, accumulating error norms against `problem`.
inline RunResult run(const ExactSolution& problem, const SchemeParams& params, std::shared_ptr<const TriMesh> mesh,
                     const RunOptions& options = {}) {
  const auto start = std::chrono::steady_clock::now();
  Scheme scheme(std::move(mesh), params);
  RunResult out;
  out.num_steps = params.num_steps();
  ErrorAccumulator acc(params.dt);
  const bool stab_diag = params.stab_diagnostic && scheme.stabilization().has_value();

  auto record = [&](const SchemeState& s) {
    out.max_u_l2 = std::max(out.max_u_l2, scheme.velocity_l2(s.u_tilde));
    if (!options.compute_errors) return;
    const StepNorms norms = compute_step_norms(problem, s.u_tilde, s.p_now, s.t);
    out.max_exact_u_l2 = std::max(out.max_exact_u_l2, norms.u_l2);
    std::optional<double> stab_sq;
    if (stab_diag) {
      const auto ip = lagrange_interpolate(scheme.pressure_space(), [&](Point2 x, double t) { return problem.p(x, t); }, s.t);
      Vector e(ip.coeffs.size());
      for (std::size_t j = 0; j < e.size(); ++j) e[j] = s.p_now.coeffs[j] - ip.coeffs[j];
      stab_sq = params.delta0 * scheme.stabilization()->quadratic_form(e);
    }
    acc.add(s.n, norms, stab_sq);
  };

  if (options.diagnostics_csv) write_diagnostics_header(*options.diagnostics_csv);
  SchemeState state = scheme.initialize(problem);
  record(state);
  out.diagnostics.reserve(out.num_steps);
  for (int n = 0; n < out.num_steps; ++n) {
    StepDiagnostics d;
    state = scheme.step(state, problem, &d, options.warnings);
    if (!d.hypothesis_holds) ++out.hypothesis_warnings;
    if (options.diagnostics_csv) write_diagnostics_row(*options.diagnostics_csv, d);
    out.diagnostics.push_back(d);
    record(state);
  }
  out.errors = acc.report();
  out.final_state = std::move(state);
  out.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace oseen
