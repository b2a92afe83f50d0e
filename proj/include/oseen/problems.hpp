#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <string>

#include "oseen/fe_space.hpp"
#include "oseen/geometry.hpp"
#include "oseen/linalg.hpp"
#include "oseen/quadrature.hpp"

namespace oseen {

/// Closed-form data of an Oseen problem: u, p, the convecting field w and the forcing f.
class ExactSolution {
 public:
  explicit ExactSolution(double nu) : nu_(nu) {
    if (!(nu > 0.0)) throw InvalidArgument("ExactSolution: viscosity must be positive");
  }
  virtual ~ExactSolution() = default;

  double nu() const { return nu_; }

  virtual Point2 u(Point2 x, double t) const = 0;
  /// [[du1/dx, du1/dy], [du2/dx, du2/dy]]
  virtual Mat2 grad_u(Point2 x, double t) const = 0;
  virtual Point2 u_t(Point2 x, double t) const = 0;
  virtual Point2 laplace_u(Point2 x, double t) const = 0;
  virtual double p(Point2 x, double t) const = 0;
  virtual Point2 grad_p(Point2 x, double t) const = 0;
  virtual Point2 w(Point2 x, double t) const = 0;
  virtual Mat2 grad_w(Point2 x, double t) const = 0;

  Point2 u0(Point2 x) const { return u(x, 0.0); }

  /// (w . grad) u
  Point2 convection(Point2 x, double t) const {
    const Point2 wv = w(x, t);
    const Mat2 g = grad_u(x, t);
    return {wv.x * g.a00 + wv.y * g.a01, wv.x * g.a10 + wv.y * g.a11};
  }

  /// f = u_t + (w . grad) u - nu Laplace u + grad p
  Point2 f(Point2 x, double t) const {
    return u_t(x, t) + convection(x, t) - nu_ * laplace_u(x, t) + grad_p(x, t);
  }

 private:
  double nu_;
};

/// Solenoidal test flow on the unit square with w = u:
///   u1 = (1 + sin pi t) sin^2(pi x) sin(2 pi y),  u2 = -(1 + sin pi t) sin(2 pi x) sin^2(pi y),
///   p  = -cos(pi y) + cos(4 pi (t + x)) / 2.
class ManufacturedProblem final : public ExactSolution {
 public:
  using ExactSolution::ExactSolution;

  Point2 u(Point2 x, double t) const override { return s(t) * Point2{a(x), -b(x)}; }

  Mat2 grad_u(Point2 x, double t) const override {
    const double st = s(t);
    const Point2 ga = grad_a(x), gb = grad_b(x);
    return {st * ga.x, st * ga.y, -st * gb.x, -st * gb.y};
  }

  Point2 u_t(Point2 x, double t) const override { return ds(t) * Point2{a(x), -b(x)}; }

  Point2 laplace_u(Point2 x, double t) const override {
    const double st = s(t);
    const double sx = std::sin(pi * x.x), sy = std::sin(pi * x.y);
    const double lap_a = 2 * pi * pi * std::cos(2 * pi * x.x) * std::sin(2 * pi * x.y) -
                         4 * pi * pi * sx * sx * std::sin(2 * pi * x.y);
    const double lap_b = -4 * pi * pi * std::sin(2 * pi * x.x) * sy * sy +
                         2 * pi * pi * std::sin(2 * pi * x.x) * std::cos(2 * pi * x.y);
    return st * Point2{lap_a, -lap_b};
  }

  double p(Point2 x, double t) const override { return -std::cos(pi * x.y) + 0.5 * std::cos(4 * pi * (t + x.x)); }

  Point2 grad_p(Point2 x, double t) const override {
    return {-2 * pi * std::sin(4 * pi * (t + x.x)), pi * std::sin(pi * x.y)};
  }

  Point2 w(Point2 x, double t) const override { return u(x, t); }
  Mat2 grad_w(Point2 x, double t) const override { return grad_u(x, t); }

 private:
  static constexpr double pi = std::numbers::pi;
  static double s(double t) { return 1.0 + std::sin(pi * t); }
  static double ds(double t) { return pi * std::cos(pi * t); }
  static double a(Point2 x) {
    const double sx = std::sin(pi * x.x);
    return sx * sx * std::sin(2 * pi * x.y);
  }
  static double b(Point2 x) {
    const double sy = std::sin(pi * x.y);
    return std::sin(2 * pi * x.x) * sy * sy;
  }
  static Point2 grad_a(Point2 x) {
    const double sx = std::sin(pi * x.x);
    return {pi * std::sin(2 * pi * x.x) * std::sin(2 * pi * x.y), 2 * pi * sx * sx * std::cos(2 * pi * x.y)};
  }
  static Point2 grad_b(Point2 x) {
    const double sy = std::sin(pi * x.y);
    return {2 * pi * std::cos(2 * pi * x.x) * sy * sy, pi * std::sin(2 * pi * x.x) * std::sin(2 * pi * x.y)};
  }
};

/// u = 0, p = 0, w = 0, f = 0.
class ZeroProblem final : public ExactSolution {
 public:
  using ExactSolution::ExactSolution;
  Point2 u(Point2, double) const override { return {}; }
  Mat2 grad_u(Point2, double) const override { return {}; }
  Point2 u_t(Point2, double) const override { return {}; }
  Point2 laplace_u(Point2, double) const override { return {}; }
  double p(Point2, double) const override { return 0.0; }
  Point2 grad_p(Point2, double) const override { return {}; }
  Point2 w(Point2, double) const override { return {}; }
  Mat2 grad_w(Point2, double) const override { return {}; }
};

enum class Field { u, p, w, f };

/// Uniform evaluator; scalar results (p) are returned in the x slot.
inline Point2 eval_exact(const ExactSolution& problem, Field which, Point2 x, double t) {
  switch (which) {
    case Field::u: return problem.u(x, t);
    case Field::p: return {problem.p(x, t), 0.0};
    case Field::w: return problem.w(x, t);
    case Field::f: return problem.f(x, t);
  }
  return {};
}

/// Per-step spatial norms, all integrated with the 19-point degree-9 rule.
struct StepNorms {
  double u_l2_err = 0.0, u_l2 = 0.0;
  double u_h1_err = 0.0, u_h1 = 0.0;
  double p_l2_err = 0.0, p_l2 = 0.0;
};

/// L2 / H1-seminorm errors of a discrete (velocity, pressure) pair against the exact solution at time t.
inline StepNorms compute_step_norms(const ExactSolution& problem, const VectorField& uh, const ScalarField& ph, double t,
                                    const QuadratureRule& rule = dunavant_degree9()) {
  StepNorms s;
  const auto& mesh = uh.space->mesh();
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const double area = mesh.area(k);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto& l = rule.points[q];
      const double w = rule.weights[q] * area;
      const Point2 x = mesh.map_to_physical(k, l);
      const Point2 ue = problem.u(x, t);
      const Mat2 ge = problem.grad_u(x, t);
      const double pe = problem.p(x, t);
      const Point2 du = ue - uh.value(k, l);
      const Mat2 gh = uh.gradient(k, l);
      const Mat2 dg{ge.a00 - gh.a00, ge.a01 - gh.a01, ge.a10 - gh.a10, ge.a11 - gh.a11};
      const double dp = pe - ph.value(k, l);
      s.u_l2_err += w * dot(du, du);
      s.u_l2 += w * dot(ue, ue);
      s.u_h1_err += w * dg.frobenius() * dg.frobenius();
      s.u_h1 += w * ge.frobenius() * ge.frobenius();
      s.p_l2_err += w * dp * dp;
      s.p_l2 += w * pe * pe;
    }
  }
  s.u_l2_err = std::sqrt(s.u_l2_err);
  s.u_l2 = std::sqrt(s.u_l2);
  s.u_h1_err = std::sqrt(s.u_h1_err);
  s.u_h1 = std::sqrt(s.u_h1);
  s.p_l2_err = std::sqrt(s.p_l2_err);
  s.p_l2 = std::sqrt(s.p_l2);
  return s;
}

/// Relative discrete space-time errors. A zero denominator reports the absolute error.
struct ErrorReport {
  double E_linf_l2_u = 0.0;
  double E_l2_h10_u = 0.0;
  double E_l2_l2_p = 0.0;
  /// delta0^{1/2} |p_h - I_h p|_{l2(s)} with Lagrange interpolation standing in for the Clement operator.
  std::optional<double> stab_seminorm;

  double norm_linf_l2_u = 0.0;
  double norm_l2_h10_u = 0.0;
  double norm_l2_l2_p = 0.0;
};

/// Accumulates the time-discrete norms: l_inf over n = 0..N_T, l2 sums over n = 1..N_T weighted by dt.
class ErrorAccumulator {
 public:
  explicit ErrorAccumulator(double dt) : dt_(dt) {}

  void add(int n, const StepNorms& s, std::optional<double> stab_sq = {}) {
    max_u_err_ = std::max(max_u_err_, s.u_l2_err);
    max_u_ = std::max(max_u_, s.u_l2);
    if (n >= 1) {
      h1_err_ += dt_ * s.u_h1_err * s.u_h1_err;
      h1_ += dt_ * s.u_h1 * s.u_h1;
      p_err_ += dt_ * s.p_l2_err * s.p_l2_err;
      p_ += dt_ * s.p_l2 * s.p_l2;
      if (stab_sq) stab_ = stab_.value_or(0.0) + dt_ * *stab_sq;
    }
  }

  ErrorReport report() const {
    ErrorReport r;
    r.norm_linf_l2_u = max_u_;
    r.norm_l2_h10_u = std::sqrt(h1_);
    r.norm_l2_l2_p = std::sqrt(p_);
    r.E_linf_l2_u = ratio(max_u_err_, r.norm_linf_l2_u);
    r.E_l2_h10_u = ratio(std::sqrt(h1_err_), r.norm_l2_h10_u);
    r.E_l2_l2_p = ratio(std::sqrt(p_err_), r.norm_l2_l2_p);
    if (stab_) r.stab_seminorm = std::sqrt(*stab_);
    return r;
  }

 private:
  static double ratio(double num, double den) { return den > 0.0 ? num / den : num; }

  double dt_;
  double max_u_err_ = 0.0, max_u_ = 0.0;
  double h1_err_ = 0.0, h1_ = 0.0;
  double p_err_ = 0.0, p_ = 0.0;
  std::optional<double> stab_;
};

}  // namespace oseen
