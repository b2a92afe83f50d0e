#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oseen/assembly.hpp"
#include "oseen/characteristics.hpp"
#include "oseen/fe_space.hpp"
#include "oseen/linalg.hpp"
#include "oseen/mesh.hpp"
#include "oseen/problems.hpp"
#include "oseen/quadrature.hpp"
#include "oseen/scheme.hpp"

namespace oseen {

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace verify_detail {

inline Eigen::MatrixXd dense(const SparseMatrix& m) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m.rows(), m.cols());
  for (const auto& t : m.triplets()) d(t.row, t.col) += t.value;
  return d;
}

struct Spectrum {
  double asymmetry = 0.0;
  double min_eig = 0.0;
  double max_eig = 0.0;
  int kernel_dim = 0;
};

/// Eigenvalues below 1e-10 * max |eig| count as kernel.
inline Spectrum spectrum(const SparseSym& a) {
  const Eigen::MatrixXd d = dense(a.matrix());
  Spectrum s;
  s.asymmetry = (d - d.transpose()).cwiseAbs().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  s.min_eig = ev.minCoeff();
  s.max_eig = ev.maxCoeff();
  const double tol = 1e-10 * std::max(std::abs(s.min_eig), std::abs(s.max_eig));
  for (int i = 0; i < ev.size(); ++i)
    if (std::abs(ev[i]) <= tol) ++s.kernel_dim;
  return s;
}

inline std::string describe(const Spectrum& s) {
  std::ostringstream os;
  os << "asym=" << s.asymmetry << " eig=[" << s.min_eig << ", " << s.max_eig << "] kernel=" << s.kernel_dim;
  return os.str();
}

// (definite: all eigenvalues positive) or (semidefinite with the expected kernel dimension)
inline bool spsd_ok(const Spectrum& s, int expected_kernel) {
  const double tol = 1e-10 * std::abs(s.max_eig);
  return s.asymmetry <= 1e-12 * std::abs(s.max_eig) && s.min_eig >= -tol && s.kernel_dim == expected_kernel;
}

}  // namespace verify_detail

/// Structural checks that need no reference numbers: symmetry and definiteness of every assembled
/// matrix, stabilization kernels, partition of unity, quadrature moments, deflated CG constraint,
/// the zero-data fixed point and area conservation of the clipping.
inline std::vector<PropertyResult> run_property_suite() {
  using namespace verify_detail;
  std::vector<PropertyResult> out;
  auto check = [&](const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
    PropertyResult r{name, false, {}};
    try {
      auto [ok, detail] = body();
      r.passed = ok;
      r.detail = std::move(detail);
    } catch (const std::exception& e) {
      r.detail = std::string("exception: ") + e.what();
    }
    out.push_back(std::move(r));
  };

  const auto mesh = std::make_shared<const TriMesh>(build_unit_square_mesh(3));

  for (int degree : {1, 2}) {
    const auto full = build_space(mesh, degree, Constraint::none);
    check("mass matrix P" + std::to_string(degree) + " symmetric positive definite", [&] {
      const auto s = spectrum(assemble_mass(*full));
      return std::pair{spsd_ok(s, 0), describe(s)};
    });
    check("stiffness matrix P" + std::to_string(degree) + " SPSD with constant kernel", [&] {
      const auto s = spectrum(assemble_stiffness(*full, 1.0));
      return std::pair{spsd_ok(s, 1), describe(s)};
    });
    const int expected = degree == 1 ? 1 : mesh->num_vertices();
    check("stabilization s0 for k=" + std::to_string(degree) + " SPSD, kernel dimension " + std::to_string(expected), [&] {
      const auto s = spectrum(assemble_stabilization(*full, degree));
      return std::pair{spsd_ok(s, expected), describe(s)};
    });
  }

  for (const auto& [k, l, d0] : {std::tuple{2, 1, 0.0}, std::tuple{2, 2, 1e-2}, std::tuple{1, 1, 1e-1}}) {
    SchemeParams p;
    p.k = k;
    p.l = l;
    p.delta0 = d0;
    p.dt = 1.0 / 9.0;
    const Scheme scheme(mesh, p);
    const std::string tag = "Scheme(" + std::to_string(k) + "," + std::to_string(l) + ")";
    check(tag + " stage matrices: mass and momentum SPD, pressure SPSD with constant kernel", [&] {
      const auto s1 = spectrum(scheme.stage1_matrix());
      const auto s2 = spectrum(scheme.stage2_matrix());
      const auto s3 = spectrum(scheme.stage3_matrix());
      return std::pair{spsd_ok(s1, 0) && spsd_ok(s2, 0) && spsd_ok(s3, 1),
                       describe(s1) + "; " + describe(s2) + "; " + describe(s3)};
    });
  }

  check("partition of unity and zero gradient sum (P1, P2)", [&] {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int degree : {1, 2}) {
      const auto space = build_space(mesh, degree, Constraint::none);
      for (int t = 0; t < mesh->num_triangles(); ++t)
        for (int trial = 0; trial < 5; ++trial) {
          double a = u(rng), b = u(rng);
          if (a + b > 1.0) a = 1.0 - a, b = 1.0 - b;
          const auto e = space->eval_basis(t, {1.0 - a - b, a, b});
          double sum = 0.0;
          Point2 g{};
          for (int i = 0; i < e.count; ++i) sum += e.values[i], g = g + e.grads[i];
          worst = std::max({worst, std::abs(sum - 1.0), std::abs(g.x), std::abs(g.y)});
        }
    }
    return std::pair{worst <= 1e-12, "max deviation " + std::to_string(worst)};
  });

  check("quadrature moments exact up to the declared degree", [&] {
    // integral over the reference triangle of x^a y^b is a! b! / (a + b + 2)!
    auto exact = [](int a, int b) { return std::tgamma(a + 1) * std::tgamma(b + 1) / std::tgamma(a + b + 3); };
    double worst = 0.0;
    std::vector<QuadratureRule> rules{dunavant_degree1(), dunavant_degree2(), dunavant_degree4(),
                                      dunavant_degree5(), dunavant_degree9(), collapsed_gauss(11),
                                      collapsed_gauss(15)};
    for (const auto& r : rules)
      for (int a = 0; a <= r.degree_exact; ++a)
        for (int b = 0; a + b <= r.degree_exact; ++b) {
          double q = 0.0;
          for (std::size_t i = 0; i < r.size(); ++i)
            q += 0.5 * r.weights[i] * std::pow(r.points[i][1], a) * std::pow(r.points[i][2], b);
          worst = std::max(worst, std::abs(q - exact(a, b)) / exact(a, b));
        }
    return std::pair{worst <= 1e-12, "max relative moment error " + std::to_string(worst)};
  });

  check("deflated CG: zero-mean solution of the singular pressure system", [&] {
    SchemeParams p;
    p.k = 2;
    p.l = 2;
    p.delta0 = 1e-2;
    const Scheme scheme(std::make_shared<const TriMesh>(build_unit_square_mesh(6)), p);
    const auto& A = scheme.stage3_matrix();
    std::mt19937 rng(11);
    std::normal_distribution<double> g;
    Vector b(A.size());
    for (auto& v : b) v = g(rng);
    const DeflationVector deflate(scheme.pressure_space()->basis_integrals());
    CgOptions opt;
    opt.tol = 1e-10;
    opt.deflate = &deflate;
    const auto r = cg_solve(A, b, opt);
    double mean_b = 0.0;
    for (double v : b) mean_b += v;
    mean_b /= static_cast<double>(b.size());
    Vector res = A * r.x;
    double rn = 0.0, bn = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      rn += std::pow(b[i] - mean_b - res[i], 2);
      bn += std::pow(b[i] - mean_b, 2);
    }
    const double constraint = std::abs(dot(deflate.weights, r.x));
    const double rel = std::sqrt(rn / bn);
    std::ostringstream os;
    os << "|m^T x| = " << constraint << ", compatible residual " << rel;
    return std::pair{constraint <= 1e-12 && rel <= 1e-9, os.str()};
  });

  check("zero data is a fixed point of the scheme", [&] {
    const ZeroProblem zero(1.0);
    double worst = 0.0;
    for (const auto& [k, l, d0] : {std::tuple{2, 1, 0.0}, std::tuple{2, 2, 1e-2}, std::tuple{1, 1, 1e-1}}) {
      SchemeParams p;
      p.k = k;
      p.l = l;
      p.delta0 = d0;
      p.dt = 0.1;
      p.T = 0.3;
      const auto r = run(zero, p, std::make_shared<const TriMesh>(build_unit_square_mesh(4)));
      for (int a = 0; a < 2; ++a)
        for (double v : r.final_state.u_tilde.components[a]) worst = std::max(worst, std::abs(v));
      for (double v : r.final_state.p_now.coeffs) worst = std::max(worst, std::abs(v));
    }
    return std::pair{worst == 0.0, "max |coefficient| " + std::to_string(worst)};
  });

  check("clipping conserves area (pieces sum to each image and to the domain)", [&] {
    const auto m8 = std::make_shared<const TriMesh>(build_unit_square_mesh(8));
    const ManufacturedProblem prob(1.0);
    const auto p1 = build_space(m8, 1, Constraint::none);
    const auto wh = build_linearized_velocity([&](Point2 x, double t) { return prob.w(x, t); }, 0.3, p1);
    const auto map = map_x1(wh, 1.0 / 64.0);
    double worst_cell = 0.0;
    for (int k = 0; k < m8->num_triangles(); ++k) {
      double pieces = 0.0;
      for (const auto& c : clipped_cells(*m8, map, k)) pieces += c.polygon.area();
      const auto& img = map.images[k];
      worst_cell = std::max(worst_cell, std::abs(pieces - signed_area(img[0], img[1], img[2])));
    }
    VectorField zero_field(build_space(m8, 2, Constraint::none));
    const auto ct = integrate_composed_term(zero_field, map);
    std::ostringstream os;
    os << "per-element mismatch " << worst_cell << ", total pieces " << ct.piece_area;
    return std::pair{worst_cell <= 1e-14 && std::abs(ct.piece_area - 1.0) <= 1e-12 &&
                         std::abs(ct.image_area - 1.0) <= 1e-12,
                     os.str()};
  });

  return out;
}

/// Prints one "PASS|FAIL name (detail)" line per property; returns true when all pass.
inline bool report_property_suite(const std::vector<PropertyResult>& results, std::ostream& os) {
  bool all = true;
  for (const auto& r : results) {
    os << (r.passed ? "PASS " : "FAIL ") << r.name << "  (" << r.detail << ")\n";
    all = all && r.passed;
  }
  return all;
}

}  // namespace oseen
