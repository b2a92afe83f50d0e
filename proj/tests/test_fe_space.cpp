#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oseen/fe_space.hpp"

using namespace oseen;

namespace {

std::shared_ptr<const TriMesh> square(int n) { return std::make_shared<const TriMesh>(build_unit_square_mesh(n)); }

double l2_interp_error(int n) {
  const double pi = std::numbers::pi;
  auto f = [pi](Point2 x, double) { return std::pow(std::sin(pi * x.x), 2) * std::sin(2 * pi * x.y); };
  const auto space = build_space(square(n), 2, Constraint::none);
  const auto ih = lagrange_interpolate(space, f, 0.0);
  const auto rule = dunavant_degree9();
  double err = 0.0;
  const auto& m = space->mesh();
  for (int t = 0; t < m.num_triangles(); ++t)
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double d = f(m.map_to_physical(t, rule.points[q]), 0.0) - ih.value(t, rule.points[q]);
      err += rule.weights[q] * m.area(t) * d * d;
    }
  return std::sqrt(err);
}

}  // namespace

TEST(FeSpace, Dimensions) {
  for (int n : {1, 2, 5, 8}) {
    EXPECT_EQ(build_space(square(n), 1, Constraint::none)->dim(), (n + 1) * (n + 1));
    EXPECT_EQ(build_space(square(n), 2, Constraint::none)->dim(), (2 * n + 1) * (2 * n + 1));
  }
}

TEST(FeSpace, N2P1BoundaryDofs) {
  const auto s = build_space(square(2), 1, Constraint::zero_boundary);
  EXPECT_EQ(s->dim(), 9);
  EXPECT_EQ(s->boundary_dofs().size(), 8u);
  EXPECT_EQ(s->num_free(), 1);
}

TEST(FeSpace, N2P2Dimension) { EXPECT_EQ(build_space(square(2), 2, Constraint::none)->dim(), 25); }

TEST(FeSpace, N1HasNoFreeVelocityDofs) {
  const auto s = build_space(square(1), 1, Constraint::zero_boundary);
  EXPECT_EQ(s->num_free(), 0);
}

TEST(FeSpace, UnsupportedDegreeRejected) { EXPECT_THROW(build_space(square(2), 3, Constraint::none), InvalidArgument); }

TEST(FeSpace, BoundaryDofsAreExactlyThoseOnTheBoundary) {
  for (int degree : {1, 2}) {
    const auto s = build_space(square(6), degree, Constraint::zero_boundary);
    const auto& xs = s->dof_coordinates();
    std::size_t count = 0;
    for (int d = 0; d < s->dim(); ++d) {
      const bool on = xs[d].x == 0.0 || xs[d].y == 0.0 || xs[d].x == 1.0 || xs[d].y == 1.0;
      EXPECT_EQ(s->is_boundary_dof(d), on) << "dof " << d;
      count += on;
    }
    EXPECT_EQ(s->boundary_dofs().size(), count);
    EXPECT_EQ(s->num_free(), s->dim() - static_cast<int>(count));
  }
}

TEST(FeSpace, SharedEdgesShareMidpointDofs) {
  const auto s = build_space(square(4), 2, Constraint::none);
  const auto& m = s->mesh();
  // every DOF coordinate seen from any element must agree with the global coordinate table
  for (int t = 0; t < m.num_triangles(); ++t) {
    auto dofs = s->element_dofs(t);
    const auto c = m.corners(t);
    for (int i = 0; i < 3; ++i) {
      EXPECT_EQ(s->dof_coordinates()[dofs[i]], c[i]);
      const Point2 mid = 0.5 * (c[(i + 1) % 3] + c[(i + 2) % 3]);
      EXPECT_NEAR(s->dof_coordinates()[dofs[3 + i]].x, mid.x, 1e-15);
      EXPECT_NEAR(s->dof_coordinates()[dofs[3 + i]].y, mid.y, 1e-15);
    }
  }
}

TEST(FeSpace, NumberingIsDeterministic) {
  const auto mesh = square(5);
  const auto a = build_space(mesh, 2, Constraint::none);
  const auto b = build_space(mesh, 2, Constraint::none);
  for (int t = 0; t < mesh->num_triangles(); ++t) {
    auto da = a->element_dofs(t), db = b->element_dofs(t);
    EXPECT_TRUE(std::equal(da.begin(), da.end(), db.begin()));
  }
}

TEST(FeSpace, NodalBasisProperty) {
  const auto mesh = square(1);
  for (int degree : {1, 2}) {
    const auto s = build_space(mesh, degree, Constraint::none);
    const std::array<std::array<double, 3>, 6> nodes{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 0.5, 0.5}, {0.5, 0, 0.5}, {0.5, 0.5, 0}}};
    for (int i = 0; i < s->local_dofs(); ++i) {
      const auto e = s->eval_basis(0, nodes[i]);
      for (int j = 0; j < e.count; ++j) EXPECT_NEAR(e.values[j], i == j ? 1.0 : 0.0, 1e-15) << degree << ' ' << i << ' ' << j;
    }
  }
}

TEST(FeSpace, PartitionOfUnityAtRandomPoints) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto mesh = square(3);
  for (int degree : {1, 2}) {
    const auto s = build_space(mesh, degree, Constraint::none);
    for (int trial = 0; trial < 50; ++trial) {
      double a = u(rng), b = u(rng);
      if (a + b > 1.0) a = 1.0 - a, b = 1.0 - b;
      const int t = trial % mesh->num_triangles();
      const auto e = s->eval_basis(t, {1.0 - a - b, a, b});
      double sum = 0.0;
      Point2 g{};
      for (int i = 0; i < e.count; ++i) sum += e.values[i], g = g + e.grads[i];
      EXPECT_NEAR(sum, 1.0, 1e-14);
      EXPECT_NEAR(g.x, 0.0, 1e-12);
      EXPECT_NEAR(g.y, 0.0, 1e-12);
    }
  }
}

TEST(FeSpace, InterpolationOfZeroIsZero) {
  const auto s = build_space(square(3), 2, Constraint::none);
  const auto f = lagrange_interpolate(s, [](Point2, double) { return 0.0; }, 0.0);
  for (double c : f.coeffs) EXPECT_EQ(c, 0.0);
}

TEST(FeSpace, P1InterpolantOfXIsTheXCoordinate) {
  const auto s = build_space(square(2), 1, Constraint::none);
  const auto f = lagrange_interpolate(s, [](Point2 x, double) { return x.x; }, 0.0);
  for (int d = 0; d < s->dim(); ++d) EXPECT_EQ(f.coeffs[d], s->dof_coordinates()[d].x);
}

TEST(FeSpace, MonomialReproduction) {
  const auto mesh = square(4);
  const auto rule = dunavant_degree9();
  for (int degree : {1, 2}) {
    const auto s = build_space(mesh, degree, Constraint::none);
    for (int a = 0; a <= degree; ++a)
      for (int b = 0; a + b <= degree; ++b) {
        auto mono = [a, b](Point2 x, double) { return std::pow(x.x, a) * std::pow(x.y, b); };
        const auto ih = lagrange_interpolate(s, mono, 0.0);
        double worst = 0.0;
        for (int t = 0; t < mesh->num_triangles(); ++t)
          for (const auto& l : rule.points)
            worst = std::max(worst, std::abs(ih.value(t, l) - mono(mesh->map_to_physical(t, l), 0.0)));
        EXPECT_LT(worst, 1e-12) << "degree " << degree << " monomial x^" << a << " y^" << b;
      }
  }
}

TEST(FeSpace, GradientOfInterpolatedQuadratic) {
  const auto mesh = square(3);
  const auto s = build_space(mesh, 2, Constraint::none);
  const auto ih = lagrange_interpolate(s, [](Point2 x, double) { return x.x * x.y + 2 * x.y * x.y; }, 0.0);
  const auto g = ih.gradient(5, {0.2, 0.3, 0.5});
  const Point2 x = mesh->map_to_physical(5, {0.2, 0.3, 0.5});
  EXPECT_NEAR(g.x, x.y, 1e-12);
  EXPECT_NEAR(g.y, x.x + 4 * x.y, 1e-12);
}

TEST(FeSpace, P2InterpolationConvergesAtOrderThree) {
  const double e4 = l2_interp_error(4), e8 = l2_interp_error(8), e16 = l2_interp_error(16);
  const double r1 = std::log2(e4 / e8), r2 = std::log2(e8 / e16);
  EXPECT_GE(r1, 2.6);
  EXPECT_LE(r1, 3.4);
  EXPECT_GE(r2, 2.6);
  EXPECT_LE(r2, 3.4);
}

TEST(FeSpace, ZeroMeanInterpolationHasZeroIntegral) {
  const auto s = build_space(square(5), 2, Constraint::zero_mean);
  const auto p = lagrange_interpolate(s, [](Point2 x, double) { return 3.0 + x.x * x.x - std::cos(x.y); }, 0.0);
  EXPECT_NEAR(p.integral(), 0.0, 1e-14);
}

TEST(FeSpace, BasisIntegralsSumToArea) {
  for (int degree : {1, 2}) {
    const auto s = build_space(square(4), degree, Constraint::none);
    double sum = 0.0;
    for (double m : s->basis_integrals()) sum += m;
    EXPECT_NEAR(sum, 1.0, 1e-14);
  }
}

TEST(FeSpace, NonFiniteInterpolationNamesTheDof) {
  const auto s = build_space(square(2), 1, Constraint::none);
  try {
    lagrange_interpolate(s, [](Point2 x, double) { return x.x > 0.9 ? std::nan("") : 0.0; }, 0.0);
    FAIL() << "expected Divergence";
  } catch (const Divergence& e) {
    EXPECT_NE(std::string(e.what()).find("DOF"), std::string::npos);
  }
}
