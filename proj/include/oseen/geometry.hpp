#pragma once

#include <array>
#include <cmath>

namespace oseen {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Point2 a, Point2 b) = default;
};

constexpr double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }

/// Signed area of triangle (a, b, c); positive for counter-clockwise order.
constexpr double signed_area(Point2 a, Point2 b, Point2 c) { return 0.5 * cross(b - a, c - a); }

/// Barycentric coordinates of p relative to triangle (a, b, c).
inline std::array<double, 3> barycentric(Point2 a, Point2 b, Point2 c, Point2 p) {
  const double area = signed_area(a, b, c);
  return {signed_area(p, b, c) / area, signed_area(a, p, c) / area, signed_area(a, b, p) / area};
}

/// 2x2 matrix stored row-major: [[a00, a01], [a10, a11]].
struct Mat2 {
  double a00 = 0.0, a01 = 0.0, a10 = 0.0, a11 = 0.0;

  constexpr double det() const { return a00 * a11 - a01 * a10; }
  constexpr Point2 apply(Point2 v) const { return {a00 * v.x + a01 * v.y, a10 * v.x + a11 * v.y}; }
  double frobenius() const { return std::sqrt(a00 * a00 + a01 * a01 + a10 * a10 + a11 * a11); }
};

}  // namespace oseen
