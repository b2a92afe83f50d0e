#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "oseen/errors.hpp"

namespace oseen {

/// Quadrature rule on a triangle in barycentric coordinates; weights sum to one and are scaled by |K| on use.
struct QuadratureRule {
  int degree_exact = 0;
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

namespace detail {

inline void add_centroid(QuadratureRule& r, double w) {
  r.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  r.weights.push_back(w);
}

inline void add_orbit3(QuadratureRule& r, double a, double w) {
  const double c = 1.0 - 2.0 * a;
  r.points.push_back({a, a, c});
  r.points.push_back({a, c, a});
  r.points.push_back({c, a, a});
  for (int i = 0; i < 3; ++i) r.weights.push_back(w);
}

inline void add_orbit6(QuadratureRule& r, double a, double b, double w) {
  const double c = 1.0 - a - b;
  for (auto p : {std::array{a, b, c}, std::array{a, c, b}, std::array{b, a, c}, std::array{b, c, a},
                 std::array{c, a, b}, std::array{c, b, a}}) {
    r.points.push_back(p);
    r.weights.push_back(w);
  }
}

}  // namespace detail

// Symmetric Dunavant rules (all points interior, positive weights).

inline QuadratureRule dunavant_degree1() {
  QuadratureRule r{1, {}, {}};
  detail::add_centroid(r, 1.0);
  return r;
}

inline QuadratureRule dunavant_degree2() {
  QuadratureRule r{2, {}, {}};
  detail::add_orbit3(r, 1.0 / 6.0, 1.0 / 3.0);
  return r;
}

inline QuadratureRule dunavant_degree4() {
  QuadratureRule r{4, {}, {}};
  detail::add_orbit3(r, 0.44594849091596488631832925388305, 0.22338158967801146569500700843312);
  detail::add_orbit3(r, 0.09157621350977074345957146340220, 0.10995174365532186763832632490021);
  return r;
}

inline QuadratureRule dunavant_degree5() {
  QuadratureRule r{5, {}, {}};
  detail::add_centroid(r, 0.225);
  detail::add_orbit3(r, 0.47014206410511508977044120951345, 0.13239415278850618073764938783315);
  detail::add_orbit3(r, 0.10128650732345633880098736191512, 0.12593918054482715259568394550018);
  return r;
}

/// 19-point degree-9 rule used for every error norm.
inline QuadratureRule dunavant_degree9() {
  QuadratureRule r{9, {}, {}};
  detail::add_centroid(r, 0.09713579628279609890744676309485);
  detail::add_orbit3(r, 0.48968251919873762778370692483619, 0.03133470022713983234393199080984);
  detail::add_orbit3(r, 0.43708959149293663726993036443535, 0.07782754100477543338465495857972);
  detail::add_orbit3(r, 0.18820353561903273024096128046733, 0.07964773892720910288013526957424);
  detail::add_orbit3(r, 0.04472951339445297061024247196780, 0.02557767565869810438673914467637);
  detail::add_orbit6(r, 0.22196298916076569567510252769319, 0.74119859878449802069007987352342,
                     0.04328353937728937728937728937729);
  return r;
}

/// Gauss-Legendre nodes and weights on [0, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre01(int n) {
  std::vector<double> x(n), w(n);
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = 0.5 * (1.0 - z);
    w[i] = 1.0 / ((1.0 - z * z) * dp * dp);  // 2/((1-z^2) p'^2) halved for [0,1]
  }
  return {x, w};
}

/// Collapsed (Duffy) tensor Gauss rule exact to the requested degree; interior points, positive weights.
inline QuadratureRule collapsed_gauss(int degree) {
  const int n = (degree + 3) / 2;  // 2n - 1 >= degree + 1
  auto [x, w] = gauss_legendre01(n);
  QuadratureRule r{degree, {}, {}};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double xi = x[i], eta = (1.0 - x[i]) * x[j];
      r.points.push_back({1.0 - xi - eta, xi, eta});
      r.weights.push_back(2.0 * w[i] * w[j] * (1.0 - x[i]));
    }
  return r;
}

/// Cheapest built-in rule integrating polynomials of the given degree exactly.
inline QuadratureRule rule_for_degree(int degree) {
  if (degree < 0) throw InvalidArgument("rule_for_degree: negative degree");
  if (degree <= 1) return dunavant_degree1();
  if (degree == 2) return dunavant_degree2();
  if (degree <= 4) return dunavant_degree4();
  if (degree == 5) return dunavant_degree5();
  if (degree <= 9) return dunavant_degree9();
  return collapsed_gauss(degree);
}

}  // namespace oseen
