#pragma once

// Special functions and quadrature rules shared by the scattering, rate and
// master-equation modules.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace superrotor {

using Vec3 = std::array<double, 3>;

/// Associated Legendre function P_2^k(x) for k in {0, 1, 2}.
///
/// Magnitude convention (no Condon-Shortley phase):
///   P_2^0 = (3x^2 - 1)/2,  P_2^1 = 3x sqrt(1 - x^2),  P_2^2 = 3(1 - x^2).
/// Every physical use squares these values or pairs them within one hermitian
/// matrix, so the phase convention drops out.
inline double assoc_legendre2(int k, double x)
{
  if (!(std::abs(x) <= 1.0)) {
    throw std::domain_error("assoc_legendre2: |x| > 1 (x = " + std::to_string(x) + ")");
  }
  const double s2 = 1.0 - x * x;
  switch (k) {
    case 0: return 0.5 * (3.0 * x * x - 1.0);
    case 1: return 3.0 * x * std::sqrt(s2);
    case 2: return 3.0 * s2;
    default: throw std::invalid_argument("assoc_legendre2: order must be 0, 1 or 2");
  }
}

inline double gamma_real(double x)
{
  if (!(x > 0.0)) {
    throw std::domain_error("gamma_real: argument must be positive");
  }
  return std::tgamma(x);
}

/// Integer-order Bessel function of the first kind.
inline double bessel_j(int m, double x)
{
  switch (m) {
    case 0: return ::j0(x);
    case 1: return ::j1(x);
    default: return ::jn(m, x);
  }
}

enum class QuadDomain { interval, half_line_gaussian, circle, sphere };

inline std::string to_string(QuadDomain d)
{
  switch (d) {
    case QuadDomain::interval: return "interval";
    case QuadDomain::half_line_gaussian: return "half_line_gaussian";
    case QuadDomain::circle: return "circle";
    case QuadDomain::sphere: return "sphere";
  }
  return "unknown";
}

/// Nodes and weights on one of the supported integration domains.
///
///   interval            nodes x in [-1, 1], sum w f(x) ~ int_{-1}^{1} f dx
///   half_line_gaussian  nodes q in [0, cut], sum w f(q) ~ int_0^inf f(q) e^{-q^2} dq
///   circle              nodes phi in [0, 2pi), uniform trapezoid
///   sphere              unit vectors in `directions`, product Gauss(cos theta) x uniform(phi)
///
/// For the sphere `nodes` is empty and `directions` carries the abscissae.
struct QuadratureRule {
  QuadDomain domain{};
  int order{};
  std::vector<double> nodes;
  std::vector<Vec3> directions;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const { return weights.size(); }
};

namespace detail {

inline void legendre_with_derivative(int n, double z, double& pn, double& dpn)
{
  double p0 = 1.0;
  double p1 = z;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  pn = p1;
  dpn = n * (z * p1 - p0) / (z * z - 1.0);
}

// n >= 2
inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w)
{
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double pn = 0.0;
    double dpn = 1.0;
    for (int iter = 0; iter < 100; ++iter) {
      legendre_with_derivative(n, z, pn, dpn);
      const double dz = pn / dpn;
      z -= dz;
      if (std::abs(dz) < 1e-16) {
        break;
      }
    }
    legendre_with_derivative(n, z, pn, dpn);
    const double wi = 2.0 / ((1.0 - z * z) * dpn * dpn);
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = wi;
    w[n - 1 - i] = wi;
  }
  if (n % 2 == 1) {
    x[n / 2] = 0.0;
  }
}

}  // namespace detail

/// Upper end of the mapped half-line rule; e^{-49} q^5 is below double precision.
inline constexpr double half_line_cutoff = 7.0;

/// Number of polar Gauss nodes used for a sphere rule with at least `min_nodes` points.
inline int sphere_polar_count(int min_nodes)
{
  return std::max(2, static_cast<int>(std::ceil(std::sqrt(min_nodes / 2.0))));
}

inline QuadratureRule make_rule(QuadDomain domain, int order)
{
  if (order < 4) {
    throw std::invalid_argument("make_rule: order must be >= 4");
  }
  QuadratureRule rule;
  rule.domain = domain;
  rule.order = order;
  switch (domain) {
    case QuadDomain::interval: {
      detail::gauss_legendre(order, rule.nodes, rule.weights);
      break;
    }
    case QuadDomain::half_line_gaussian: {
      std::vector<double> x;
      std::vector<double> w;
      detail::gauss_legendre(order, x, w);
      const double h = 0.5 * half_line_cutoff;
      rule.nodes.resize(order);
      rule.weights.resize(order);
      for (int i = 0; i < order; ++i) {
        const double q = h * (x[i] + 1.0);
        rule.nodes[i] = q;
        rule.weights[i] = h * w[i] * std::exp(-q * q);
      }
      break;
    }
    case QuadDomain::circle: {
      rule.nodes.resize(order);
      rule.weights.assign(order, 2.0 * std::numbers::pi / order);
      for (int i = 0; i < order; ++i) {
        rule.nodes[i] = 2.0 * std::numbers::pi * i / order;
      }
      break;
    }
    case QuadDomain::sphere: {
      const int n_theta = sphere_polar_count(order);
      const int n_phi = 2 * n_theta;
      std::vector<double> x;
      std::vector<double> w;
      detail::gauss_legendre(n_theta, x, w);
      rule.directions.reserve(static_cast<std::size_t>(n_theta) * n_phi);
      rule.weights.reserve(static_cast<std::size_t>(n_theta) * n_phi);
      for (int i = 0; i < n_theta; ++i) {
        const double ct = x[i];
        const double st = std::sqrt(1.0 - ct * ct);
        for (int k = 0; k < n_phi; ++k) {
          const double phi = 2.0 * std::numbers::pi * k / n_phi;
          rule.directions.push_back({st * std::cos(phi), st * std::sin(phi), ct});
          rule.weights.push_back(w[i] * 2.0 * std::numbers::pi / n_phi);
        }
      }
      break;
    }
  }
  return rule;
}

/// Gauss-Legendre rule of `order` points mapped onto [lo, hi].
inline QuadratureRule make_interval_rule(double lo, double hi, int order)
{
  QuadratureRule rule = make_rule(QuadDomain::interval, order);
  const double h = 0.5 * (hi - lo);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    rule.nodes[i] = lo + h * (rule.nodes[i] + 1.0);
    rule.weights[i] *= h;
  }
  return rule;
}

}  // namespace superrotor
