#pragma once

// Decoherence and alignment-decay rates of superrotor coherences.
//
// Two independent routes are provided: the closed form obtained from the
// linearized forward amplitudes, and direct quadrature of the rate integral
// over relative momenta q and incidence directions n' with the forward-peak
// reduction (outgoing-direction integral replaced by 2 pi).

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "superrotor/mathkit.hpp"
#include "superrotor/parallel.hpp"
#include "superrotor/params.hpp"
#include "superrotor/scattering.hpp"

namespace superrotor {

enum class RateMethod { closed_form, quadrature };

inline std::string to_string(RateMethod m)
{
  return m == RateMethod::closed_form ? "closed_form" : "quadrature";
}

struct RateResult {
  int j{};
  int j_prime{};
  double gamma{};
  RateMethod method{};
  double a_coefficient{};
  // quadrature metadata (zero for the closed form)
  int quad_order_q{};
  int quad_order_sphere{};
  std::string backend;
  std::string kappa_mode;
  bool converged = true;
  double convergence_change{};
};

namespace detail {

// Empty m-sums at small j show up as Legendre arguments outside [-1, 1].
inline double legendre2_guarded(int k, double x)
{
  return std::abs(x) <= 1.0 ? assoc_legendre2(k, x) : 0.0;
}

}  // namespace detail

/// Dimensionless rotational-state factor A_{jj'} of the closed-form rate.
inline double a_coefficient(int j, int j_prime)
{
  if (j < 0 || j_prime < 0) throw std::invalid_argument("a_coefficient: negative j");
  auto diag = [](int l) { return assoc_legendre2(0, 2.0 * l / (2.0 * l + 1.0)); };
  auto flips = [](int l) {
    const double d = 2.0 * l + 1.0;
    const double p1 = detail::legendre2_guarded(1, (2.0 * l - 1.0) / d);
    const double p2 = detail::legendre2_guarded(2, (2.0 * l - 2.0) / d);
    return p1 * p1 / 6.0 + p2 * p2 / 24.0;
  };
  const double diff = diag(j) - diag(j_prime);
  return diff * diff + flips(j) + flips(j_prime);
}

/// Gamma(13/5) Gamma(3/5)^2 sqrt(pi) / 10
inline double closed_form_constant()
{
  const double g35 = gamma_real(0.6);
  return gamma_real(2.6) * g35 * g35 * std::sqrt(std::numbers::pi) / 10.0;
}

/// gamma_{jj'} / A_{jj'} for the given system.
inline double closed_form_prefactor(const SystemSpec& spec)
{
  const double mu = spec.thermal.reduced_mass;
  const double qt = spec.thermal.thermal_momentum;
  const double ng = spec.thermal.density;
  const double aniso = spec.molecule.anisotropy_ratio() / 30.0;
  const double group = 3.0 * std::numbers::pi * mu * spec.gas.c6 / (8.0 * qt);
  return closed_form_constant() * ng * qt * qt * qt / mu * aniso * aniso * std::pow(group, 0.8);
}

inline RateResult gamma_closed_form(int j, int j_prime, const SystemSpec& spec)
{
  RateResult r;
  r.j = j;
  r.j_prime = j_prime;
  r.method = RateMethod::closed_form;
  r.a_coefficient = a_coefficient(j, j_prime);
  r.gamma = closed_form_prefactor(spec) * r.a_coefficient;
  return r;
}

struct QuadratureOptions {
  AmplitudeBackend backend = AmplitudeBackend::linearized;
  KappaMode kappa = KappaMode::exact;
  int quad_order_q = 0;       // 0: numerics.quad_order_q
  int quad_order_sphere = 0;  // 0: numerics.quad_order_sphere
  int circle_order = 0;       // 0: numerics.quad_order_circle
  bool check_convergence = true;
  double convergence_tol = 1e-3;

  static QuadratureOptions from(const SystemSpec& spec)
  {
    QuadratureOptions o;
    o.backend = spec.numerics.amplitude_backend;
    o.kappa = spec.numerics.kappa_mode;
    return o;
  }
};

namespace detail {

/// \int_0^inf dq q^power nu_th(q) weight(q) with the half-line Gaussian rule in q/q_th.
template <class Weight>
auto thermal_moment(const SystemSpec& spec, int order, int power, Weight weight)
{
  const QuadratureRule rule = make_rule(QuadDomain::half_line_gaussian, order);
  const double qt = spec.thermal.thermal_momentum;
  const double norm = std::pow(std::numbers::pi, 1.5) * qt * qt * qt;
  decltype(weight(1.0)) sum{};
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const double q = qt * rule.nodes[i];
    sum += rule.weights[i] * qt * std::pow(q, power) / norm * weight(q);
  }
  return sum;
}

/// Forward profiles of blocks j and j' at every direction of the sphere rule.
inline std::vector<std::pair<MatrixXcd, MatrixXcd>> sphere_profiles(int j, int j_prime,
                                                                    const QuadratureRule& sphere,
                                                                    const SystemSpec& spec,
                                                                    const QuadratureOptions& opt)
{
  ForwardOptions fo;
  fo.kappa = opt.kappa;
  fo.circle_order = opt.circle_order > 0 ? opt.circle_order : spec.numerics.quad_order_circle;
  std::vector<std::pair<MatrixXcd, MatrixXcd>> out(sphere.size());
  parallel_for(sphere.size(), [&](std::size_t k) {
    const Vector3d n = to_vector(sphere.directions[k]);
    out[k].first = forward_profile(j, n, spec, opt.backend, fo);
    out[k].second = j_prime == j ? out[k].first : forward_profile(j_prime, n, spec, opt.backend, fo);
  });
  return out;
}

/// |F_jj,jj - F_j'j',j'j'|^2 + sum_{m<j} |F_jm,jj|^2 + sum_{m'<j'} |F_j'm',j'j'|^2
inline double rate_bracket(int j, int j_prime, const MatrixXcd& fj, const MatrixXcd& fjp)
{
  const int top = 2 * j;
  const int top_p = 2 * j_prime;
  double s = std::norm(fj(top, top) - fjp(top_p, top_p));
  for (int i = 0; i < top; ++i) s += std::norm(fj(i, top));
  for (int i = 0; i < top_p; ++i) s += std::norm(fjp(i, top_p));
  return s;
}

inline double gamma_quadrature(int j, int j_prime, const SystemSpec& spec,
                               const QuadratureOptions& opt, int order_q, int order_sphere)
{
  const double q_moment = thermal_moment(spec, order_q, 3, [&](double q) {
    return std::norm(forward_prefactor(q, spec));
  });
  const QuadratureRule sphere = make_rule(QuadDomain::sphere, order_sphere);
  const auto profiles = sphere_profiles(j, j_prime, sphere, spec, opt);
  double angular = 0.0;
  for (std::size_t k = 0; k < sphere.size(); ++k) {
    angular += sphere.weights[k] * rate_bracket(j, j_prime, profiles[k].first, profiles[k].second);
  }
  const double ng = spec.thermal.density;
  const double mu = spec.thermal.reduced_mass;
  return ng / (2.0 * mu) * 2.0 * std::numbers::pi * q_moment * angular;
}

}  // namespace detail

/// Rate integral over q and n' with forward amplitudes from the chosen backend.
inline RateResult gamma_numeric(int j, int j_prime, const SystemSpec& spec,
                                const QuadratureOptions& opt)
{
  if (j < 0 || j_prime < 0) throw std::invalid_argument("gamma_numeric: negative j");
  const int oq = opt.quad_order_q > 0 ? opt.quad_order_q : spec.numerics.quad_order_q;
  const int os = opt.quad_order_sphere > 0 ? opt.quad_order_sphere : spec.numerics.quad_order_sphere;
  RateResult r;
  r.j = j;
  r.j_prime = j_prime;
  r.method = RateMethod::quadrature;
  r.a_coefficient = a_coefficient(j, j_prime);
  r.quad_order_q = oq;
  r.quad_order_sphere = os;
  r.backend = to_string(opt.backend);
  r.kappa_mode = to_string(opt.kappa);
  r.gamma = detail::gamma_quadrature(j, j_prime, spec, opt, oq, os);
  if (opt.check_convergence) {
    const double g_q = detail::gamma_quadrature(j, j_prime, spec, opt, 2 * oq, os);
    const double g_s = detail::gamma_quadrature(j, j_prime, spec, opt, oq, 2 * os);
    const double scale = std::max(std::abs(r.gamma), 1e-300);
    r.convergence_change = std::max(std::abs(g_q - r.gamma), std::abs(g_s - r.gamma)) / scale;
    // Identically vanishing rates (isotropic gas) are converged by definition.
    if (r.gamma == 0.0 && g_q == 0.0 && g_s == 0.0) r.convergence_change = 0.0;
    r.converged = r.convergence_change <= opt.convergence_tol;
  }
  return r;
}

inline RateResult gamma_numeric(int j, int j_prime, const SystemSpec& spec)
{
  return gamma_numeric(j, j_prime, spec, QuadratureOptions::from(spec));
}

/// Gamma_j = 2 gamma_{j, j-2}: decay rate of the |<jj|rho|j-2 j-2>|^2 signal.
inline RateResult signal_decay_rate(int j, const SystemSpec& spec)
{
  if (j < 2) throw std::invalid_argument("signal_decay_rate: j must be >= 2");
  RateResult r = gamma_closed_form(j, j - 2, spec);
  r.gamma *= 2.0;
  return r;
}

struct EnergyShift {
  MatrixXcd matrix;  // hermitian, block j
  bool converged = true;
  double convergence_change{};
};

namespace detail {

inline MatrixXcd energy_shift_at(int j, const SystemSpec& spec, const QuadratureOptions& opt,
                                 int order_q, int order_sphere)
{
  const cplx q_moment = thermal_moment(spec, order_q, 2, [&](double q) {
    return forward_prefactor(q, spec);
  });
  const QuadratureRule sphere = make_rule(QuadDomain::sphere, order_sphere);
  const auto profiles = sphere_profiles(j, j, sphere, spec, opt);
  const int d = 2 * j + 1;
  MatrixXcd avg = MatrixXcd::Zero(d, d);
  for (std::size_t k = 0; k < sphere.size(); ++k) avg += sphere.weights[k] * profiles[k].first;
  const MatrixXcd f = q_moment * avg;
  const MatrixXcd re = 0.5 * (f + f.adjoint());
  const double ng = spec.thermal.density;
  const double mu = spec.thermal.reduced_mass;
  return -2.0 * std::numbers::pi * ng / mu * re;
}

}  // namespace detail

/// <jm|H_g|jm'> = -2 pi hbar^2 (n_g/mu) \int dq q^2 nu_th \int d^2n Re f_jm,jm'(qn, qn)
inline EnergyShift energy_shift_matrix(int j, const SystemSpec& spec, const QuadratureOptions& opt)
{
  if (j < 0) throw std::invalid_argument("energy_shift_matrix: negative j");
  const int oq = opt.quad_order_q > 0 ? opt.quad_order_q : spec.numerics.quad_order_q;
  const int os = opt.quad_order_sphere > 0 ? opt.quad_order_sphere : spec.numerics.quad_order_sphere;
  EnergyShift out;
  out.matrix = detail::energy_shift_at(j, spec, opt, oq, os);
  if (opt.check_convergence) {
    const MatrixXcd hq = detail::energy_shift_at(j, spec, opt, 2 * oq, os);
    const MatrixXcd hs = detail::energy_shift_at(j, spec, opt, oq, 2 * os);
    const double scale = std::max(out.matrix.cwiseAbs().maxCoeff(), 1e-300);
    out.convergence_change = std::max((hq - out.matrix).cwiseAbs().maxCoeff(),
                                      (hs - out.matrix).cwiseAbs().maxCoeff()) /
                             scale;
    out.converged = out.convergence_change <= opt.convergence_tol;
  }
  return out;
}

inline EnergyShift energy_shift_matrix(int j, const SystemSpec& spec)
{
  return energy_shift_matrix(j, spec, QuadratureOptions::from(spec));
}

/// Short-time oscillation frequency of rho_{jj'}: free rotor splitting plus the
/// difference of the gas-induced shifts of |jj> and |j'j'> (hbar = 1).
inline double delta_frequency(int j, int j_prime, const SystemSpec& spec,
                              const QuadratureOptions& opt)
{
  const double free = spec.molecule.rotational_energy(j) - spec.molecule.rotational_energy(j_prime);
  const double hj = energy_shift_matrix(j, spec, opt).matrix(2 * j, 2 * j).real();
  const double hjp = energy_shift_matrix(j_prime, spec, opt).matrix(2 * j_prime, 2 * j_prime).real();
  return free + hj - hjp;
}

inline double delta_frequency(int j, int j_prime, const SystemSpec& spec)
{
  return delta_frequency(j, j_prime, spec, QuadratureOptions::from(spec));
}

struct RateRow {
  int j{};
  int j_prime{};
  double gamma{};
  double gamma_signal{};
  double a_coefficient{};
  RateMethod method{};
  bool converged = true;
};

struct RateTable {
  std::vector<RateRow> rows;
  int peak_j{};                      // j of the largest Gamma_j
  bool monotone_after_peak = true;  // Gamma_j strictly decreasing beyond the peak
  bool converged = true;
};

/// Gamma_j = 2 gamma_{j,j-2} for j in [j_lo, j_hi].
inline RateTable sweep_rates(int j_lo, int j_hi, const SystemSpec& spec, RateMethod method,
                             const QuadratureOptions& opt)
{
  if (j_lo < 2 || j_lo > j_hi) throw std::invalid_argument("sweep_rates: need 2 <= j_lo <= j_hi");
  if (j_lo < spec.numerics.j_min || j_hi > spec.numerics.j_max) {
    throw std::out_of_range("sweep_rates: j range outside basis limits [" +
                            std::to_string(spec.numerics.j_min) + ", " +
                            std::to_string(spec.numerics.j_max) + "]");
  }
  RateTable table;
  table.rows.resize(static_cast<std::size_t>(j_hi - j_lo + 1));
  auto fill = [&](std::size_t i) {
    const int j = j_lo + static_cast<int>(i);
    const RateResult r = method == RateMethod::closed_form ? gamma_closed_form(j, j - 2, spec)
                                                           : gamma_numeric(j, j - 2, spec, opt);
    table.rows[i] = {j, j - 2, r.gamma, 2.0 * r.gamma, r.a_coefficient, method, r.converged};
  };
  // sequential: the sphere loop inside gamma_numeric already fans out
  for (std::size_t i = 0; i < table.rows.size(); ++i) fill(i);
  std::size_t peak = 0;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (table.rows[i].gamma_signal > table.rows[peak].gamma_signal) peak = i;
    table.converged = table.converged && table.rows[i].converged;
  }
  table.peak_j = table.rows[peak].j;
  for (std::size_t i = peak + 1; i < table.rows.size(); ++i) {
    if (!(table.rows[i].gamma_signal < table.rows[i - 1].gamma_signal)) {
      table.monotone_after_peak = false;
    }
  }
  return table;
}

inline RateTable sweep_rates(int j_lo, int j_hi, const SystemSpec& spec, RateMethod method)
{
  return sweep_rates(j_lo, j_hi, spec, method, QuadratureOptions::from(spec));
}

}  // namespace superrotor
