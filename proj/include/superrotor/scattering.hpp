#pragma once

// Anisotropic van der Waals coupling matrices and matrix-valued eikonal
// scattering amplitudes for a rapidly rotating linear molecule.
//
// Within one rotational level j the interaction is the (2j+1)x(2j+1) matrix
// V_j(r) = -C_6/r^6 [1 + B_j]; integrating along a straight trajectory with
// impact parameter b gives the eikonal phase matrix a(q)/b^5 [1 + B_j(n', e_b)]
// with a(q) = 3 pi mu C_6 / (8 hbar q).

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "superrotor/mathkit.hpp"
#include "superrotor/params.hpp"

namespace superrotor {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::Vector3d;

inline constexpr cplx imag_unit{0.0, 1.0};

struct CouplingMatrix {
  int j{};
  Vector3d n_prime;
  Vector3d e_b;
  MatrixXcd entries;
};

/// f_j(q n_out, q n_in): rows and columns indexed by m = -j..j (offset +j).
struct AmplitudeMatrix {
  int j{};
  double q{};
  Vector3d n_in;
  Vector3d n_out;
  MatrixXcd entries;
};

/// sqrt(j(j+1) / ((2j-1)(2j+3))), zero at j = 0.
inline double kappa(int j)
{
  if (j < 0) throw std::invalid_argument("kappa: negative j");
  if (j == 0) return 0.0;
  const double jj = j;
  return std::sqrt(jj * (jj + 1.0) / ((2.0 * jj - 1.0) * (2.0 * jj + 3.0)));
}

/// kappa(j), or its large-j value 1/2 for every block in `half` mode.
inline double kappa(int j, KappaMode mode)
{
  return mode == KappaMode::half ? 0.5 : kappa(j);
}

inline Vector3d to_vector(const Vec3& v) { return {v[0], v[1], v[2]}; }

/// Orthonormal pair (u, v) spanning the plane perpendicular to the unit vector n.
inline std::pair<Vector3d, Vector3d> transverse_basis(const Vector3d& n)
{
  Vector3d seed = Vector3d::UnitX();
  if (std::abs(n.x()) > std::abs(n.y())) seed = Vector3d::UnitY();
  if (std::abs(n.dot(seed)) > std::abs(n.z())) seed = Vector3d::UnitZ();
  const Vector3d u = seed.cross(n).normalized();
  const Vector3d v = n.cross(u);
  return {u, v};
}

namespace detail {

inline cplx raise(const Vector3d& v) { return {v.x(), v.y()}; }   // (e_x + i e_y) . v
inline cplx lower(const Vector3d& v) { return {v.x(), -v.y()}; }  // (e_x - i e_y) . v

/// Fill a bandwidth-2 hermitian matrix from diagonal/±1/±2 callbacks.
template <class Diag, class Band1, class Band2>
MatrixXcd banded(int j, Diag diag, Band1 band1, Band2 band2)
{
  const int d = 2 * j + 1;
  const double dd = d;
  MatrixXcd out = MatrixXcd::Zero(d, d);
  for (int m = -j; m <= j; ++m) {
    const int i = m + j;
    out(i, i) = diag(assoc_legendre2(0, 2.0 * m / dd));
    for (int s : {+1, -1}) {
      if (m + s < -j || m + s > j) continue;
      out(i, i + s) = band1(s, assoc_legendre2(1, (2.0 * m + s) / dd));
    }
    for (int s : {+2, -2}) {
      if (m + s < -j || m + s > j) continue;
      out(i, i + s) = band2(s, assoc_legendre2(2, (2.0 * m + s) / dd));
    }
  }
  return out;
}

}  // namespace detail

/// Entries of B_j(n', e_b) for anisotropy ratio delta_alpha / alpha_mean.
inline MatrixXcd coupling_entries(int j, const Vector3d& n_prime, const Vector3d& e_b,
                                  double aniso_ratio, double kappa_j)
{
  const double pref = kappa_j * aniso_ratio;
  const double ebz = e_b.z();
  const double nz = n_prime.z();
  const double bracket0 = 2.5 * ebz * ebz + 0.5 * nz * nz - 1.0;
  return detail::banded(
      j, [&](double p20) { return cplx(-pref / 3.0 * p20 * bracket0); },
      [&](int s, double p21) {
        const cplx we = s > 0 ? detail::raise(e_b) : detail::lower(e_b);
        const cplx wn = s > 0 ? detail::raise(n_prime) : detail::lower(n_prime);
        return pref / 18.0 * p21 * (5.0 * ebz * we + nz * wn);
      },
      [&](int s, double p22) {
        const cplx we = s > 0 ? detail::raise(e_b) : detail::lower(e_b);
        const cplx wn = s > 0 ? detail::raise(n_prime) : detail::lower(n_prime);
        return -pref / 72.0 * p22 * (5.0 * we * we + wn * wn);
      });
}

inline CouplingMatrix coupling_matrix(int j, const Vector3d& n_prime, const Vector3d& e_b,
                                      const MoleculeSpec& mol, KappaMode mode = KappaMode::exact)
{
  if (j < 0) throw std::invalid_argument("coupling_matrix: negative j");
  if (std::abs(e_b.dot(n_prime)) >= 1e-12) {
    throw std::invalid_argument("coupling_matrix: e_b must be orthogonal to n_prime");
  }
  return {j, n_prime, e_b,
          coupling_entries(j, n_prime, e_b, mol.anisotropy_ratio(), kappa(j, mode))};
}

/// (1/2pi) \oint de_b B_j(n', e_b), assembled from the circle averages
///   <(e_b.e_z)^2> = |n' x e_z|^2 / 2,
///   <(e_b.e_z)(w.e_b)> = -(n'.e_z)(w.n') / 2,
///   <(w.e_b)^2> = -(w.n')^2 / 2,           w = e_x ± i e_y.
inline MatrixXcd circle_average_coupling(int j, const Vector3d& n_prime, const MoleculeSpec& mol,
                                         KappaMode mode = KappaMode::exact)
{
  const double pref = kappa(j, mode) * mol.anisotropy_ratio();
  const double nz = n_prime.z();
  const double p2n = assoc_legendre2(0, std::clamp(nz, -1.0, 1.0));
  return detail::banded(
      j, [&](double p20) { return cplx(pref / 6.0 * p20 * p2n); },
      [&](int s, double p21) {
        const cplx wn = s > 0 ? detail::raise(n_prime) : detail::lower(n_prime);
        return -pref / 12.0 * p21 * nz * wn;
      },
      [&](int s, double p22) {
        const cplx wn = s > 0 ? detail::raise(n_prime) : detail::lower(n_prime);
        return pref / 48.0 * p22 * wn * wn;
      });
}

/// a(q) = 3 pi mu C_6 / (8 hbar q): the phase of the isotropic part at b = 1.
inline double eikonal_strength(double q, const SystemSpec& spec)
{
  return 3.0 * std::numbers::pi * spec.thermal.reduced_mass * spec.gas.c6 / (8.0 * q);
}

/// -(mu / hbar q) \int dz V_j(b + z n') = a(q)/b^5 [1 + B_j(n', e_b)]
inline MatrixXcd phase_matrix(int j, double b, const Vector3d& e_b, const Vector3d& n_prime,
                              double q, const SystemSpec& spec, KappaMode mode = KappaMode::exact)
{
  if (!(b > 0.0)) throw std::invalid_argument("phase_matrix: impact parameter must be positive");
  const MatrixXcd B = coupling_matrix(j, n_prime, e_b, spec.molecule, mode).entries;
  const double scale = eikonal_strength(q, spec) / std::pow(b, 5);
  return scale * (MatrixXcd::Identity(B.rows(), B.cols()) + B);
}

/// q^{3/5} Gamma(3/5) (3 pi mu C_6 / 8 hbar)^{2/5} e^{i 3pi/10} / (4 pi hbar):
/// the only q-dependence of a forward amplitude.
inline cplx forward_prefactor(double q, const SystemSpec& spec)
{
  const double strength = 3.0 * std::numbers::pi * spec.thermal.reduced_mass * spec.gas.c6 / 8.0;
  const double mag = std::pow(q, 0.6) * gamma_real(0.6) * std::pow(strength, 0.4) /
                     (4.0 * std::numbers::pi);
  return mag * std::exp(imag_unit * (0.3 * std::numbers::pi));
}

enum class CircleBackend { analytic, quadrature };

struct ForwardOptions {
  KappaMode kappa = KappaMode::exact;
  CircleBackend circle = CircleBackend::analytic;
  int circle_order = 64;
};

/// \oint de_b [1 + (2/5) B_j(n', e_b)]  (hermitian)
inline MatrixXcd forward_profile_linearized(int j, const Vector3d& n_prime, const SystemSpec& spec,
                                            const ForwardOptions& opt = {})
{
  const int d = 2 * j + 1;
  const double two_pi = 2.0 * std::numbers::pi;
  MatrixXcd avg;
  if (opt.circle == CircleBackend::analytic) {
    avg = circle_average_coupling(j, n_prime, spec.molecule, opt.kappa);
  } else {
    const auto [u, v] = transverse_basis(n_prime);
    const QuadratureRule circle = make_rule(QuadDomain::circle, opt.circle_order);
    const double kj = kappa(j, opt.kappa);
    avg = MatrixXcd::Zero(d, d);
    for (std::size_t k = 0; k < circle.size(); ++k) {
      const double phi = circle.nodes[k];
      const Vector3d e_b = std::cos(phi) * u + std::sin(phi) * v;
      avg += (circle.weights[k] / two_pi) *
             coupling_entries(j, n_prime, e_b, spec.molecule.anisotropy_ratio(), kj);
    }
  }
  return two_pi * (MatrixXcd::Identity(d, d) + 0.4 * avg);
}

/// \oint de_b [1 + B_j(n', e_b)]^{2/5} by circle quadrature of the eigendecomposed power.
inline MatrixXcd forward_profile_spectral(int j, const Vector3d& n_prime, const SystemSpec& spec,
                                          const ForwardOptions& opt = {})
{
  const int d = 2 * j + 1;
  const auto [u, v] = transverse_basis(n_prime);
  const QuadratureRule circle = make_rule(QuadDomain::circle, opt.circle_order);
  const double kj = kappa(j, opt.kappa);
  MatrixXcd sum = MatrixXcd::Zero(d, d);
  Eigen::SelfAdjointEigenSolver<MatrixXcd> eig;
  for (std::size_t k = 0; k < circle.size(); ++k) {
    const double phi = circle.nodes[k];
    const Vector3d e_b = std::cos(phi) * u + std::sin(phi) * v;
    const MatrixXcd M = MatrixXcd::Identity(d, d) +
                        coupling_entries(j, n_prime, e_b, spec.molecule.anisotropy_ratio(), kj);
    eig.compute(M);
    const Eigen::VectorXd& lam = eig.eigenvalues();
    if (lam.minCoeff() <= 0.0) {
      throw std::domain_error("anisotropy too large for fractional-power branch");
    }
    const Eigen::VectorXd powed = lam.array().pow(0.4).matrix();
    sum += circle.weights[k] *
           (eig.eigenvectors() * powed.asDiagonal() * eig.eigenvectors().adjoint());
  }
  return sum;
}

inline MatrixXcd forward_profile(int j, const Vector3d& n_prime, const SystemSpec& spec,
                                 AmplitudeBackend backend, const ForwardOptions& opt = {})
{
  return backend == AmplitudeBackend::linearized ? forward_profile_linearized(j, n_prime, spec, opt)
                                                 : forward_profile_spectral(j, n_prime, spec, opt);
}

inline AmplitudeMatrix forward_amplitude_linearized(int j, double q, const Vector3d& n_prime,
                                                    const SystemSpec& spec,
                                                    const ForwardOptions& opt = {})
{
  if (j < 0) throw std::invalid_argument("forward amplitude: negative j");
  if (!(q > 0.0)) throw std::invalid_argument("forward amplitude: q must be positive");
  return {j, q, n_prime, n_prime,
          forward_prefactor(q, spec) * forward_profile_linearized(j, n_prime, spec, opt)};
}

inline AmplitudeMatrix forward_amplitude_spectral(int j, double q, const Vector3d& n_prime,
                                                  const SystemSpec& spec,
                                                  const ForwardOptions& opt = {})
{
  if (j < 0) throw std::invalid_argument("forward amplitude: negative j");
  if (!(q > 0.0)) throw std::invalid_argument("forward amplitude: q must be positive");
  return {j, q, n_prime, n_prime,
          forward_prefactor(q, spec) * forward_profile_spectral(j, n_prime, spec, opt)};
}

// ---------------------------------------------------------------------------
// Full angular-resolved eikonal amplitude

/// Phase (rad) beyond which the eikonal integrand is replaced by its period average.
inline constexpr double saturation_phase = 50.0;

struct SchiffOptions {
  KappaMode kappa = KappaMode::exact;
  bool check_convergence = true;
  int b_nodes = 0;       // 0: take numerics.b_nodes
  int circle_order = 0;  // 0: take numerics.quad_order_circle
};

struct SchiffResult {
  AmplitudeMatrix amplitude;
  double b_min{};
  double b_max{};
  /// Flux scattered out of the saturated disk b < b_min at large angles
  /// (geometric-optics refraction, pi b_min^2); not contained in `amplitude`.
  double saturated_cross_section{};
  int radial_nodes{};
  int harmonics{};
  bool converged = true;
  double convergence_change{};
};

namespace detail {

struct EikonalGeometry {
  double strength{};  // a(q)
  double lam_min{};   // smallest eigenvalue of 1 + B over the circle grid
  double lam_max{};
  bool isotropic{};
  std::vector<double> phi;
  std::vector<MatrixXcd> vectors;      // eigenvectors per azimuth
  std::vector<Eigen::VectorXd> values;  // eigenvalues of 1 + B per azimuth
};

inline EikonalGeometry eikonal_geometry(int j, double q, const Vector3d& n_in, const Vector3d& u,
                                        const Vector3d& v, const SystemSpec& spec,
                                        KappaMode mode, int n_phi)
{
  EikonalGeometry g;
  g.strength = eikonal_strength(q, spec);
  const int d = 2 * j + 1;
  const double kj = kappa(j, mode);
  g.isotropic = spec.molecule.alpha_aniso == 0.0 || kj == 0.0;
  g.lam_min = 1.0;
  g.lam_max = 1.0;
  if (g.isotropic) return g;
  g.lam_min = std::numeric_limits<double>::infinity();
  g.lam_max = -g.lam_min;
  Eigen::SelfAdjointEigenSolver<MatrixXcd> eig;
  for (int k = 0; k < n_phi; ++k) {
    const double phi = 2.0 * std::numbers::pi * k / n_phi;
    const Vector3d e_b = std::cos(phi) * u + std::sin(phi) * v;
    const MatrixXcd M = MatrixXcd::Identity(d, d) +
                        coupling_entries(j, n_in, e_b, spec.molecule.anisotropy_ratio(), kj);
    eig.compute(M);
    g.phi.push_back(phi);
    g.vectors.push_back(eig.eigenvectors());
    g.values.push_back(eig.eigenvalues());
    g.lam_min = std::min(g.lam_min, eig.eigenvalues().minCoeff());
    g.lam_max = std::max(g.lam_max, eig.eigenvalues().maxCoeff());
  }
  if (g.lam_min <= 0.0) {
    throw std::domain_error("anisotropy too large for fractional-power branch");
  }
  return g;
}

/// Composite 8-point Gauss panels on [lo, hi]: geometric baseline spacing,
/// refined so that no panel spans more than `max_phase` rad of the integrand phase.
template <class PhaseRate>
QuadratureRule radial_panels(double lo, double hi, int base_panels, double max_phase, PhaseRate rate)
{
  const QuadratureRule ref = make_rule(QuadDomain::interval, 8);
  const double ratio = std::pow(hi / lo, 1.0 / base_panels);
  QuadratureRule out;
  out.domain = QuadDomain::interval;
  out.order = 8;
  double b = lo;
  while (b < hi) {
    const double h = std::min(b * (ratio - 1.0), max_phase / rate(b));
    const double next = std::min(b + h, hi);
    const double half = 0.5 * (next - b);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      out.nodes.push_back(b + half * (ref.nodes[i] + 1.0));
      out.weights.push_back(half * ref.weights[i]);
    }
    b = next;
  }
  return out;
}

inline MatrixXcd schiff_integrate(int d, double q, double k, double phi_n, const EikonalGeometry& g,
                                  double b_min, double b_max, int base_panels, double max_phase,
                                  int harmonics, int& nodes_used)
{
  const double a = g.strength;
  const QuadratureRule radial = radial_panels(b_min, b_max, base_panels, max_phase, [&](double b) {
    return k + 5.0 * a * g.lam_max / std::pow(b, 6);
  });
  nodes_used = static_cast<int>(radial.size());
  MatrixXcd acc = MatrixXcd::Zero(d, d);
  const int n_phi = static_cast<int>(g.phi.size());

  if (g.isotropic) {
    cplx s = 0.0;
    for (std::size_t i = 0; i < radial.size(); ++i) {
      const double b = radial.nodes[i];
      const double phase = a / std::pow(b, 5);
      s += radial.weights[i] * b * bessel_j(0, k * b) * (std::exp(imag_unit * phase) - 1.0);
    }
    acc = s * MatrixXcd::Identity(d, d);
  } else {
    // e^{-i k b cos(phi - phi_n)} projected onto the harmonics |m| <= harmonics
    // carried by the azimuthal grid (Jacobi-Anger).
    std::vector<cplx> kernel(n_phi);
    for (std::size_t i = 0; i < radial.size(); ++i) {
      const double b = radial.nodes[i];
      const double scale = a / std::pow(b, 5);
      std::fill(kernel.begin(), kernel.end(), cplx(0.0));
      for (int m = -harmonics; m <= harmonics; ++m) {
        const double jm = (m < 0 && (-m) % 2 == 1 ? -1.0 : 1.0) * bessel_j(std::abs(m), k * b);
        if (jm == 0.0) continue;
        const cplx cm = std::pow(-imag_unit, m) * jm;
        for (int p = 0; p < n_phi; ++p) {
          kernel[p] += cm * std::exp(imag_unit * (m * (phi_n - g.phi[p])));
        }
      }
      for (int p = 0; p < n_phi; ++p) {
        const cplx w = radial.weights[i] * b * kernel[p] * (2.0 * std::numbers::pi / n_phi);
        if (w == 0.0) continue;
        const Eigen::VectorXcd diag =
            ((imag_unit * scale) * g.values[p].cast<cplx>()).array().exp() - 1.0;
        acc += w * (g.vectors[p] * diag.asDiagonal() * g.vectors[p].adjoint());
      }
    }
    acc /= 2.0 * std::numbers::pi;
  }
  // Saturated inner disk: period-averaged integrand is -1.
  const double disk = k > 0.0 ? b_min * bessel_j(1, k * b_min) / k : 0.5 * b_min * b_min;
  // f = -i q/(2 pi) \int d^2b e^{-i q b.n} [...], the 2 pi from the azimuth already applied.
  return -imag_unit * q * (acc - disk * MatrixXcd::Identity(d, d));
}

}  // namespace detail

/// Eikonal (Schiff) amplitude f_j(q n_out, q n_in) by polar quadrature over the
/// impact-parameter plane perpendicular to n_in.
inline SchiffResult schiff_amplitude_full(int j, double q, const Vector3d& n_out, const Vector3d& n_in,
                                          const SystemSpec& spec, const SchiffOptions& opt = {})
{
  if (j < 0) throw std::invalid_argument("schiff_amplitude_full: negative j");
  if (!(q > 0.0)) throw std::invalid_argument("schiff_amplitude_full: q must be positive");
  const int d = 2 * j + 1;
  const int n_phi = opt.circle_order > 0 ? opt.circle_order : spec.numerics.quad_order_circle;
  const int b_nodes = opt.b_nodes > 0 ? opt.b_nodes : spec.numerics.b_nodes;

  const auto [u, v] = transverse_basis(n_in);
  const detail::EikonalGeometry g =
      detail::eikonal_geometry(j, q, n_in, u, v, spec, opt.kappa, n_phi);

  const Vector3d perp = n_out - n_out.dot(n_in) * n_in;
  const double k = q * perp.norm();
  const double phi_n = perp.norm() > 0.0 ? std::atan2(perp.dot(v), perp.dot(u)) : 0.0;
  const int harmonics = (g.isotropic || k == 0.0) ? 0 : n_phi / 2 - 1;

  const double b0 = std::pow(g.strength, 0.2);
  const double b_min = std::pow(g.strength * g.lam_min / saturation_phase, 0.2);
  const double b_max = spec.numerics.b_max * b0;

  SchiffResult res;
  res.b_min = b_min;
  res.b_max = b_max;
  res.saturated_cross_section = std::numbers::pi * b_min * b_min;
  res.harmonics = harmonics;
  const int panels = std::max(1, b_nodes / 8);
  const MatrixXcd f = detail::schiff_integrate(d, q, k, phi_n, g, b_min, b_max, panels,
                                               std::numbers::pi, harmonics, res.radial_nodes);
  res.amplitude = {j, q, n_in, n_out, f};
  if (opt.check_convergence) {
    int nodes2 = 0;
    const MatrixXcd f2 = detail::schiff_integrate(d, q, k, phi_n, g, b_min, b_max, 2 * panels,
                                                  0.5 * std::numbers::pi, harmonics, nodes2);
    const double scale = std::max(f2.cwiseAbs().maxCoeff(), 1e-300);
    res.convergence_change = (f2 - f).cwiseAbs().maxCoeff() / scale;
    res.converged = res.convergence_change <= 0.01;
  }
  return res;
}

}  // namespace superrotor
