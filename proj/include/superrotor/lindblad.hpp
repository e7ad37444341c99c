#pragma once

// Truncated rotational density matrices and their propagation under
//   d rho/dt = -i [H + H_g, rho] + D rho,
// with H = sum_j E_j Pi_j and every generator block-diagonal in j.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "superrotor/mathkit.hpp"
#include "superrotor/parallel.hpp"
#include "superrotor/params.hpp"
#include "superrotor/rates.hpp"
#include "superrotor/scattering.hpp"

namespace superrotor {

/// Blocks j = j_min..j_max, each of size 2j+1, rows ordered m = -j..j.
struct BasisLayout {
  int j_min{};
  int j_max{};
  std::vector<int> offsets;
  int dim{};

  static BasisLayout make(int j_min, int j_max)
  {
    if (j_min < 0 || j_max < j_min) throw std::invalid_argument("BasisLayout: need 0 <= j_min <= j_max");
    BasisLayout l;
    l.j_min = j_min;
    l.j_max = j_max;
    for (int j = j_min; j <= j_max; ++j) {
      l.offsets.push_back(l.dim);
      l.dim += 2 * j + 1;
    }
    return l;
  }

  [[nodiscard]] int blocks() const { return j_max - j_min + 1; }
  [[nodiscard]] bool contains(int j) const { return j >= j_min && j <= j_max; }
  [[nodiscard]] int j_of(int block) const { return j_min + block; }
  [[nodiscard]] int offset(int j) const
  {
    if (!contains(j)) {
      throw std::out_of_range("j = " + std::to_string(j) + " outside basis [" + std::to_string(j_min) +
                              ", " + std::to_string(j_max) + "]");
    }
    return offsets[static_cast<std::size_t>(j - j_min)];
  }
  [[nodiscard]] int index(int j, int m) const
  {
    if (m < -j || m > j) throw std::out_of_range("m outside [-j, j]");
    return offset(j) + m + j;
  }
  bool operator==(const BasisLayout& o) const { return j_min == o.j_min && j_max == o.j_max; }
};

struct RotorState {
  BasisLayout layout;
  MatrixXcd matrix;
  double time{};

  [[nodiscard]] double trace() const { return matrix.trace().real(); }
  [[nodiscard]] double purity() const { return (matrix * matrix).trace().real(); }
  [[nodiscard]] double hermiticity_error() const
  {
    return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
  }
  [[nodiscard]] double min_eigenvalue() const
  {
    const MatrixXcd h = 0.5 * (matrix + matrix.adjoint());
    Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(h, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff();
  }
  [[nodiscard]] double block_population(int j) const
  {
    const int o = layout.offset(j);
    return matrix.block(o, o, 2 * j + 1, 2 * j + 1).trace().real();
  }
  /// <jj| rho |j'j'>
  [[nodiscard]] cplx coherence(int j, int j_prime) const
  {
    return matrix(layout.index(j, j), layout.index(j_prime, j_prime));
  }
};

/// sum_{j,j'} c_j conj(c_j') |jj><j'j'|
inline RotorState centrifuge_state(const BasisLayout& layout, const std::map<int, cplx>& coeffs)
{
  double norm = 0.0;
  for (const auto& [j, c] : coeffs) {
    if (!layout.contains(j)) throw std::out_of_range("centrifuge_state: j = " + std::to_string(j) + " outside basis");
    norm += std::norm(c);
  }
  if (std::abs(norm - 1.0) > 1e-10) throw std::invalid_argument("centrifuge_state: coefficients not normalized");
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(layout.dim);
  for (const auto& [j, c] : coeffs) psi(layout.index(j, j)) = c;
  return {layout, psi * psi.adjoint(), 0.0};
}

/// sum_j p_j/(2j+1) sum_m |jm><jm|
inline RotorState isotropic_state(const BasisLayout& layout, const std::map<int, double>& populations)
{
  double total = 0.0;
  for (const auto& [j, p] : populations) {
    if (!layout.contains(j)) throw std::out_of_range("isotropic_state: j = " + std::to_string(j) + " outside basis");
    if (p < 0.0) throw std::invalid_argument("isotropic_state: negative population");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-10) throw std::invalid_argument("isotropic_state: populations not normalized");
  MatrixXcd rho = MatrixXcd::Zero(layout.dim, layout.dim);
  for (const auto& [j, p] : populations) {
    const int o = layout.offset(j);
    for (int i = 0; i < 2 * j + 1; ++i) rho(o + i, o + i) = p / (2.0 * j + 1.0);
  }
  return {layout, rho, 0.0};
}

/// Illustrative centrifuge output: real Gaussian amplitudes over the j of the
/// same parity as `center`, c_j ~ exp(-(j - center)^2 / (4 width^2)).
inline RotorState gaussian_centrifuge_state(const BasisLayout& layout, int center, double width)
{
  if (!(width > 0.0)) throw std::invalid_argument("gaussian state: width must be positive");
  std::map<int, cplx> c;
  double norm = 0.0;
  for (int j = layout.j_min; j <= layout.j_max; ++j) {
    if ((j - center) % 2 != 0) continue;
    const double a = std::exp(-(j - center) * (j - center) / (4.0 * width * width));
    c[j] = a;
    norm += a * a;
  }
  if (c.empty() || norm == 0.0) throw std::invalid_argument("gaussian state: no level of matching parity in basis");
  for (auto& [j, v] : c) v /= std::sqrt(norm);
  return centrifuge_state(layout, c);
}

// ---------------------------------------------------------------------------
// Dissipator

struct DissipatorSet {
  BasisLayout layout;
  std::vector<double> weights;
  std::vector<std::vector<MatrixXcd>> jumps;  // jumps[k][block]
  std::vector<MatrixXcd> decay;               // sum_k w_k L_k^dag L_k per block
  int quad_order_q{};
  int quad_order_sphere{};
  std::string backend;
  std::string kappa_mode;
  bool compressed{};
  bool converged = true;
  double convergence_change{};

  [[nodiscard]] std::size_t size() const { return weights.size(); }
  [[nodiscard]] bool empty() const { return weights.empty(); }

  /// max_k w_k |L_k|_max^2: the scale of individual jump contributions.
  [[nodiscard]] double jump_scale() const
  {
    double s = 0.0;
    for (std::size_t k = 0; k < size(); ++k) {
      double m = 0.0;
      for (const auto& b : jumps[k]) m = std::max(m, b.cwiseAbs().maxCoeff());
      s = std::max(s, weights[k] * m * m);
    }
    return s;
  }

  [[nodiscard]] MatrixXcd dense(std::size_t k) const
  {
    MatrixXcd out = MatrixXcd::Zero(layout.dim, layout.dim);
    for (int b = 0; b < layout.blocks(); ++b) {
      const int d = 2 * layout.j_of(b) + 1;
      out.block(layout.offsets[b], layout.offsets[b], d, d) = jumps[k][b];
    }
    return out;
  }

  void finalize()
  {
    decay.assign(static_cast<std::size_t>(layout.blocks()), MatrixXcd());
    for (int b = 0; b < layout.blocks(); ++b) {
      const int d = 2 * layout.j_of(b) + 1;
      MatrixXcd k = MatrixXcd::Zero(d, d);
      for (std::size_t i = 0; i < size(); ++i) k += weights[i] * jumps[i][b].adjoint() * jumps[i][b];
      decay[b] = k;
    }
  }
};

struct DissipatorOptions {
  AmplitudeBackend backend = AmplitudeBackend::linearized;
  KappaMode kappa = KappaMode::exact;
  int quad_order_q = 0;       // 0: numerics value
  int quad_order_sphere = 0;  // 0: numerics value
  bool compress = true;
  bool check_convergence = true;
  double convergence_tol = 1e-3;

  static DissipatorOptions from(const SystemSpec& spec)
  {
    DissipatorOptions o;
    o.backend = spec.numerics.amplitude_backend;
    o.kappa = spec.numerics.kappa_mode;
    return o;
  }
};

inline constexpr int min_dissipator_order_q = 24;
inline constexpr int min_dissipator_order_sphere = 26;

/// Lindblad sum for block-diagonal jumps.
inline MatrixXcd apply_dissipator(const DissipatorSet& d, const MatrixXcd& rho)
{
  const BasisLayout& l = d.layout;
  if (rho.rows() != l.dim || rho.cols() != l.dim) {
    throw std::invalid_argument("apply_dissipator: state does not match dissipator layout");
  }
  MatrixXcd out = MatrixXcd::Zero(l.dim, l.dim);
  if (d.empty()) return out;
  const int nb = l.blocks();
  auto row = [&](std::size_t a_idx) {
    const int a = static_cast<int>(a_idx);
    const int da = 2 * l.j_of(a) + 1;
    for (int b = 0; b < nb; ++b) {
      const int db = 2 * l.j_of(b) + 1;
      const auto r = rho.block(l.offsets[a], l.offsets[b], da, db);
      MatrixXcd acc = -0.5 * (d.decay[a] * r + r * d.decay[b]);
      for (std::size_t k = 0; k < d.size(); ++k) {
        acc.noalias() += d.weights[k] * (d.jumps[k][a] * r * d.jumps[k][b].adjoint());
      }
      out.block(l.offsets[a], l.offsets[b], da, db) = acc;
    }
  };
  if (l.dim >= 200) {
    parallel_for(static_cast<std::size_t>(nb), row);
  } else {
    for (int a = 0; a < nb; ++a) row(static_cast<std::size_t>(a));
  }
  return out;
}

inline MatrixXcd apply_dissipator(const DissipatorSet& d, const RotorState& rho)
{
  if (!(rho.layout == d.layout)) throw std::invalid_argument("apply_dissipator: layout mismatch");
  return apply_dissipator(d, rho.matrix);
}

namespace detail {

/// Fixed-seed random density matrix used as a probe for convergence checks.
inline MatrixXcd probe_state(int dim)
{
  std::mt19937_64 gen(20240611);
  std::normal_distribution<double> g;
  MatrixXcd a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int k = 0; k < dim; ++k) a(i, k) = cplx(g(gen), g(gen));
  MatrixXcd rho = a * a.adjoint();
  return rho / rho.trace().real();
}

inline DissipatorSet build_dissipator_at(const SystemSpec& spec, const BasisLayout& layout,
                                         const DissipatorOptions& opt, int order_q, int order_sphere)
{
  const double q_moment = thermal_moment(spec, order_q, 3, [&](double q) {
    return std::norm(forward_prefactor(q, spec));
  });
  const double base = 2.0 * std::numbers::pi * spec.thermal.density / spec.thermal.reduced_mass * q_moment;
  const QuadratureRule sphere = make_rule(QuadDomain::sphere, order_sphere);
  const int nb = layout.blocks();
  const std::size_t nk = sphere.size();

  ForwardOptions fo;
  fo.kappa = opt.kappa;
  fo.circle_order = spec.numerics.quad_order_circle;
  // Profiles minus the common isotropic part 2 pi 1. For hermitian jumps a real
  // multiple of the identity drops out of the Lindblad generator exactly.
  std::vector<std::vector<MatrixXcd>> prof(nk, std::vector<MatrixXcd>(static_cast<std::size_t>(nb)));
  parallel_for(nk, [&](std::size_t k) {
    const Vector3d n = to_vector(sphere.directions[k]);
    for (int b = 0; b < nb; ++b) {
      const int j = layout.j_of(b);
      MatrixXcd p = forward_profile(j, n, spec, opt.backend, fo);
      p.diagonal().array() -= 2.0 * std::numbers::pi;
      prof[k][b] = std::move(p);
    }
  });

  DissipatorSet set;
  set.layout = layout;
  set.quad_order_q = order_q;
  set.quad_order_sphere = order_sphere;
  set.backend = to_string(opt.backend);
  set.kappa_mode = to_string(opt.kappa);
  set.compressed = opt.compress;

  if (!opt.compress) {
    for (std::size_t k = 0; k < nk; ++k) {
      set.weights.push_back(base * sphere.weights[k]);
      set.jumps.push_back(std::move(prof[k]));
    }
  } else {
    // Columns sqrt(w_k) vec(L_k); G = A^dag A = V Lambda V^dag; the combinations
    // A V_r / sqrt(Lambda_r) with weights Lambda_r induce the same generator.
    Eigen::Index len = 0;
    for (int b = 0; b < nb; ++b) len += static_cast<Eigen::Index>(prof[0][b].size());
    MatrixXcd A(len, static_cast<Eigen::Index>(nk));
    for (std::size_t k = 0; k < nk; ++k) {
      Eigen::Index pos = 0;
      const double s = std::sqrt(base * sphere.weights[k]);
      for (int b = 0; b < nb; ++b) {
        const auto n = static_cast<Eigen::Index>(prof[k][b].size());
        A.col(static_cast<Eigen::Index>(k)).segment(pos, n) = s * prof[k][b].reshaped();
        pos += n;
      }
    }
    const MatrixXcd G = A.adjoint() * A;
    Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(G);
    const Eigen::VectorXd& lam = eig.eigenvalues();
    const double top = lam.size() > 0 ? lam.maxCoeff() : 0.0;
    for (Eigen::Index r = lam.size() - 1; r >= 0; --r) {
      if (!(top > 0.0) || lam(r) <= 1e-15 * top) continue;
      const Eigen::VectorXcd v = A * eig.eigenvectors().col(r) / std::sqrt(lam(r));
      std::vector<MatrixXcd> blocks(static_cast<std::size_t>(nb));
      Eigen::Index pos = 0;
      for (int b = 0; b < nb; ++b) {
        const int d = 2 * layout.j_of(b) + 1;
        blocks[b] = v.segment(pos, d * d).reshaped(d, d);
        pos += d * d;
      }
      set.weights.push_back(lam(r));
      set.jumps.push_back(std::move(blocks));
    }
  }
  set.finalize();
  return set;
}

}  // namespace detail

/// Jumps L_{n'} = F(n') - 2 pi 1 (direct sum over blocks) with weights
/// 2 pi (n_g/mu) w_{n'} \int dq q^3 nu_th |c_0(q)|^2.
inline DissipatorSet build_dissipator(const SystemSpec& spec, const BasisLayout& layout,
                                      const DissipatorOptions& opt)
{
  const int oq = opt.quad_order_q > 0 ? opt.quad_order_q : spec.numerics.quad_order_q;
  const int os = opt.quad_order_sphere > 0 ? opt.quad_order_sphere : spec.numerics.quad_order_sphere;
  if (oq < min_dissipator_order_q || os < min_dissipator_order_sphere) {
    throw std::invalid_argument("build_dissipator: quadrature orders below minimum (q >= 24, sphere >= 26)");
  }
  DissipatorSet set = detail::build_dissipator_at(spec, layout, opt, oq, os);
  if (opt.check_convergence) {
    const MatrixXcd probe = detail::probe_state(layout.dim);
    const MatrixXcd d0 = apply_dissipator(set, probe);
    const double scale = d0.norm();
    double change = 0.0;
    for (auto [q2, s2] : {std::pair{2 * oq, os}, std::pair{oq, 2 * os}}) {
      const DissipatorSet fine = detail::build_dissipator_at(spec, layout, opt, q2, s2);
      const double diff = (apply_dissipator(fine, probe) - d0).norm();
      change = std::max(change, scale > 0.0 ? diff / scale : diff);
    }
    set.convergence_change = change;
    set.converged = change <= opt.convergence_tol || scale == 0.0;
  }
  return set;
}

inline DissipatorSet build_dissipator(const SystemSpec& spec, const BasisLayout& layout)
{
  return build_dissipator(spec, layout, DissipatorOptions::from(spec));
}

// ---------------------------------------------------------------------------
// Master equation and propagation

struct MasterEquation {
  BasisLayout layout;
  std::vector<MatrixXcd> hamiltonian;  // per block: E_j 1 + H_g
  DissipatorSet dissipator;
  bool shift_converged = true;

  /// Largest coherent frequency |Delta| between any two levels.
  [[nodiscard]] double max_frequency() const
  {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& h : hamiltonian) {
      Eigen::SelfAdjointEigenSolver<MatrixXcd> eig(h, Eigen::EigenvaluesOnly);
      lo = std::min(lo, eig.eigenvalues().minCoeff());
      hi = std::max(hi, eig.eigenvalues().maxCoeff());
    }
    return hi - lo;
  }

  [[nodiscard]] MatrixXcd rhs(const MatrixXcd& rho) const
  {
    MatrixXcd out = apply_dissipator(dissipator, rho);
    const int nb = layout.blocks();
    for (int a = 0; a < nb; ++a) {
      const int da = 2 * layout.j_of(a) + 1;
      for (int b = 0; b < nb; ++b) {
        const int db = 2 * layout.j_of(b) + 1;
        const auto r = rho.block(layout.offsets[a], layout.offsets[b], da, db);
        out.block(layout.offsets[a], layout.offsets[b], da, db) -=
            imag_unit * (hamiltonian[a] * r - r * hamiltonian[b]);
      }
    }
    return out;
  }

  [[nodiscard]] MatrixXcd dense_hamiltonian() const
  {
    MatrixXcd h = MatrixXcd::Zero(layout.dim, layout.dim);
    for (int b = 0; b < layout.blocks(); ++b) {
      const int d = 2 * layout.j_of(b) + 1;
      h.block(layout.offsets[b], layout.offsets[b], d, d) = hamiltonian[b];
    }
    return h;
  }
};

/// Rigid-rotor energies plus (optionally) the gas-induced shift H_g.
inline MasterEquation make_master_equation(const SystemSpec& spec, DissipatorSet dissipator,
                                           bool include_shift = true)
{
  MasterEquation eq;
  eq.layout = dissipator.layout;
  QuadratureOptions qo = QuadratureOptions::from(spec);
  qo.kappa = dissipator.kappa_mode == "half" ? KappaMode::half : KappaMode::exact;
  qo.backend = dissipator.backend == "spectral" ? AmplitudeBackend::spectral : AmplitudeBackend::linearized;
  qo.quad_order_q = dissipator.quad_order_q;
  qo.quad_order_sphere = dissipator.quad_order_sphere;
  for (int b = 0; b < eq.layout.blocks(); ++b) {
    const int j = eq.layout.j_of(b);
    MatrixXcd h = spec.molecule.rotational_energy(j) * MatrixXcd::Identity(2 * j + 1, 2 * j + 1);
    if (include_shift) {
      const EnergyShift s = energy_shift_matrix(j, spec, qo);
      h += s.matrix;
      eq.shift_converged = eq.shift_converged && s.converged;
    }
    eq.hamiltonian.push_back(std::move(h));
  }
  eq.dissipator = std::move(dissipator);
  return eq;
}

/// Free rotor without gas: unitary evolution only.
inline MasterEquation make_free_equation(const SystemSpec& spec, const BasisLayout& layout)
{
  DissipatorSet empty;
  empty.layout = layout;
  empty.finalize();
  MasterEquation eq;
  eq.layout = layout;
  for (int b = 0; b < layout.blocks(); ++b) {
    const int j = layout.j_of(b);
    eq.hamiltonian.push_back(spec.molecule.rotational_energy(j) *
                             MatrixXcd::Identity(2 * j + 1, 2 * j + 1));
  }
  eq.dissipator = std::move(empty);
  return eq;
}

class StepSizeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DriftError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PropagateOptions {
  double tol_trace = 1e-8;
  double tol_hermiticity = 1e-10;
  int eig_every = 50;
  int sample_every = 1;  // keep every n-th state (initial and final always kept)
  double max_phase_per_step = 0.1;
  /// Called after every step with (step index, state); optional.
  std::function<void(long, const RotorState&)> observer;
};

struct Trajectory {
  std::vector<RotorState> states;
  std::vector<std::pair<double, double>> min_eigenvalues;  // (t, lambda_min)
  double max_trace_drift{};
  double max_hermiticity{};
  long steps{};
};

/// Classical fixed-step RK4.
inline Trajectory propagate(const RotorState& rho0, const MasterEquation& eq, double t_final, double dt,
                            const PropagateOptions& opt = {})
{
  if (!(rho0.layout == eq.layout)) throw std::invalid_argument("propagate: layout mismatch");
  if (!(dt > 0.0) || !(t_final >= 0.0)) throw std::invalid_argument("propagate: need dt > 0 and t_final >= 0");
  const double wmax = eq.max_frequency();
  if (dt * wmax > opt.max_phase_per_step) {
    throw StepSizeError("step-size violation: dt * max|Delta| = " + std::to_string(dt * wmax) +
                        " exceeds " + std::to_string(opt.max_phase_per_step));
  }
  const long n_steps = static_cast<long>(std::ceil(t_final / dt - 1e-9));
  const double h = n_steps > 0 ? t_final / static_cast<double>(n_steps) : dt;
  const double tr0 = rho0.trace();

  Trajectory traj;
  traj.states.push_back(rho0);
  traj.min_eigenvalues.emplace_back(rho0.time, rho0.min_eigenvalue());
  RotorState cur = rho0;
  const int every = std::max(1, opt.sample_every);
  for (long s = 1; s <= n_steps; ++s) {
    const MatrixXcd& r = cur.matrix;
    const MatrixXcd k1 = eq.rhs(r);
    const MatrixXcd k2 = eq.rhs(r + 0.5 * h * k1);
    const MatrixXcd k3 = eq.rhs(r + 0.5 * h * k2);
    const MatrixXcd k4 = eq.rhs(r + h * k3);
    cur.matrix = r + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    cur.time = rho0.time + static_cast<double>(s) * h;

    const double drift = std::abs(cur.trace() - tr0);
    const double herm = cur.hermiticity_error();
    traj.max_trace_drift = std::max(traj.max_trace_drift, drift);
    traj.max_hermiticity = std::max(traj.max_hermiticity, herm);
    if (drift > opt.tol_trace) {
      throw DriftError("trace drift " + std::to_string(drift) + " exceeds tolerance at t = " +
                       std::to_string(cur.time));
    }
    if (herm > opt.tol_hermiticity) {
      throw DriftError("hermiticity drift " + std::to_string(herm) + " exceeds tolerance at t = " +
                       std::to_string(cur.time));
    }
    if (s % opt.eig_every == 0 || s == n_steps) traj.min_eigenvalues.emplace_back(cur.time, cur.min_eigenvalue());
    if (s % every == 0 || s == n_steps) traj.states.push_back(cur);
    if (opt.observer) opt.observer(s, cur);
  }
  traj.steps = n_steps;
  return traj;
}

/// |<jj| rho |j-2, j-2>|^2
inline double alignment_signal(const RotorState& rho, int j)
{
  if (j < 2) throw std::invalid_argument("alignment_signal: j must be >= 2");
  return std::norm(rho.coherence(j, j - 2));
}

struct DecayFit {
  double rate{};
  double residual{};  // rms of the log-linear fit
  double efoldings{};
};

/// Least-squares slope of -log(value) against time.
inline DecayFit extract_decay_rate(const std::vector<std::pair<double, double>>& samples,
                                   double min_efoldings = 1.0)
{
  if (samples.size() < 5) throw std::invalid_argument("extract_decay_rate: need at least 5 samples");
  double st = 0.0;
  double sy = 0.0;
  for (const auto& [t, v] : samples) {
    if (!(v > 0.0)) throw std::invalid_argument("extract_decay_rate: non-positive sample");
    st += t;
    sy += -std::log(v);
  }
  const double n = static_cast<double>(samples.size());
  const double tm = st / n;
  const double ym = sy / n;
  double stt = 0.0;
  double sty = 0.0;
  double t_lo = samples.front().first;
  double t_hi = t_lo;
  for (const auto& [t, v] : samples) {
    stt += (t - tm) * (t - tm);
    sty += (t - tm) * (-std::log(v) - ym);
    t_lo = std::min(t_lo, t);
    t_hi = std::max(t_hi, t);
  }
  if (!(stt > 0.0)) throw std::invalid_argument("extract_decay_rate: samples span no time");
  DecayFit fit;
  fit.rate = sty / stt;
  double ss = 0.0;
  for (const auto& [t, v] : samples) {
    const double e = -std::log(v) - (ym + fit.rate * (t - tm));
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / n);
  fit.efoldings = std::abs(fit.rate) * (t_hi - t_lo);
  if (fit.efoldings <= 1e-12) {
    fit.rate = 0.0;  // no decay
    return fit;
  }
  if (fit.efoldings < min_efoldings) {
    throw std::invalid_argument("extract_decay_rate: insufficient span (" + std::to_string(fit.efoldings) +
                                " e-foldings)");
  }
  return fit;
}

}  // namespace superrotor
