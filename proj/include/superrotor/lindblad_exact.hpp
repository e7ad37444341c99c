#pragma once

// Cross-check propagation through the exponential of the full Liouvillian.
// Cost grows as D^6, so it is restricted to small bases.

#include <string>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "superrotor/lindblad.hpp"

namespace superrotor {

inline constexpr int exact_propagation_max_dim = 60;

/// exp(L t) rho0 with the full Liouvillian (row-major vectorization), D <= 60.
inline std::vector<RotorState> propagate_exact(const RotorState& rho0, const MasterEquation& eq,
                                               const std::vector<double>& times)
{
  const int D = eq.layout.dim;
  if (D > exact_propagation_max_dim) {
    throw std::invalid_argument("propagate_exact: dimension exceeds " + std::to_string(exact_propagation_max_dim));
  }
  if (!(rho0.layout == eq.layout)) throw std::invalid_argument("propagate_exact: layout mismatch");
  // Row-major vec: vec(A X B) = (A kron B^T) vec(X).
  auto kron = [](const MatrixXcd& a, const MatrixXcd& b) {
    MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index k = 0; k < a.cols(); ++k) out.block(i * b.rows(), k * b.cols(), b.rows(), b.cols()) = a(i, k) * b;
    return out;
  };
  const MatrixXcd I = MatrixXcd::Identity(D, D);
  const MatrixXcd H = eq.dense_hamiltonian();
  MatrixXcd L = -imag_unit * (kron(H, I) - kron(I, H.transpose()));
  MatrixXcd K = MatrixXcd::Zero(D, D);
  for (std::size_t k = 0; k < eq.dissipator.size(); ++k) {
    const MatrixXcd J = eq.dissipator.dense(k);
    const double w = eq.dissipator.weights[k];
    L += w * kron(J, J.conjugate());
    K += w * J.adjoint() * J;
  }
  L -= 0.5 * (kron(K, I) + kron(I, K.transpose()));

  Eigen::VectorXcd v0(D * D);
  for (int i = 0; i < D; ++i)
    for (int k = 0; k < D; ++k) v0(i * D + k) = rho0.matrix(i, k);
  std::vector<RotorState> out;
  for (double t : times) {
    const MatrixXcd lt = L * (t - rho0.time);
    const Eigen::VectorXcd v = lt.exp() * v0;
    RotorState s{eq.layout, MatrixXcd(D, D), t};
    for (int i = 0; i < D; ++i)
      for (int k = 0; k < D; ++k) s.matrix(i, k) = v(i * D + k);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace superrotor
