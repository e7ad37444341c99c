#pragma once

#include <numbers>

#include "superrotor/params.hpp"

namespace testing_support {

/// mu = q_th = n_g = 1, C_6 = 8/(3 pi), Delta alpha / alpha_mean = `aniso`.
inline superrotor::SystemSpec n1(superrotor::KappaMode kappa = superrotor::KappaMode::half, double aniso = 30.0,
                                 double inertia = 100.0)
{
  using namespace superrotor;
  MoleculeSpec m = MoleculeSpec::make(2.0, inertia, 1.0, aniso);
  GasSpec g;
  g.mass = 2.0;
  g.temperature = 0.5;
  g.density = 1.0;
  g.c6 = 8.0 / (3.0 * std::numbers::pi);
  NumericsSpec n;
  n.kappa_mode = kappa;
  return make_system(m, g, n);
}

}  // namespace testing_support
