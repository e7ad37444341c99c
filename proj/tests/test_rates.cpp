#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "superrotor/rates.hpp"
#include "support.hpp"

using namespace superrotor;
using testing_support::n1;

namespace {

// \int_0^inf q^p exp(-q^2) dq by the midpoint rule on [0, 12]
double gauss_moment(double p)
{
  const int n = 400000;
  const double h = 12.0 / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double q = (i + 0.5) * h;
    s += std::pow(q, p) * std::exp(-q * q);
  }
  return s * h;
}

}  // namespace

TEST(ClosedForm, Constant)
{
  // Gamma(13/5) Gamma(3/5)^2 sqrt(pi) / 10 from std::tgamma
  const double oracle = std::tgamma(2.6) * std::pow(std::tgamma(0.6), 2) * std::sqrt(std::numbers::pi) / 10.0;
  EXPECT_NEAR(closed_form_constant(), oracle, 1e-14);
  EXPECT_NEAR(closed_form_constant(), 0.5619510287268219, 1e-12);
  EXPECT_NEAR(closed_form_prefactor(n1()), closed_form_constant(), 1e-14);
}

TEST(ClosedForm, AngularCoefficients)
{
  EXPECT_NEAR(a_coefficient(2, 0), 1.5318, 5e-5);
  EXPECT_NEAR(a_coefficient(10, 8), 0.5476053866347759, 1e-13);
  EXPECT_EQ(a_coefficient(0, 0), 0.0);
  for (int j : {1, 3, 7, 40})
    for (int jp : {0, 2, 5}) EXPECT_DOUBLE_EQ(a_coefficient(j, jp), a_coefficient(jp, j));
  EXPECT_THROW(a_coefficient(-1, 2), std::invalid_argument);
}

TEST(ClosedForm, ReferenceRates)
{
  const SystemSpec s = n1();
  EXPECT_NEAR(gamma_closed_form(10, 8, s).gamma, 0.30772741035576134, 1e-13);
  EXPECT_NEAR(signal_decay_rate(10, s).gamma, 0.6154548207115227, 1e-13);
  EXPECT_THROW(signal_decay_rate(1, s), std::invalid_argument);
}

TEST(ClosedForm, LargeJAsymptote)
{
  EXPECT_NEAR(500.0 * a_coefficient(500, 498) / 6.0, 0.99825, 5e-5);
  const SystemSpec s = n1();
  double prev = 0.0;
  for (int j : {50, 100, 200, 500, 1000}) {
    const double x = j * signal_decay_rate(j, s).gamma / (12.0 * closed_form_constant());
    EXPECT_GT(x, prev);
    EXPECT_LT(x, 1.0);
    prev = x;
  }
  EXPECT_NEAR(prev, 1.0, 2e-3);
}

TEST(ClosedForm, ParameterScaling)
{
  const SystemSpec base = n1();
  const double g0 = gamma_closed_form(12, 10, base).gamma;

  SystemSpec hot = base;
  hot.gas.temperature *= 4.0;  // q_th doubles
  hot = make_system(hot.molecule, hot.gas, hot.numerics);
  EXPECT_NEAR(gamma_closed_form(12, 10, hot).gamma / g0, std::pow(2.0, 11.0 / 5.0), 1e-12);

  SystemSpec dense = base;
  dense.gas.density = 3.0;
  dense = make_system(dense.molecule, dense.gas, dense.numerics);
  EXPECT_NEAR(gamma_closed_form(12, 10, dense).gamma / g0, 3.0, 1e-12);

  const SystemSpec weak = n1(KappaMode::half, 15.0);
  EXPECT_NEAR(gamma_closed_form(12, 10, weak).gamma / g0, 0.25, 1e-12);
}

TEST(ClosedForm, SweepShape)
{
  const SystemSpec s = n1();
  const RateTable t = sweep_rates(10, 200, s, RateMethod::closed_form);
  ASSERT_EQ(t.rows.size(), 191u);
  EXPECT_EQ(t.rows.front().j, 10);
  EXPECT_EQ(t.rows.back().j_prime, 198);
  EXPECT_TRUE(t.monotone_after_peak);
  EXPECT_TRUE(t.converged);
  for (const auto& r : t.rows) EXPECT_DOUBLE_EQ(r.gamma_signal, 2.0 * r.gamma);
  const double slope = std::log(t.rows.back().gamma_signal / t.rows[90].gamma_signal) / std::log(200.0 / 100.0);
  EXPECT_NEAR(slope, -1.0, 0.01);
}

TEST(ClosedForm, SweepLimits)
{
  SystemSpec s = n1();
  s.numerics.j_max = 50;
  EXPECT_THROW(sweep_rates(2, 51, s, RateMethod::closed_form), std::out_of_range);
  EXPECT_THROW(sweep_rates(1, 10, s, RateMethod::closed_form), std::invalid_argument);
  EXPECT_THROW(sweep_rates(12, 10, s, RateMethod::closed_form), std::invalid_argument);
  EXPECT_EQ(sweep_rates(2, 50, s, RateMethod::closed_form).rows.size(), 49u);
}

TEST(Quadrature, ThermalMomentMatchesOracle)
{
  const SystemSpec s = n1();
  const double got = detail::thermal_moment(s, 48, 3, [](double q) { return std::pow(q, 1.2); });
  EXPECT_NEAR(got, gauss_moment(4.2) / std::pow(std::numbers::pi, 1.5), 1e-9);
}

TEST(Quadrature, MatchesClosedFormInHalfMode)
{
  const SystemSpec s = n1();
  for (auto [j, jp] : {std::pair{10, 8}, std::pair{4, 2}, std::pair{7, 3}}) {
    const RateResult r = gamma_numeric(j, jp, s);
    EXPECT_TRUE(r.converged) << j;
    EXPECT_NEAR(r.gamma / gamma_closed_form(j, jp, s).gamma, 1.0, 5e-3) << j << ',' << jp;
    EXPECT_EQ(r.method, RateMethod::quadrature);
    EXPECT_EQ(r.backend, "linearized");
    EXPECT_EQ(r.kappa_mode, "half");
  }
}

TEST(Quadrature, ExactKappaApproachesHalfAtLargeJ)
{
  const SystemSpec s = n1(KappaMode::exact);
  const RateResult r = gamma_numeric(25, 23, s);
  EXPECT_NEAR(r.gamma / gamma_closed_form(25, 23, s).gamma, 1.0, 0.01);
}

TEST(Quadrature, VanishesWithoutAnisotropy)
{
  const SystemSpec s = n1(KappaMode::exact, 0.0);
  const RateResult r = gamma_numeric(6, 4, s);
  EXPECT_EQ(r.gamma, 0.0);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(gamma_closed_form(6, 4, s).gamma, 0.0);
}

TEST(EnergyShift, LinearizedShiftIsUniformScalar)
{
  const SystemSpec s = n1();
  // -2 pi (n_g/mu) * 8 pi^2 Re \int dq q^2 nu_th c(q)
  const double c_moment = gauss_moment(2.6) / std::pow(std::numbers::pi, 1.5) * gamma_real(0.6) /
                          (4.0 * std::numbers::pi) * std::cos(0.3 * std::numbers::pi);
  const double oracle = -2.0 * std::numbers::pi * 8.0 * std::numbers::pi * std::numbers::pi * c_moment;
  for (int j : {0, 3, 8}) {
    const EnergyShift h = energy_shift_matrix(j, s);
    EXPECT_TRUE(h.converged);
    const int d = 2 * j + 1;
    EXPECT_LT((h.matrix - h.matrix.adjoint()).cwiseAbs().maxCoeff(), 1e-13);
    EXPECT_LT((h.matrix - oracle * MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff(), 1e-8 * std::abs(oracle));
  }
}

TEST(EnergyShift, DeltaFrequency)
{
  const SystemSpec s = n1();
  EXPECT_NEAR(delta_frequency(10, 8, s), (110.0 - 72.0) / 200.0, 1e-10);
  EXPECT_NEAR(delta_frequency(6, 6, s), 0.0, 1e-14);
  EXPECT_THROW(energy_shift_matrix(-1, s), std::invalid_argument);
}

TEST(EnergyShift, SpectralShiftIsHermitian)
{
  const SystemSpec s = n1(KappaMode::exact, 0.6);
  QuadratureOptions o = QuadratureOptions::from(s);
  o.backend = AmplitudeBackend::spectral;
  o.quad_order_sphere = 50;
  o.check_convergence = false;
  const EnergyShift h = energy_shift_matrix(3, s, o);
  EXPECT_LT((h.matrix - h.matrix.adjoint()).cwiseAbs().maxCoeff(), 1e-13);
}
