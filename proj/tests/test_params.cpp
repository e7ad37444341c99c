#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "superrotor/mathkit.hpp"
#include "superrotor/params.hpp"
#include "support.hpp"

using namespace superrotor;

namespace {

std::string read_file(const std::string& path)
{
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* minimal_normalized = R"({
  "molecule": {"mass": 1.0, "moment_of_inertia": 50.0, "alpha_mean": 1.0, "alpha_aniso": 3.0},
  "gas": {"mass": 1.0, "temperature": 1.0, "density": 1.0, "c6": 1.0}
})";

std::string expect_config_error(const std::string& text)
{
  try {
    (void)load_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  ADD_FAILURE() << "no ConfigError for:\n" << text;
  return {};
}

// Thermal moment <q^p> = \int 4 pi q^{2+p} nu_th(q) dq on a fine uniform grid.
double thermal_moment_oracle(const ThermalContext& ctx, double p)
{
  const double hi = 12.0 * ctx.thermal_momentum;
  const int n = 20000;
  const double h = hi / n;
  double s = 0.0;
  for (int i = 1; i < n; ++i) {
    const double q = i * h;
    s += 4.0 * std::numbers::pi * std::pow(q, 2.0 + p) * nu_th(q, ctx);
  }
  return s * h;
}

}  // namespace

TEST(Config, MinimalNormalizedDefaults)
{
  const SystemSpec s = load_config(minimal_normalized);
  EXPECT_DOUBLE_EQ(s.thermal.reduced_mass, 0.5);
  EXPECT_EQ(s.numerics.quad_order_q, 48);
  EXPECT_EQ(s.numerics.quad_order_sphere, 302);
  EXPECT_EQ(s.numerics.kappa_mode, KappaMode::exact);
  EXPECT_EQ(s.numerics.amplitude_backend, AmplitudeBackend::linearized);
  EXPECT_EQ(s.numerics.unit_system, UnitSystem::normalized);
  EXPECT_NEAR(s.molecule.epsilon, 2.0, 1e-15);
  EXPECT_NEAR(s.thermal.thermal_momentum, 1.0, 1e-15);
}

TEST(Config, ShippedNormalizedReference)
{
  const SystemSpec s = load_config(read_file(std::string(SUPERROTOR_SOURCE_DIR) + "/configs/n1_normalized.json"));
  EXPECT_DOUBLE_EQ(s.thermal.reduced_mass, 1.0);
  EXPECT_DOUBLE_EQ(s.thermal.thermal_momentum, 1.0);
  EXPECT_DOUBLE_EQ(s.thermal.density, 1.0);
  EXPECT_EQ(s.numerics.kappa_mode, KappaMode::half);
  EXPECT_NEAR(s.molecule.anisotropy_ratio(), 30.0, 1e-15);
}

TEST(Config, ShippedSiExampleConverts)
{
  const SystemSpec s = load_config(read_file(std::string(SUPERROTOR_SOURCE_DIR) + "/configs/n2_argon_si.json"));
  EXPECT_EQ(s.numerics.unit_system, UnitSystem::si);
  EXPECT_NEAR(s.thermal.reduced_mass, 1.0, 1e-12);
  EXPECT_NEAR(s.thermal.thermal_momentum, 1.0, 1e-12);
  // n_g = p / (k_B T)
  const double n_si = 101325.0 / (constants::k_boltzmann_si * 295.0);
  EXPECT_NEAR(s.thermal.density / std::pow(s.scales.length, 3), n_si, 1e-9 * n_si);
  // I = hbar^2 / (2 B)
  const double inertia_si = std::pow(constants::hbar_si, 2) / (2.0 * 3.9564e-23);
  EXPECT_NEAR(s.molecule.moment_of_inertia * s.scales.mass * s.scales.length * s.scales.length, inertia_si,
              1e-9 * inertia_si);
}

TEST(Config, UnknownKeysAreNamed)
{
  std::string bad = R"({"molecule": {"mass": 1, "moment_of_inertia": 1, "alpha_mean": 1, "alpha_aniso": 0, "spin": 2},
                        "gas": {"mass": 1, "temperature": 1, "density": 1, "c6": 1}})";
  EXPECT_NE(expect_config_error(bad).find("molecule.spin"), std::string::npos);
  std::string root = R"({"foo": 1, "molecule": {"mass": 1, "moment_of_inertia": 1, "alpha_mean": 1, "alpha_aniso": 0},
                         "gas": {"mass": 1, "temperature": 1, "density": 1, "c6": 1}})";
  EXPECT_NE(expect_config_error(root).find("unknown key 'foo'"), std::string::npos);
}

TEST(Config, MissingFieldsAreNamed)
{
  EXPECT_NE(expect_config_error(R"({"molecule": {"mass": 1, "moment_of_inertia": 1, "alpha_mean": 1},
                                    "gas": {"mass": 1, "temperature": 1, "density": 1, "c6": 1}})")
                .find("molecule.alpha_aniso"),
            std::string::npos);
  EXPECT_NE(expect_config_error(R"({"molecule": {"mass": 1, "moment_of_inertia": 1, "alpha_mean": 1, "alpha_aniso": 0}})")
                .find("'gas'"),
            std::string::npos);
  EXPECT_NE(expect_config_error(R"({"molecule": {"mass": 1, "moment_of_inertia": 1, "alpha_mean": 1, "alpha_aniso": 0},
                                    "gas": {"mass": 1, "temperature": 1, "c6": 1}})")
                .find("gas.density"),
            std::string::npos);
}

TEST(Config, RejectsMalformedValues)
{
  expect_config_error("{not json");
  expect_config_error("[1, 2]");
  expect_config_error(R"({"molecule": {"mass": "heavy", "moment_of_inertia": 1, "alpha_mean": 1, "alpha_aniso": 0},
                          "gas": {"mass": 1, "temperature": 1, "density": 1, "c6": 1}})");
  expect_config_error(R"({"molecule": {"mass": -1, "moment_of_inertia": 1, "alpha_mean": 1, "alpha_aniso": 0},
                          "gas": {"mass": 1, "temperature": 1, "density": 1, "c6": 1}})");
  expect_config_error(R"({"molecule": {"mass": 1, "moment_of_inertia": 1, "alpha_mean": 1, "alpha_aniso": 0},
                          "gas": {"mass": 1, "temperature": 1, "density": 1, "c6": 1},
                          "numerics": {"kappa_mode": "quarter"}})");
  expect_config_error(R"({"molecule": {"mass": 1, "moment_of_inertia": 1, "alpha_mean": 1, "alpha_aniso": 0},
                          "gas": {"mass": 1, "temperature": 1, "density": 1, "c6": 1},
                          "numerics": {"j_min": 5, "j_max": 2}})");
  expect_config_error(R"({"description": 3, "molecule": {"mass": 1, "moment_of_inertia": 1, "alpha_mean": 1, "alpha_aniso": 0},
                          "gas": {"mass": 1, "temperature": 1, "density": 1, "c6": 1}})");
}

TEST(Config, InconsistentGasState)
{
  const std::string msg = expect_config_error(
      R"({"molecule": {"mass": 1, "moment_of_inertia": 1, "alpha_mean": 1, "alpha_aniso": 0},
          "gas": {"mass": 1, "temperature": 2, "density": 1, "pressure": 2.2, "c6": 1}})");
  EXPECT_NE(msg.find("inconsistent gas state"), std::string::npos);
  // consistent pair is accepted
  const SystemSpec s = load_config(R"({"molecule": {"mass": 1, "moment_of_inertia": 1, "alpha_mean": 1, "alpha_aniso": 0},
                                       "gas": {"mass": 1, "temperature": 2, "density": 1, "pressure": 2, "c6": 1}})");
  EXPECT_DOUBLE_EQ(s.thermal.density, 1.0);
}

TEST(Config, PressureOnlyResolvesDensity)
{
  const SystemSpec s = load_config(R"({"molecule": {"mass": 1, "moment_of_inertia": 1, "alpha_mean": 1, "alpha_aniso": 0},
                                       "gas": {"mass": 1, "temperature": 0.25, "pressure": 3, "c6": 1}})");
  EXPECT_DOUBLE_EQ(s.thermal.density, 12.0);
}

TEST(Config, RotationalConstantGivesInertia)
{
  const SystemSpec s = load_config(R"({"molecule": {"mass": 1, "rotational_constant": 0.02, "alpha_mean": 1, "alpha_aniso": 0},
                                       "gas": {"mass": 1, "temperature": 1, "density": 1, "c6": 1}})");
  EXPECT_NEAR(s.molecule.moment_of_inertia, 25.0, 1e-12);
  EXPECT_NEAR(s.molecule.rotational_energy(1), 0.04, 1e-14);
  expect_config_error(R"({"molecule": {"mass": 1, "rotational_constant": 0.02, "moment_of_inertia": 30, "alpha_mean": 1, "alpha_aniso": 0},
                          "gas": {"mass": 1, "temperature": 1, "density": 1, "c6": 1}})");
}

TEST(Thermal, HeavyRotorLimit)
{
  MoleculeSpec m = MoleculeSpec::make(1e12, 1.0, 1.0, 0.0);
  GasSpec g;
  g.mass = 3.0;
  g.temperature = 0.7;
  g.density = 1.0;
  g.c6 = 1.0;
  const SystemSpec s = make_system(m, g, {});
  EXPECT_NEAR(s.thermal.reduced_mass, 3.0, 1e-10);
  EXPECT_NEAR(s.thermal.thermal_momentum, std::sqrt(2.0 * 3.0 * 0.7), 1e-9);
}

TEST(Thermal, DistributionValueAtOrigin)
{
  const SystemSpec s = testing_support::n1();
  EXPECT_NEAR(nu_th(0.0, s.thermal), std::pow(std::numbers::pi, -1.5), 1e-15);
  EXPECT_THROW(nu_th(-0.1, s.thermal), std::domain_error);
}

TEST(Thermal, NormalizationAndSecondMoment)
{
  const SystemSpec s = testing_support::n1();
  EXPECT_NEAR(thermal_moment_oracle(s.thermal, 0.0), 1.0, 1e-10);
  EXPECT_NEAR(thermal_moment_oracle(s.thermal, 2.0), 1.5, 1e-10);
  // Gauss rule on the half line with weight exp(-s^2), s = q / q_th
  for (int order : {32, 48, 64}) {
    const QuadratureRule r = make_rule(QuadDomain::half_line_gaussian, order);
    double norm = 0.0;
    double second = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      const double s2 = r.nodes[i] * r.nodes[i];
      norm += r.weights[i] * s2;
      second += r.weights[i] * s2 * s2;
    }
    const double c = 4.0 / std::sqrt(std::numbers::pi);
    EXPECT_NEAR(c * norm, 1.0, 1e-12) << order;
    EXPECT_NEAR(c * second, 1.5, 1e-12) << order;
  }
}

TEST(Units, SiConversionMatchesDirectFormulas)
{
  const MoleculeSpec mol = MoleculeSpec::make(4.65e-26, 1.4e-46, 1.74e-30, 0.7e-30);
  GasSpec gas;
  gas.mass = 6.63e-26;
  gas.temperature = 300.0;
  gas.density = 2.4e25;
  gas.c6 = 1e-77;
  const SystemSpec s = system_from_si(mol, gas, {});

  const double mu = 4.65e-26 * 6.63e-26 / (4.65e-26 + 6.63e-26);
  const double q_th = std::sqrt(2.0 * mu * constants::k_boltzmann_si * 300.0);
  const double len = constants::hbar_si / q_th;
  EXPECT_NEAR(s.scales.mass, mu, 1e-12 * mu);
  EXPECT_NEAR(s.scales.length, len, 1e-12 * len);
  EXPECT_NEAR(s.gas.temperature, 0.5, 1e-14);
  EXPECT_NEAR(s.thermal.density, 2.4e25 * len * len * len, 1e-12 * s.thermal.density);
  const double e = 2.0 * constants::k_boltzmann_si * 300.0;
  EXPECT_NEAR(s.gas.c6, 1e-77 / (e * std::pow(len, 6)), 1e-12 * s.gas.c6);
  // polarizability ratio is unit free
  EXPECT_NEAR(s.molecule.anisotropy_ratio(), 0.7 / 1.74, 1e-14);
}

TEST(Units, SiRoundTrip)
{
  const MoleculeSpec mol = MoleculeSpec::make(4.65e-26, 1.4e-46, 1.74e-30, 0.7e-30);
  GasSpec gas;
  gas.mass = 6.63e-26;
  gas.temperature = 300.0;
  gas.pressure = 101325.0;
  gas.c6 = 1e-77;
  const SystemSpec s = system_from_si(mol, gas, {});
  const auto [m2, g2] = system_to_si(s);
  EXPECT_NEAR(m2.mass / mol.mass, 1.0, 1e-12);
  EXPECT_NEAR(m2.moment_of_inertia / mol.moment_of_inertia, 1.0, 1e-12);
  EXPECT_NEAR(m2.alpha_mean / mol.alpha_mean, 1.0, 1e-12);
  EXPECT_NEAR(m2.alpha_aniso / mol.alpha_aniso, 1.0, 1e-12);
  EXPECT_NEAR(g2.mass / gas.mass, 1.0, 1e-12);
  EXPECT_NEAR(g2.temperature / gas.temperature, 1.0, 1e-12);
  EXPECT_NEAR(*g2.pressure / *gas.pressure, 1.0, 1e-12);
  EXPECT_NEAR(g2.c6 / gas.c6, 1.0, 1e-12);
}

TEST(Units, JsonEchoContainsResolvedValues)
{
  const SystemSpec s = load_config(minimal_normalized);
  const nlohmann::json j = to_json(s);
  EXPECT_DOUBLE_EQ(j["thermal"]["reduced_mass"].get<double>(), 0.5);
  EXPECT_EQ(j["numerics"]["kappa_mode"].get<std::string>(), "exact");
  EXPECT_EQ(j["units"]["system"].get<std::string>(), "normalized");
}
