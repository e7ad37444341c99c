#pragma once

// Physical system description: molecule, gas, numerics, unit handling and the
// thermal distribution of relative momenta.
//
// Internally every quantity is expressed with hbar = k_B = 1. SI documents are
// converted at the boundary into the unit system where the reduced mass and
// the thermal momentum are both 1 (mass unit mu, length unit hbar/q_th, energy
// unit 2 k_B T); `UnitScales` keeps the SI value of each internal unit so that
// results can be reported in SI again.

#include <cmath>
#include <numbers>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace superrotor {

namespace constants {
inline constexpr double hbar_si = 1.054571817e-34;  // J s
inline constexpr double k_boltzmann_si = 1.380649e-23;  // J / K
}  // namespace constants

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class UnitSystem { si, normalized };
enum class KappaMode { exact, half };
enum class AmplitudeBackend { linearized, spectral };

inline std::string to_string(UnitSystem u) { return u == UnitSystem::si ? "si" : "normalized"; }
inline std::string to_string(KappaMode k) { return k == KappaMode::exact ? "exact" : "half"; }
inline std::string to_string(AmplitudeBackend b)
{
  return b == AmplitudeBackend::linearized ? "linearized" : "spectral";
}

struct MoleculeSpec {
  double mass{};
  double moment_of_inertia{};
  double alpha_mean{};
  double alpha_aniso{};  // signed: alpha_parallel - alpha_perp
  double epsilon{};      // 2 alpha_aniso / (3 alpha_mean)

  static MoleculeSpec make(double mass, double moment_of_inertia, double alpha_mean,
                           double alpha_aniso)
  {
    MoleculeSpec m{mass, moment_of_inertia, alpha_mean, alpha_aniso, 0.0};
    m.validate();
    m.epsilon = 2.0 * alpha_aniso / (3.0 * alpha_mean);
    return m;
  }

  void validate() const
  {
    if (!(mass > 0.0)) throw ConfigError("molecule.mass must be positive");
    if (!(moment_of_inertia > 0.0)) throw ConfigError("molecule.moment_of_inertia must be positive");
    if (!(alpha_mean > 0.0)) throw ConfigError("molecule.alpha_mean must be positive");
    if (!std::isfinite(alpha_aniso / alpha_mean)) {
      throw ConfigError("molecule.alpha_aniso / alpha_mean must be finite");
    }
  }

  [[nodiscard]] double anisotropy_ratio() const { return alpha_aniso / alpha_mean; }

  /// E_j = j(j+1) / 2I  (hbar = 1)
  [[nodiscard]] double rotational_energy(int j) const
  {
    return 0.5 * j * (j + 1.0) / moment_of_inertia;
  }
};

struct GasSpec {
  double mass{};
  double temperature{};  // k_B T in internal units
  std::optional<double> density;
  std::optional<double> pressure;
  double c6{};

  /// `k_boltzmann` converts `temperature` to an energy (1 internally, k_B for kelvin).
  void validate(double k_boltzmann = 1.0) const
  {
    if (!(mass > 0.0)) throw ConfigError("gas.mass must be positive");
    if (!(temperature > 0.0)) throw ConfigError("gas.temperature must be positive");
    if (!(c6 > 0.0)) throw ConfigError("gas.c6 must be positive");
    if (!density && !pressure) throw ConfigError("missing mandatory field 'gas.density' or 'gas.pressure'");
    if (density && !(*density > 0.0)) throw ConfigError("gas.density must be positive");
    if (pressure && !(*pressure > 0.0)) throw ConfigError("gas.pressure must be positive");
    if (density && pressure) {
      const double implied = *density * k_boltzmann * temperature;
      if (std::abs(*pressure - implied) > 1e-6 * std::abs(*pressure)) {
        throw ConfigError("inconsistent gas state: pressure != density * k_B * temperature");
      }
    }
  }

  /// n_g, derived from p_g = n_g k_B T when only the pressure is given.
  [[nodiscard]] double resolved_density() const
  {
    return density ? *density : *pressure / temperature;
  }

  [[nodiscard]] double resolved_pressure() const
  {
    return pressure ? *pressure : *density * temperature;
  }
};

struct ThermalContext {
  double reduced_mass{};
  double thermal_momentum{};
  double density{};
};

struct NumericsSpec {
  int j_min = 0;
  int j_max = 1000;
  int quad_order_q = 48;
  int quad_order_sphere = 302;
  int quad_order_circle = 64;
  double b_max = 8.0;  // in units of the characteristic radius a(q)^{1/5}
  int b_nodes = 512;
  double tol_trace = 1e-8;
  double tol_fit = 0.02;
  UnitSystem unit_system = UnitSystem::normalized;
  KappaMode kappa_mode = KappaMode::exact;
  AmplitudeBackend amplitude_backend = AmplitudeBackend::linearized;

  void validate() const
  {
    if (j_min < 0 || j_min > j_max) throw ConfigError("numerics: require 0 <= j_min <= j_max");
    if (quad_order_q < 4 || quad_order_sphere < 4 || quad_order_circle < 4 || b_nodes < 4) {
      throw ConfigError("numerics: all node counts must be >= 4");
    }
    if (!(b_max > 1.0)) throw ConfigError("numerics.b_max must exceed 1");
    if (!(tol_trace > 0.0 && tol_trace < 1.0)) throw ConfigError("numerics.tol_trace must lie in (0, 1)");
    if (!(tol_fit > 0.0 && tol_fit < 1.0)) throw ConfigError("numerics.tol_fit must lie in (0, 1)");
  }
};

/// SI value of one internal unit of each dimension. All ones for normalized input.
struct UnitScales {
  double mass = 1.0;
  double length = 1.0;
  double energy = 1.0;
  double time = 1.0;
};

struct SystemSpec {
  MoleculeSpec molecule;
  GasSpec gas;
  NumericsSpec numerics;
  ThermalContext thermal;
  UnitScales scales;
};

inline ThermalContext derive_thermal(const MoleculeSpec& mol, const GasSpec& gas)
{
  ThermalContext ctx;
  ctx.reduced_mass = gas.mass * mol.mass / (gas.mass + mol.mass);
  ctx.thermal_momentum = std::sqrt(2.0 * ctx.reduced_mass * gas.temperature);
  ctx.density = gas.resolved_density();
  return ctx;
}

/// nu_th(q) = exp(-q^2/q_th^2) / (sqrt(pi) q_th)^3
inline double nu_th(double q, const ThermalContext& ctx)
{
  if (q < 0.0) throw std::domain_error("nu_th: negative momentum");
  const double qt = ctx.thermal_momentum;
  const double norm = std::sqrt(std::numbers::pi) * qt;
  return std::exp(-(q * q) / (qt * qt)) / (norm * norm * norm);
}

/// Assemble a spec from values already in internal (hbar = k_B = 1) units.
inline SystemSpec make_system(MoleculeSpec mol, GasSpec gas, NumericsSpec numerics,
                              UnitScales scales = {})
{
  mol.validate();
  mol.epsilon = 2.0 * mol.alpha_aniso / (3.0 * mol.alpha_mean);
  gas.validate();
  numerics.validate();
  SystemSpec spec{mol, gas, numerics, {}, scales};
  spec.thermal = derive_thermal(spec.molecule, spec.gas);
  return spec;
}

/// Convert SI molecule/gas descriptions into the internal mu = q_th = 1 system.
///
/// SI units: masses kg, moment of inertia kg m^2, polarizabilities m^3,
/// temperature K, density m^-3, pressure Pa, C_6 J m^6.
inline SystemSpec system_from_si(const MoleculeSpec& mol_si, const GasSpec& gas_si,
                                 NumericsSpec numerics)
{
  using constants::hbar_si;
  using constants::k_boltzmann_si;
  mol_si.validate();
  gas_si.validate(k_boltzmann_si);
  const double mu = gas_si.mass * mol_si.mass / (gas_si.mass + mol_si.mass);
  const double kt = k_boltzmann_si * gas_si.temperature;
  const double q_th = std::sqrt(2.0 * mu * kt);

  UnitScales s;
  s.mass = mu;
  s.length = hbar_si / q_th;
  s.energy = 2.0 * kt;
  s.time = hbar_si / s.energy;

  const double l3 = s.length * s.length * s.length;
  MoleculeSpec mol;
  mol.mass = mol_si.mass / s.mass;
  mol.moment_of_inertia = mol_si.moment_of_inertia / (s.mass * s.length * s.length);
  mol.alpha_mean = mol_si.alpha_mean / l3;
  mol.alpha_aniso = mol_si.alpha_aniso / l3;

  GasSpec gas;
  gas.mass = gas_si.mass / s.mass;
  gas.temperature = kt / s.energy;
  if (gas_si.density) gas.density = *gas_si.density * l3;
  if (gas_si.pressure) gas.pressure = *gas_si.pressure * l3 / s.energy;
  if (gas.density && gas.pressure) {
    gas.pressure.reset();  // already checked in SI; avoid re-checking rounded values
  }
  gas.c6 = gas_si.c6 / (s.energy * l3 * l3);

  numerics.unit_system = UnitSystem::si;
  return make_system(mol, gas, numerics, s);
}

/// Inverse of system_from_si for the molecule and gas blocks.
inline std::pair<MoleculeSpec, GasSpec> system_to_si(const SystemSpec& spec)
{
  const UnitScales& s = spec.scales;
  const double l3 = s.length * s.length * s.length;
  MoleculeSpec mol;
  mol.mass = spec.molecule.mass * s.mass;
  mol.moment_of_inertia = spec.molecule.moment_of_inertia * s.mass * s.length * s.length;
  mol.alpha_mean = spec.molecule.alpha_mean * l3;
  mol.alpha_aniso = spec.molecule.alpha_aniso * l3;
  mol.epsilon = spec.molecule.epsilon;
  GasSpec gas;
  gas.mass = spec.gas.mass * s.mass;
  gas.temperature = spec.gas.temperature * s.energy / constants::k_boltzmann_si;
  if (spec.gas.density) gas.density = *spec.gas.density / l3;
  if (spec.gas.pressure) gas.pressure = *spec.gas.pressure * s.energy / l3;
  gas.c6 = spec.gas.c6 * s.energy * l3 * l3;
  return {mol, gas};
}

namespace detail {

using nlohmann::json;

inline const json& require_section(const json& doc, const std::string& name)
{
  if (!doc.contains(name)) throw ConfigError("missing mandatory section '" + name + "'");
  const json& sec = doc.at(name);
  if (!sec.is_object()) throw ConfigError("section '" + name + "' must be an object");
  return sec;
}

inline void reject_unknown(const json& sec, const std::string& name,
                           const std::set<std::string>& allowed)
{
  for (const auto& item : sec.items()) {
    if (!allowed.contains(item.key())) {
      throw ConfigError("unknown key '" + (name.empty() ? item.key() : name + "." + item.key()) + "'");
    }
  }
}

inline std::optional<double> opt_number(const json& sec, const std::string& sec_name,
                                        const std::string& key)
{
  if (!sec.contains(key)) return std::nullopt;
  const json& v = sec.at(key);
  if (!v.is_number()) throw ConfigError("field '" + sec_name + "." + key + "' must be a number");
  return v.get<double>();
}

inline double req_number(const json& sec, const std::string& sec_name, const std::string& key)
{
  auto v = opt_number(sec, sec_name, key);
  if (!v) throw ConfigError("missing mandatory field '" + sec_name + "." + key + "'");
  return *v;
}

inline void opt_int(const json& sec, const std::string& key, int& out)
{
  if (!sec.contains(key)) return;
  const json& v = sec.at(key);
  if (!v.is_number_integer()) throw ConfigError("field 'numerics." + key + "' must be an integer");
  out = v.get<int>();
}

inline std::string opt_string(const json& sec, const std::string& sec_name, const std::string& key,
                              const std::string& fallback)
{
  if (!sec.contains(key)) return fallback;
  const json& v = sec.at(key);
  if (!v.is_string()) throw ConfigError("field '" + sec_name + "." + key + "' must be a string");
  return v.get<std::string>();
}

}  // namespace detail

/// Parse a JSON configuration document (schema in docs/config_schema.md).
inline SystemSpec load_config(const std::string& text)
{
  using detail::json;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  detail::reject_unknown(doc, "", {"molecule", "gas", "numerics", "units", "description"});
  if (doc.contains("description") && !doc["description"].is_string()) {
    throw ConfigError("field 'description' must be a string");
  }

  UnitSystem units = UnitSystem::normalized;
  if (doc.contains("units")) {
    const json& u = detail::require_section(doc, "units");
    detail::reject_unknown(u, "units", {"system"});
    const std::string sys = detail::opt_string(u, "units", "system", "normalized");
    if (sys == "si") {
      units = UnitSystem::si;
    } else if (sys != "normalized") {
      throw ConfigError("field 'units.system' must be \"si\" or \"normalized\"");
    }
  }

  const json& m = detail::require_section(doc, "molecule");
  detail::reject_unknown(m, "molecule",
                         {"mass", "moment_of_inertia", "rotational_constant", "alpha_mean", "alpha_aniso"});
  MoleculeSpec mol;
  mol.mass = detail::req_number(m, "molecule", "mass");
  mol.alpha_mean = detail::req_number(m, "molecule", "alpha_mean");
  mol.alpha_aniso = detail::req_number(m, "molecule", "alpha_aniso");
  const auto inertia = detail::opt_number(m, "molecule", "moment_of_inertia");
  const auto brot = detail::opt_number(m, "molecule", "rotational_constant");
  const double hbar = units == UnitSystem::si ? constants::hbar_si : 1.0;
  if (!inertia && !brot) {
    throw ConfigError("missing mandatory field 'molecule.moment_of_inertia' or 'molecule.rotational_constant'");
  }
  if (brot && !(*brot > 0.0)) throw ConfigError("molecule.rotational_constant must be positive");
  const double inertia_from_b = brot ? hbar * hbar / (2.0 * *brot) : 0.0;
  if (inertia && brot && std::abs(*inertia - inertia_from_b) > 1e-6 * std::abs(*inertia)) {
    throw ConfigError("inconsistent molecule: moment_of_inertia != hbar^2 / (2 rotational_constant)");
  }
  mol.moment_of_inertia = inertia ? *inertia : inertia_from_b;

  const json& g = detail::require_section(doc, "gas");
  detail::reject_unknown(g, "gas", {"mass", "temperature", "density", "pressure", "c6"});
  GasSpec gas;
  gas.mass = detail::req_number(g, "gas", "mass");
  gas.temperature = detail::req_number(g, "gas", "temperature");
  gas.c6 = detail::req_number(g, "gas", "c6");
  gas.density = detail::opt_number(g, "gas", "density");
  gas.pressure = detail::opt_number(g, "gas", "pressure");

  NumericsSpec num;
  if (doc.contains("numerics")) {
    const json& n = detail::require_section(doc, "numerics");
    detail::reject_unknown(n, "numerics",
                           {"j_min", "j_max", "quad_order_q", "quad_order_sphere", "quad_order_circle",
                            "b_max", "b_nodes", "tol_trace", "tol_fit", "kappa_mode", "amplitude_backend"});
    detail::opt_int(n, "j_min", num.j_min);
    detail::opt_int(n, "j_max", num.j_max);
    detail::opt_int(n, "quad_order_q", num.quad_order_q);
    detail::opt_int(n, "quad_order_sphere", num.quad_order_sphere);
    detail::opt_int(n, "quad_order_circle", num.quad_order_circle);
    detail::opt_int(n, "b_nodes", num.b_nodes);
    if (auto v = detail::opt_number(n, "numerics", "b_max")) num.b_max = *v;
    if (auto v = detail::opt_number(n, "numerics", "tol_trace")) num.tol_trace = *v;
    if (auto v = detail::opt_number(n, "numerics", "tol_fit")) num.tol_fit = *v;
    const std::string km = detail::opt_string(n, "numerics", "kappa_mode", "exact");
    if (km == "half") {
      num.kappa_mode = KappaMode::half;
    } else if (km != "exact") {
      throw ConfigError("field 'numerics.kappa_mode' must be \"exact\" or \"half\"");
    }
    const std::string be = detail::opt_string(n, "numerics", "amplitude_backend", "linearized");
    if (be == "spectral") {
      num.amplitude_backend = AmplitudeBackend::spectral;
    } else if (be != "linearized") {
      throw ConfigError("field 'numerics.amplitude_backend' must be \"linearized\" or \"spectral\"");
    }
  }
  num.unit_system = units;

  if (units == UnitSystem::si) return system_from_si(mol, gas, num);
  return make_system(mol, gas, num);
}

/// Echo of the resolved spec (internal units plus the SI scale of each unit).
inline nlohmann::json to_json(const SystemSpec& s)
{
  nlohmann::json j;
  j["molecule"] = {{"mass", s.molecule.mass},
                   {"moment_of_inertia", s.molecule.moment_of_inertia},
                   {"alpha_mean", s.molecule.alpha_mean},
                   {"alpha_aniso", s.molecule.alpha_aniso},
                   {"epsilon", s.molecule.epsilon}};
  j["gas"] = {{"mass", s.gas.mass},
              {"temperature", s.gas.temperature},
              {"density", s.gas.resolved_density()},
              {"pressure", s.gas.resolved_pressure()},
              {"c6", s.gas.c6}};
  j["thermal"] = {{"reduced_mass", s.thermal.reduced_mass},
                  {"thermal_momentum", s.thermal.thermal_momentum},
                  {"density", s.thermal.density}};
  j["numerics"] = {{"j_min", s.numerics.j_min},
                   {"j_max", s.numerics.j_max},
                   {"quad_order_q", s.numerics.quad_order_q},
                   {"quad_order_sphere", s.numerics.quad_order_sphere},
                   {"quad_order_circle", s.numerics.quad_order_circle},
                   {"b_max", s.numerics.b_max},
                   {"b_nodes", s.numerics.b_nodes},
                   {"tol_trace", s.numerics.tol_trace},
                   {"tol_fit", s.numerics.tol_fit},
                   {"kappa_mode", to_string(s.numerics.kappa_mode)},
                   {"amplitude_backend", to_string(s.numerics.amplitude_backend)}};
  j["units"] = {{"system", to_string(s.numerics.unit_system)},
                {"mass_si", s.scales.mass},
                {"length_si", s.scales.length},
                {"energy_si", s.scales.energy},
                {"time_si", s.scales.time}};
  return j;
}

}  // namespace superrotor
