// superrotor: rates, sweeps, amplitudes, propagation and the acceptance suite.
//
// Exit codes: 0 success, 1 validation failure, 2 usage or configuration error,
// 3 numerical non-convergence (including trace-drift aborts).

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "superrotor/lindblad.hpp"
#include "superrotor/output.hpp"
#include "superrotor/params.hpp"
#include "superrotor/rates.hpp"
#include "superrotor/scattering.hpp"
#include "superrotor/validation.hpp"

namespace sr = superrotor;
using nlohmann::json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_validation = 1;
constexpr int exit_usage = 2;
constexpr int exit_nonconvergence = 3;

struct RunManifest {
  std::string command;
  json spec = nullptr;
  std::vector<std::string> outputs;
  std::vector<std::string> flags;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

  void add_output(const std::string& path) { outputs.push_back(path); }
  void flag(const std::string& what)
  {
    flags.push_back(what);
    std::fprintf(stderr, "warning: %s\n", what.c_str());
  }

  [[nodiscard]] json to_json(int exit_code) const
  {
    return {{"command", command},
            {"spec", spec},
            {"outputs", outputs},
            {"wall_time_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()},
            {"flags", flags},
            {"exit_code", exit_code}};
  }
};

std::string read_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw sr::ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

sr::SystemSpec read_config(const std::string& path, RunManifest& man)
{
  sr::SystemSpec s = sr::load_config(read_file(path));
  man.spec = sr::to_json(s);
  return s;
}

std::string num(double x) { return sr::format_number(x); }

sr::KappaMode parse_kappa(const std::string& s)
{
  return s == "half" ? sr::KappaMode::half : sr::KappaMode::exact;
}

sr::AmplitudeBackend parse_backend(const std::string& s)
{
  return s == "spectral" ? sr::AmplitudeBackend::spectral : sr::AmplitudeBackend::linearized;
}

sr::Vector3d parse_direction(const std::string& text)
{
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
  if (v.size() != 3) throw std::invalid_argument("direction must be 'x,y,z'");
  sr::Vector3d n(v[0], v[1], v[2]);
  if (!(n.norm() > 0.0)) throw std::invalid_argument("direction must be non-zero");
  return n.normalized();
}

// ---------------------------------------------------------------------------

struct RatesArgs {
  std::string config;
  int j = 0;
  int j_prime = 0;
  std::string method = "closed_form";
  std::string backend;
  std::string kappa;
  std::string out = "rates.csv";
  bool delta = false;
};

int cmd_rates(const RatesArgs& a, RunManifest& man)
{
  sr::SystemSpec s = read_config(a.config, man);
  for (int j : {a.j, a.j_prime}) {
    if (j < s.numerics.j_min || j > s.numerics.j_max) {
      throw std::out_of_range("j = " + std::to_string(j) + " outside basis limits");
    }
  }
  sr::RateResult r;
  sr::QuadratureOptions qo = sr::QuadratureOptions::from(s);
  if (!a.backend.empty()) qo.backend = parse_backend(a.backend);
  if (!a.kappa.empty()) qo.kappa = parse_kappa(a.kappa);
  if (a.method == "closed_form") {
    r = sr::gamma_closed_form(a.j, a.j_prime, s);
  } else {
    r = sr::gamma_numeric(a.j, a.j_prime, s, qo);
  }
  std::printf("gamma = %s\n", num(r.gamma).c_str());
  if (a.j_prime == a.j - 2) std::printf("Gamma_signal = %s\n", num(2.0 * r.gamma).c_str());
  std::printf("A = %s\n", num(r.a_coefficient).c_str());
  std::printf("method = %s\n", sr::to_string(r.method).c_str());
  if (r.method == sr::RateMethod::quadrature) {
    std::printf("quadrature: q order %d, sphere order %d, backend %s, kappa %s, convergence change %s\n",
                r.quad_order_q, r.quad_order_sphere, r.backend.c_str(), r.kappa_mode.c_str(),
                num(r.convergence_change).c_str());
    if (!r.converged) man.flag("rate quadrature not converged (change " + num(r.convergence_change) + ")");
  }
  if (s.numerics.unit_system == sr::UnitSystem::si) {
    std::printf("gamma_si = %s 1/s\n", num(r.gamma / s.scales.time).c_str());
  }
  if (a.delta) {
    const double d = sr::delta_frequency(a.j, a.j_prime, s, qo);
    std::printf("Delta = %s  (defined as free splitting plus gas-shift difference of |jj> and |j'j'>)\n",
                num(d).c_str());
  }
  sr::write_atomic(a.out, sr::rates_csv({sr::to_row(r)}));
  man.add_output(a.out);
  return man.flags.empty() ? exit_ok : exit_nonconvergence;
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string config;
  int j_min = 2;
  int j_max = 0;
  std::string method = "closed_form";
  std::string out = "sweep.csv";
  std::string plot;
};

int cmd_sweep(const SweepArgs& a, RunManifest& man)
{
  sr::SystemSpec s = read_config(a.config, man);
  const sr::RateMethod m = a.method == "quadrature" ? sr::RateMethod::quadrature : sr::RateMethod::closed_form;
  const sr::RateTable t = sr::sweep_rates(a.j_min, a.j_max, s, m);
  sr::write_atomic(a.out, sr::rates_csv(t.rows));
  man.add_output(a.out);
  std::printf("rows = %zu\npeak Gamma_j at j = %d\nmonotone decrease beyond peak: %s\n", t.rows.size(), t.peak_j,
              t.monotone_after_peak ? "yes" : "no");
  if (!a.plot.empty()) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : t.rows) pts.emplace_back(r.j, r.gamma_signal);
    sr::write_atomic(a.plot, sr::svg_loglog(pts, "j", "Gamma_j"));
    man.add_output(a.plot);
  }
  if (!t.converged) man.flag("rate quadrature not converged for at least one j");
  return man.flags.empty() ? exit_ok : exit_nonconvergence;
}

// ---------------------------------------------------------------------------

struct PropagateArgs {
  std::string config;
  std::string state = "builtin:centrifuge";
  int j_min = 8;
  int j_max = 12;
  std::vector<int> levels;
  int center = -1;
  double width = 2.0;
  double t_final = 0.0;
  double dt = 0.0;
  std::string out = "trajectory.csv";
  std::string dump;
  std::vector<int> signals;
  bool no_shift = false;
  int sample_every = 0;
};

sr::RotorState make_initial_state(const PropagateArgs& a, const sr::BasisLayout& l)
{
  if (a.state == "builtin:isotropic") {
    std::map<int, double> p;
    for (int j = l.j_min; j <= l.j_max; ++j) p[j] = 1.0 / l.blocks();
    return sr::isotropic_state(l, p);
  }
  if (a.state == "builtin:gaussian") {
    return sr::gaussian_centrifuge_state(l, a.center >= 0 ? a.center : (l.j_min + l.j_max) / 2, a.width);
  }
  if (a.state == "builtin:centrifuge") {
    std::vector<int> lv = a.levels;
    if (lv.empty()) lv = {l.j_max, std::max(l.j_min, l.j_max - 2)};
    std::map<int, sr::cplx> c;
    for (int j : lv) c[j] = 1.0 / std::sqrt(static_cast<double>(lv.size()));
    return sr::centrifuge_state(l, c);
  }
  if (a.state.rfind("builtin:", 0) == 0) throw std::invalid_argument("unknown builtin state '" + a.state + "'");
  json doc;
  try {
    doc = json::parse(read_file(a.state));
  } catch (const json::parse_error& e) {
    throw sr::ConfigError(std::string("malformed state file: ") + e.what());
  }
  const std::string type = doc.value("type", "");
  if (type == "centrifuge") {
    std::map<int, sr::cplx> c;
    for (const auto& [k, v] : doc.at("coefficients").items()) {
      c[std::stoi(k)] = v.is_array() ? sr::cplx(v.at(0).get<double>(), v.at(1).get<double>())
                                     : sr::cplx(v.get<double>(), 0.0);
    }
    return sr::centrifuge_state(l, c);
  }
  if (type == "isotropic") {
    std::map<int, double> p;
    for (const auto& [k, v] : doc.at("populations").items()) p[std::stoi(k)] = v.get<double>();
    return sr::isotropic_state(l, p);
  }
  throw sr::ConfigError("state file: 'type' must be \"centrifuge\" or \"isotropic\"");
}

int cmd_propagate(const PropagateArgs& a, RunManifest& man)
{
  sr::SystemSpec s = read_config(a.config, man);
  if (a.j_min < s.numerics.j_min || a.j_max > s.numerics.j_max) {
    throw std::out_of_range("propagation window outside basis limits");
  }
  const sr::BasisLayout l = sr::BasisLayout::make(a.j_min, a.j_max);
  const sr::RotorState rho0 = make_initial_state(a, l);

  sr::DissipatorSet d = sr::build_dissipator(s, l);
  if (!d.converged) man.flag("dissipator quadrature not converged (change " + num(d.convergence_change) + ")");
  const sr::MasterEquation eq = sr::make_master_equation(s, std::move(d), !a.no_shift);
  if (!eq.shift_converged) man.flag("energy-shift quadrature not converged");

  std::vector<int> signals = a.signals;
  if (signals.empty()) {
    for (int j = std::max(2, l.j_min + 2); j <= l.j_max; ++j) signals.push_back(j);
  }
  for (int j : signals) {
    if (j < 2 || !l.contains(j) || !l.contains(j - 2)) {
      throw std::out_of_range("signal j = " + std::to_string(j) + " needs j and j-2 in the window");
    }
  }

  double dt = a.dt;
  if (dt <= 0.0) {
    double g_max = 0.0;
    for (int j = l.j_min; j <= l.j_max; ++j)
      for (int jp = l.j_min; jp < j; ++jp) g_max = std::max(g_max, sr::gamma_closed_form(j, jp, s).gamma);
    dt = a.t_final / 200.0;
    if (g_max > 0.0) dt = std::min(dt, 0.02 / g_max);
    const double w = eq.max_frequency();
    if (w > 0.0) dt = std::min(dt, 0.1 / w);
  }
  sr::PropagateOptions po;
  po.tol_trace = s.numerics.tol_trace;
  const long steps = static_cast<long>(std::ceil(a.t_final / dt - 1e-9));
  po.sample_every = a.sample_every > 0 ? a.sample_every : static_cast<int>(std::max(1L, steps / 2000));
  const sr::Trajectory tr = sr::propagate(rho0, eq, a.t_final, dt, po);

  sr::write_atomic(a.out, sr::trajectory_csv(tr, signals));
  man.add_output(a.out);
  if (!a.dump.empty()) {
    sr::write_atomic(a.dump, sr::state_dump(tr.states.back()), true);
    man.add_output(a.dump);
  }

  std::printf("steps = %ld, dt = %s, max trace drift = %s\n", tr.steps, num(tr.steps > 0 ? a.t_final / static_cast<double>(tr.steps) : 0.0).c_str(),
              num(tr.max_trace_drift).c_str());
  double min_eig = std::numeric_limits<double>::infinity();
  for (const auto& [t, e] : tr.min_eigenvalues) min_eig = std::min(min_eig, e);
  std::printf("smallest eigenvalue seen = %s\n", num(min_eig).c_str());
  std::printf("max |rho(t_final) - rho(0)| = %s\n",
              num((tr.states.back().matrix - rho0.matrix).cwiseAbs().maxCoeff()).c_str());
  for (int j : signals) {
    if (sr::alignment_signal(rho0, j) <= 0.0) continue;
    const double closed = sr::signal_decay_rate(j, s).gamma;
    std::vector<std::pair<double, double>> win;
    std::vector<std::pair<double, double>> all;
    for (const auto& st : tr.states) {
      const double v = sr::alignment_signal(st, j);
      if (!(v > 0.0)) continue;
      all.emplace_back(st.time, v);
      if (closed > 0.0 && st.time <= 0.04 / closed) win.emplace_back(st.time, v);
    }
    const bool short_ok = win.size() >= 5;
    const auto& use = short_ok ? win : all;
    if (use.size() < 5) continue;
    const sr::DecayFit f = sr::extract_decay_rate(use, 0.0);
    std::printf("signal j=%d: fitted Gamma_j = %s (%s window), closed form Gamma_j = %s, ratio = %s\n", j,
                num(f.rate).c_str(), short_ok ? "short-time" : "full", num(closed).c_str(),
                closed > 0.0 ? num(f.rate / closed).c_str() : "n/a");
  }
  return man.flags.empty() ? exit_ok : exit_nonconvergence;
}

// ---------------------------------------------------------------------------

struct ValidateArgs {
  std::string config;
  std::string json_out;
  double corrupt = 1.0;
  std::vector<int> only;
};

int cmd_validate(const ValidateArgs& a, RunManifest& man)
{
  std::optional<sr::SystemSpec> spec;
  if (!a.config.empty()) spec = read_config(a.config, man);
  sr::AcceptanceOptions opt;
  opt.closed_form_scale = a.corrupt;
  opt.only = a.only;
  const sr::AcceptanceReport rep = sr::run_acceptance(spec, opt);
  for (const auto& c : rep.criteria) {
    std::printf("[%s] %2d %s: %s (%.2f s)\n", c.passed ? "PASS" : "FAIL", c.id, c.name.c_str(), c.detail.c_str(),
                c.seconds);
  }
  const std::string js = sr::to_json(rep).dump(2) + "\n";
  if (a.json_out == "-") {
    std::fputs(js.c_str(), stdout);
  } else if (!a.json_out.empty()) {
    sr::write_atomic(a.json_out, js);
    man.add_output(a.json_out);
  }
  std::printf("%s\n", rep.all_passed() ? "all criteria passed" : "validation FAILED");
  return rep.all_passed() ? exit_ok : exit_validation;
}

// ---------------------------------------------------------------------------

struct AmplitudeArgs {
  std::string config;
  int j = 0;
  double q = 1.0;
  std::string kind = "linearized";
  std::string n_in = "0,0,1";
  std::string n_out;
  std::string out;
};

int cmd_amplitude(const AmplitudeArgs& a, RunManifest& man)
{
  sr::SystemSpec s = read_config(a.config, man);
  const sr::Vector3d nin = parse_direction(a.n_in);
  const sr::Vector3d nout = a.n_out.empty() ? nin : parse_direction(a.n_out);
  sr::ForwardOptions fo;
  fo.kappa = s.numerics.kappa_mode;
  fo.circle_order = s.numerics.quad_order_circle;
  sr::MatrixXcd f;
  if (a.kind == "schiff") {
    sr::SchiffOptions so;
    so.kappa = s.numerics.kappa_mode;
    const sr::SchiffResult r = sr::schiff_amplitude_full(a.j, a.q, nout, nin, s, so);
    f = r.amplitude.entries;
    std::printf("b_min = %s, b_max = %s, radial nodes = %d, harmonics = %d, grid change = %s\n",
                num(r.b_min).c_str(), num(r.b_max).c_str(), r.radial_nodes, r.harmonics,
                num(r.convergence_change).c_str());
    if (!r.converged) man.flag("Schiff amplitude grid not converged (change " + num(r.convergence_change) + ")");
  } else {
    if ((nout - nin).norm() > 1e-12) throw std::invalid_argument("forward amplitudes need n_out = n_in");
    f = a.kind == "spectral" ? sr::forward_amplitude_spectral(a.j, a.q, nin, s, fo).entries
                             : sr::forward_amplitude_linearized(a.j, a.q, nin, s, fo).entries;
  }
  std::string csv = "m,m_prime,re,im\n";
  for (int r = 0; r < f.rows(); ++r)
    for (int c = 0; c < f.cols(); ++c)
      csv += std::to_string(r - a.j) + ',' + std::to_string(c - a.j) + ',' + num(f(r, c).real()) + ',' +
             num(f(r, c).imag()) + '\n';
  if (a.out.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    sr::write_atomic(a.out, csv);
    man.add_output(a.out);
  }
  return man.flags.empty() ? exit_ok : exit_nonconvergence;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Superrotor decoherence rates and rotational master-equation propagation"};
  app.require_subcommand(1);
  std::string manifest_path;
  app.add_option("--manifest", manifest_path, "Write a JSON run manifest to this path");

  const std::vector<std::string> methods = {"closed_form", "quadrature"};
  const std::vector<std::string> backends = {"linearized", "spectral"};
  const std::vector<std::string> kappas = {"exact", "half"};

  RatesArgs ra;
  auto* rates = app.add_subcommand("rates", "Decoherence rate gamma_jj' for one level pair");
  rates->add_option("config", ra.config, "Configuration file")->required();
  rates->add_option("--j", ra.j, "Level j")->required();
  rates->add_option("--jprime", ra.j_prime, "Level j'")->required();
  rates->add_option("--method", ra.method)->check(CLI::IsMember(methods));
  rates->add_option("--backend", ra.backend, "Override numerics.amplitude_backend")->check(CLI::IsMember(backends));
  rates->add_option("--kappa", ra.kappa, "Override numerics.kappa_mode")->check(CLI::IsMember(kappas));
  rates->add_option("--out", ra.out, "CSV output path");
  rates->add_flag("--delta", ra.delta, "Also print the short-time frequency Delta_jj'");

  SweepArgs sa;
  auto* sweep = app.add_subcommand("sweep", "Signal decay rate Gamma_j over a range of j");
  sweep->add_option("config", sa.config, "Configuration file")->required();
  sweep->add_option("--jmin", sa.j_min, "First j (>= 2)");
  sweep->add_option("--jmax", sa.j_max, "Last j")->required();
  sweep->add_option("--method", sa.method)->check(CLI::IsMember(methods));
  sweep->add_option("--out", sa.out, "CSV output path");
  sweep->add_option("--plot", sa.plot, "SVG plot path (log-log Gamma_j vs j)");

  PropagateArgs pa;
  auto* prop = app.add_subcommand("propagate", "Propagate a density matrix under the master equation");
  prop->add_option("config", pa.config, "Configuration file")->required();
  prop->add_option("--state", pa.state,
                   "builtin:centrifuge | builtin:isotropic | builtin:gaussian (illustrative) | state JSON file");
  prop->add_option("--jmin", pa.j_min, "Lowest level in the basis window");
  prop->add_option("--jmax", pa.j_max, "Highest level in the basis window");
  prop->add_option("--levels", pa.levels, "Levels of the builtin centrifuge superposition")->delimiter(',');
  prop->add_option("--center", pa.center, "Centre level of the builtin Gaussian state");
  prop->add_option("--width", pa.width, "Width (in j) of the builtin Gaussian state");
  prop->add_option("--tfinal", pa.t_final, "Final time (internal units)")->required()->check(CLI::PositiveNumber);
  prop->add_option("--dt", pa.dt, "Step size (default: automatic)");
  prop->add_option("--out", pa.out, "Trajectory CSV path");
  prop->add_option("--dump", pa.dump, "Binary dump of the final state");
  prop->add_option("--signals", pa.signals, "Levels j of the alignment-signal columns")->delimiter(',');
  prop->add_option("--sample-every", pa.sample_every, "Keep every n-th step in the trajectory");
  prop->add_flag("--no-shift", pa.no_shift, "Omit the gas-induced energy shift");

  ValidateArgs va;
  auto* val = app.add_subcommand("validate", "Run the acceptance suite");
  val->add_option("config", va.config, "Optional configuration file");
  val->add_option("--json", va.json_out, "JSON report path ('-' for stdout)");
  val->add_option("--only", va.only, "Run only these criterion ids")->delimiter(',');
  val->add_option("--corrupt-constant", va.corrupt, "Negative-control hook")->group("");

  AmplitudeArgs aa;
  auto* amp = app.add_subcommand("amplitude", "Print a scattering-amplitude matrix");
  amp->add_option("config", aa.config, "Configuration file")->required();
  amp->add_option("--j", aa.j, "Level j")->required();
  amp->add_option("--q", aa.q, "Relative momentum (internal units)")->check(CLI::PositiveNumber);
  amp->add_option("--kind", aa.kind)->check(CLI::IsMember({"linearized", "spectral", "schiff"}));
  amp->add_option("--n-in", aa.n_in, "Incoming direction x,y,z");
  amp->add_option("--n-out", aa.n_out, "Outgoing direction x,y,z (schiff only)");
  amp->add_option("--out", aa.out, "CSV output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_usage;
  }

  RunManifest man;
  int code = exit_ok;
  try {
    if (rates->parsed()) {
      man.command = "rates";
      code = cmd_rates(ra, man);
    } else if (sweep->parsed()) {
      man.command = "sweep";
      code = cmd_sweep(sa, man);
    } else if (prop->parsed()) {
      man.command = "propagate";
      code = cmd_propagate(pa, man);
    } else if (val->parsed()) {
      man.command = "validate";
      code = cmd_validate(va, man);
    } else if (amp->parsed()) {
      man.command = "amplitude";
      code = cmd_amplitude(aa, man);
    }
  } catch (const sr::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    code = exit_usage;
  } catch (const sr::DriftError& e) {
    std::fprintf(stderr, "aborted: %s\n", e.what());
    code = exit_nonconvergence;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    code = exit_nonconvergence;
  } catch (const std::logic_error& e) {  // invalid_argument, out_of_range, step-size violation
    std::fprintf(stderr, "error: %s\n", e.what());
    code = exit_usage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    code = exit_usage;
  }
  if (!manifest_path.empty()) {
    try {
      sr::write_atomic(manifest_path, man.to_json(code).dump(2) + "\n");
    } catch (const std::exception& e) {
      std::fprintf(stderr, "cannot write manifest: %s\n", e.what());
      if (code == exit_ok) code = exit_usage;
    }
  }
  return code;
}
