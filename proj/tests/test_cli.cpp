#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

namespace {

struct CliResult {
  int code{};
  std::string output;
};

CliResult run(const std::string& args)
{
  const std::string cmd = std::string("\"") + SUPERROTOR_CLI + "\" " + args + " 2>&1";
  CliResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return {-1, "popen failed"};
  char buf[4096];
  while (std::fgets(buf, sizeof buf, p)) r.output += buf;
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string config(const std::string& name) { return std::string(SUPERROTOR_CONFIGS) + "/" + name; }

std::string slurp(const std::string& path)
{
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const std::string& s)
{
  int n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

double value_after(const std::string& text, const std::string& key)
{
  const auto pos = text.find(key);
  if (pos == std::string::npos) return std::nan("");
  return std::stod(text.substr(pos + key.size()));
}

}  // namespace

TEST(Cli, RatesReferencePair)
{
  const CliResult r = run("rates " + config("n1_normalized.json") + " --j 10 --jprime 8 --out cli_rates.csv");
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("gamma = 0.307727410356"), std::string::npos) << r.output;
  const std::string csv = slurp("cli_rates.csv");
  EXPECT_EQ(csv.rfind("j,j_prime,gamma,Gamma_signal,a_coeff,method\n10,8,0.307727410356,", 0), 0u) << csv;
}

TEST(Cli, RatesGroundPairVanishes)
{
  const CliResult r = run("rates " + config("n1_normalized.json") + " --j 0 --jprime 0 --out cli_rates0.csv");
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("gamma = 0\n"), std::string::npos) << r.output;
}

TEST(Cli, MalformedConfigNamesKey)
{
  {
    std::ofstream out("cli_bad.json");
    out << R"({"molecule": {"mass": 1, "moment_of_inertia": 1, "alpha_mean": 1, "alpha_aniso": 0, "spin": 1},
               "gas": {"mass": 1, "temperature": 1, "density": 1, "c6": 1}})";
  }
  const CliResult r = run("rates cli_bad.json --j 2 --jprime 0");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("molecule.spin"), std::string::npos) << r.output;
  EXPECT_EQ(run("rates does_not_exist.json --j 2 --jprime 0").code, 2);
  EXPECT_EQ(run("rates " + config("n1_normalized.json") + " --j 2").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
}

TEST(Cli, SweepWritesCsvAndPlot)
{
  const CliResult r = run("sweep " + config("n1_normalized.json") + " --jmax 200 --out cli_sweep.csv --plot cli_sweep.svg");
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(count_lines(slurp("cli_sweep.csv")), 200);
  EXPECT_NE(slurp("cli_sweep.svg").find("<polyline"), std::string::npos);
  EXPECT_NE(r.output.find("monotone decrease beyond peak: yes"), std::string::npos) << r.output;
}

TEST(Cli, SweepBeyondBasisLimit)
{
  const CliResult r = run("sweep " + config("n1_normalized.json") + " --jmax 1500 --out cli_sweep_bad.csv");
  EXPECT_EQ(r.code, 2) << r.output;
  EXPECT_FALSE(std::filesystem::exists("cli_sweep_bad.csv"));
}

TEST(Cli, PropagateTwoLevelDecay)
{
  const CliResult r = run("propagate " + config("n1_normalized.json") +
                    " --tfinal 0.1 --signals 12 --out cli_traj.csv --dump cli_state.bin");
  EXPECT_EQ(r.code, 0) << r.output;
  const double ratio = value_after(r.output, "ratio = ");
  EXPECT_NEAR(ratio, 1.0, 0.02) << r.output;
  EXPECT_NE(r.output.find("short-time window"), std::string::npos);
  EXPECT_EQ(slurp("cli_traj.csv").rfind("t,trace,purity,min_eig,signal_12\n", 0), 0u);
  const auto bytes = std::filesystem::file_size("cli_state.bin");
  EXPECT_EQ(bytes, 8u + 105u * 105u * 16u);
}

TEST(Cli, PropagateIsotropicBuiltinIsStationary)
{
  const CliResult r = run("propagate " + config("n1_normalized.json") +
                    " --state builtin:isotropic --jmin 2 --jmax 5 --tfinal 1 --out cli_iso.csv");
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_LT(value_after(r.output, "max |rho(t_final) - rho(0)| = "), 1e-12) << r.output;
}

TEST(Cli, PropagateStateFile)
{
  {
    std::ofstream out("cli_state.json");
    out << R"({"type": "centrifuge", "coefficients": {"10": 0.6, "8": [0.0, 0.8]}})";
  }
  const CliResult r = run("propagate " + config("n1_normalized.json") +
                    " --state cli_state.json --tfinal 0.05 --signals 10 --out cli_traj2.csv");
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_NE(r.output.find("signal j=10"), std::string::npos) << r.output;
}

TEST(Cli, PropagateStepSizeViolation)
{
  const CliResult r = run("propagate " + config("n1_normalized.json") + " --tfinal 10 --dt 5 --out cli_traj3.csv");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("step-size violation"), std::string::npos) << r.output;
}

TEST(Cli, ValidateNegativeControl)
{
  const CliResult r = run("validate --only 1 --corrupt-constant 1.001");
  EXPECT_EQ(r.code, 1) << r.output;
  EXPECT_NE(r.output.find("FAIL"), std::string::npos);
}

TEST(Cli, ValidateIsotropicConfig)
{
  const CliResult r = run("validate " + config("n1_isotropic.json") + " --only 5,11 --json cli_report.json");
  EXPECT_EQ(r.code, 0) << r.output;
  const auto report = nlohmann::json::parse(slurp("cli_report.json"));
  EXPECT_EQ(report["criteria"].size(), 2u);
}

TEST(Cli, AmplitudePrintsMatrix)
{
  const CliResult r = run("amplitude " + config("n1_normalized.json") + " --j 1 --q 1 --kind linearized");
  EXPECT_EQ(r.code, 0) << r.output;
  EXPECT_FALSE(r.output.empty());
}

TEST(Cli, ManifestRecordsRun)
{
  const CliResult r = run("--manifest cli_manifest.json rates " + config("n1_normalized.json") +
                    " --j 4 --jprime 2 --out cli_rates2.csv");
  EXPECT_EQ(r.code, 0) << r.output;
  const auto m = nlohmann::json::parse(slurp("cli_manifest.json"));
  EXPECT_EQ(m["command"], "rates");
  EXPECT_EQ(m["exit_code"], 0);
  EXPECT_TRUE(m.contains("spec"));
  EXPECT_TRUE(m.contains("wall_time_s"));
  EXPECT_EQ(m["outputs"].size(), 1u);
}
