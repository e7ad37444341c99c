#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "superrotor/output.hpp"
#include "support.hpp"

using namespace superrotor;
using testing_support::n1;

namespace {

std::vector<std::string> lines(const std::string& s)
{
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Format, TwelveSignificantDigits)
{
  EXPECT_EQ(format_number(0.30772741035576134), "0.307727410356");
  EXPECT_EQ(format_number(2.0), "2");
  EXPECT_EQ(format_number(1.5e-20), "1.5e-20");
}

TEST(RatesCsv, HeaderAndRows)
{
  const SystemSpec s = n1();
  const RateTable t = sweep_rates(2, 6, s, RateMethod::closed_form);
  std::vector<RateRow> rows = t.rows;
  rows.push_back(to_row(gamma_closed_form(10, 7, s)));
  const auto ls = lines(rates_csv(rows));
  ASSERT_EQ(ls.size(), 7u);
  EXPECT_EQ(ls[0], "j,j_prime,gamma,Gamma_signal,a_coeff,method");
  EXPECT_EQ(ls[1].rfind("2,0,", 0), 0u);
  EXPECT_NE(ls[1].find(",closed_form"), std::string::npos);
  // Gamma_signal only for j' = j - 2
  EXPECT_NE(ls.back().find(",,"), std::string::npos);
}

TEST(RatesCsv, Deterministic)
{
  const SystemSpec s = n1();
  const std::string a = rates_csv(sweep_rates(2, 40, s, RateMethod::closed_form).rows);
  const std::string b = rates_csv(sweep_rates(2, 40, s, RateMethod::closed_form).rows);
  EXPECT_EQ(a, b);
}

TEST(TrajectoryCsv, Columns)
{
  const SystemSpec s = n1();
  const BasisLayout l = BasisLayout::make(8, 10);
  const MasterEquation eq = make_free_equation(s, l);
  const double r = std::sqrt(0.5);
  const RotorState rho0 = centrifuge_state(l, {{10, r}, {8, r}});
  PropagateOptions o;
  o.eig_every = 2;
  const Trajectory t = propagate(rho0, eq, 0.1, 0.01, o);
  const auto ls = lines(trajectory_csv(t, {10}));
  ASSERT_EQ(ls.size(), t.states.size() + 1);
  EXPECT_EQ(ls[0], "t,trace,purity,min_eig,signal_10");
  EXPECT_EQ(ls[1].rfind("0,1,1,", 0), 0u);
  EXPECT_NE(ls[1].find(",0.25"), std::string::npos);
}

TEST(StateDump, RoundTrip)
{
  const BasisLayout l = BasisLayout::make(1, 3);
  const RotorState s = gaussian_centrifuge_state(l, 2, 1.0);
  const std::string bytes = state_dump(s);
  EXPECT_EQ(bytes.size(), 8u + 15u * 15u * 16u);
  const RotorState back = read_state_dump(bytes, l);
  EXPECT_EQ((back.matrix - s.matrix).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(read_state_dump(bytes, BasisLayout::make(1, 2)), std::runtime_error);
  EXPECT_THROW(read_state_dump(bytes.substr(0, 20), l), std::runtime_error);
}

TEST(Svg, LogLogPlot)
{
  std::vector<std::pair<double, double>> pts;
  for (int j = 2; j <= 100; ++j) pts.emplace_back(j, 1.0 / j);
  pts.emplace_back(0.0, 1.0);  // dropped
  const std::string svg = svg_loglog(pts, "j", "Gamma_j");
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(svg.find("<polyline"), std::string::npos);
  EXPECT_NE(svg.find(">Gamma_j</text>"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_THROW(svg_loglog({{0.0, 1.0}}, "x", "y"), std::invalid_argument);
}

TEST(Files, AtomicWrite)
{
  const auto dir = std::filesystem::temp_directory_path() / "superrotor_output_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "a.csv";
  write_atomic(path, "x\n1\n");
  write_atomic(path, "x\n2\n");
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "x\n2\n");
  EXPECT_FALSE(std::filesystem::exists(dir / "a.csv.tmp"));
  std::filesystem::remove_all(dir);
}
