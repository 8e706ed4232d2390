#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "test_support.hpp"
#include "uvc/cli.hpp"

using namespace uvc;
using namespace uvc::testing;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "uvc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

std::string config(const char* name) { return std::string(UVC_SOURCE_DIR) + "/configs/" + name; }

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("uvc_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
    const Result r = run_cli({"synth", "--config", config("example1.json"), "--out", path("example1_design.json")});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }
  static std::string path(const std::string& name) { return (dir_ / name).string(); }
  static std::string design() { return path("example1_design.json"); }

  static inline fs::path dir_;
};

}  // namespace

TEST_F(CliTest, SynthWritesDesign) {
  const Result r = run_cli({"synth", "--config", config("example1.json"), "--out", path("d.json")});
  EXPECT_EQ(r.code, cli::ok);
  EXPECT_NE(r.out.find("phi"), std::string::npos);
  EXPECT_NE(r.out.find("K ="), std::string::npos);
  const ControllerDesign d = io::design_from_json(io::read_json(path("d.json")));
  EXPECT_NEAR(d.phi, example1_phi, 1e-6);
  EXPECT_EQ(d.K, example1_design().K);
}

TEST_F(CliTest, SynthMuOverrideAndGrid) {
  Result r = run_cli({"synth", "--config", config("example1.json"), "--mu", "2"});
  EXPECT_EQ(r.code, cli::ok);
  r = run_cli({"synth", "--config", config("example1.json"), "--mu-grid", "1:4:3"});
  EXPECT_EQ(r.code, cli::ok);
  EXPECT_NE(r.out.find("mu grid"), std::string::npos);
  r = run_cli({"synth", "--config", config("example1.json"), "--mu", "2", "--mu-grid", "1:4:3"});
  EXPECT_EQ(r.code, cli::invalid_input);
  r = run_cli({"synth", "--config", config("example1.json"), "--mu-grid", "1:4"});
  EXPECT_EQ(r.code, cli::invalid_input);
}

TEST_F(CliTest, InfeasibleConfigExitsWithNoDesign) {
  const Result r = run_cli({"synth", "--config", config("infeasible.json")});
  EXPECT_EQ(r.code, cli::no_design);
  EXPECT_NE(r.err.find("infeasible"), std::string::npos);
  EXPECT_NE(r.err.find("Farkas"), std::string::npos);
}

TEST_F(CliTest, InvalidInputs) {
  EXPECT_EQ(run_cli({}).code, cli::invalid_input);
  EXPECT_EQ(run_cli({"synth"}).code, cli::invalid_input);
  EXPECT_EQ(run_cli({"synth", "--config", config("example1.json"), "--bogus"}).code, cli::invalid_input);
  const Result missing = run_cli({"synth", "--config", path("does_not_exist.json")});
  EXPECT_EQ(missing.code, cli::invalid_input);
  EXPECT_NE(missing.err.find("invalid input"), std::string::npos);

  io::write_text(path("garbage.json"), "{ not json");
  EXPECT_EQ(run_cli({"synth", "--config", path("garbage.json")}).code, cli::invalid_input);
  io::write_text(path("bad_ubar.json"), R"({"system": {"model": "manipulator"}, "u_bar": [1, -1], "rho": 1})");
  EXPECT_EQ(run_cli({"synth", "--config", path("bad_ubar.json")}).code, cli::invalid_input);
  EXPECT_EQ(run_cli({"sim", "--design", config("example1.json"), "--x0", "1,0"}).code, cli::invalid_input);
  EXPECT_EQ(run_cli({"sim", "--design", design(), "--x0", "1,0,0"}).code, cli::invalid_input);
  EXPECT_EQ(run_cli({"sim", "--design", design(), "--x0", "1,0", "--vertex", "5"}).code, cli::invalid_input);
  EXPECT_EQ(run_cli({"sim", "--design", design(), "--x0", "0,0"}).code, cli::invalid_input);
}

TEST_F(CliTest, VerifyPassesAndRoundTripIsExact) {
  const Result a = run_cli({"verify", "--design", design()});
  EXPECT_EQ(a.code, cli::ok) << a.out;
  EXPECT_NE(a.out.find("PASS"), std::string::npos);
  EXPECT_EQ(a.out.find("FAIL"), std::string::npos);

  const ControllerDesign d = io::design_from_json(io::read_json(design()));
  io::write_json(path("copy.json"), io::design_to_json(d));
  EXPECT_EQ(slurp(design()), slurp(path("copy.json")));
  const ControllerDesign e = io::design_from_json(io::read_json(path("copy.json")));
  EXPECT_EQ(d.K, e.K);
  EXPECT_EQ(d.L, e.L);
  EXPECT_EQ(d.P, e.P);
  EXPECT_EQ(d.Q, e.Q);
  EXPECT_EQ(d.decision, e.decision);
  EXPECT_EQ(d.phi, e.phi);

  const Result b = run_cli({"verify", "--design", path("copy.json")});
  EXPECT_EQ(a.out, b.out);
}

TEST_F(CliTest, SimWritesReproducibleCsv) {
  Result r = run_cli({"sim", "--design", design(), "--x0", "0.0587,-0.7976", "--vertex", "1", "--out", path("t.csv")});
  ASSERT_EQ(r.code, cli::ok) << r.err;
  EXPECT_NE(r.out.find("reach time"), std::string::npos);
  const auto rows = lines(slurp(path("t.csv")));
  ASSERT_GT(rows.size(), 10u);
  EXPECT_EQ(rows[0], "t,sigma_1,sigma_2,u_1,u_2,sat_u_1,sat_u_2,V");

  r = run_cli({"sim", "--design", design(), "--x0", "0.0587,-0.7976", "--random-alpha", "3", "--seed", "7", "--stride",
               "50", "--out", path("a.csv")});
  ASSERT_EQ(r.code, cli::ok);
  r = run_cli({"sim", "--design", design(), "--x0", "0.0587,-0.7976", "--random-alpha", "3", "--seed", "7", "--stride",
               "50", "--out", path("b.csv")});
  ASSERT_EQ(r.code, cli::ok);
  const std::string a = slurp(path("a.csv"));
  EXPECT_EQ(a, slurp(path("b.csv")));
  EXPECT_EQ(lines(a)[0].rfind("case,t,", 0), 0u);

  r = run_cli({"sim", "--design", design(), "--x0", "0.0587,-0.7976", "--alpha", "0.25,0.25,0.25,0.25"});
  EXPECT_EQ(r.code, cli::ok);
  EXPECT_NE(r.out.find("case 0"), std::string::npos);
  EXPECT_EQ(r.out.find("case 1"), std::string::npos);
}

TEST_F(CliTest, RegionCsv) {
  const Result r = run_cli({"region", "--design", design(), "--samples", "36", "--out", path("r.csv")});
  ASSERT_EQ(r.code, cli::ok) << r.err;
  const auto rows = lines(slurp(path("r.csv")));
  ASSERT_EQ(rows.size(), 37u);
  EXPECT_EQ(rows[0], "dir_1,dir_2,omega_radius,du_admissible");

  const Result stdout_only = run_cli({"region", "--design", design(), "--samples", "36"});
  EXPECT_EQ(stdout_only.out, slurp(path("r.csv")));
  EXPECT_EQ(run_cli({"region", "--design", design(), "--samples", "0"}).code, cli::invalid_input);
}

TEST_F(CliTest, ModelsListAndEmit) {
  Result r = run_cli({"models", "list"});
  EXPECT_EQ(r.code, cli::ok);
  EXPECT_NE(r.out.find("manipulator"), std::string::npos);
  EXPECT_NE(r.out.find("rov"), std::string::npos);

  r = run_cli({"models", "emit", "--name", "rov", "--params", "mass=300", "--out", path("rov.json")});
  ASSERT_EQ(r.code, cli::ok);
  const io::SynthesisConfig cfg = io::config_from_json(io::read_json(path("rov.json")));
  models::RovParameters p;
  p.mass = 300.0;
  const PolytopicSystem expected = models::rov_polytope(p);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(cfg.system.vertex(i), expected.vertex(i));
  EXPECT_FALSE(cfg.mu_given);
  EXPECT_EQ(cfg.params.rho, 10.0);

  r = run_cli({"models", "emit", "--name", "manipulator"});
  EXPECT_EQ(r.code, cli::ok);
  const io::SynthesisConfig m = io::config_from_json(io::Json::parse(r.out));
  for (int i = 0; i < 4; ++i) EXPECT_LT((m.system.vertex(i) - example1_system().vertex(i)).norm(), 1e-15);

  EXPECT_EQ(run_cli({"models", "emit", "--name", "rov", "--params", "colour=3"}).code, cli::invalid_input);
  EXPECT_EQ(run_cli({"models", "emit", "--name", "boat"}).code, cli::invalid_input);
  EXPECT_EQ(run_cli({"models", "emit", "--name", "manipulator", "--params", "delta_bar=3"}).code,
            cli::invalid_input);
}

TEST_F(CliTest, OverflowingSimulationIsNumericalFailure) {
  io::Json j = io::read_json(design());
  for (auto& v : j["system"]["vertices"])
    for (auto& x : v["data"]) x = 1e308 * x.get<double>();
  io::write_json(path("overflow.json"), j);
  const Result r = run_cli({"sim", "--design", path("overflow.json"), "--x0", "1,0", "--vertex", "1"});
  EXPECT_EQ(r.code, cli::numerical_failure);
  EXPECT_NE(r.err.find("numerical failure"), std::string::npos);
}

TEST_F(CliTest, BinaryPropagatesExitCodes) {
  const std::string bin = UVC_CLI_PATH;
  auto status = [&](const std::string& args) {
    const int raw = std::system((bin + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  EXPECT_EQ(status("models list"), 0);
  EXPECT_EQ(status("synth --config " + config("infeasible.json")), 1);
  EXPECT_EQ(status("synth --config " + path("nope.json")), 2);
  EXPECT_EQ(status("verify --design " + design()), 0);
}
