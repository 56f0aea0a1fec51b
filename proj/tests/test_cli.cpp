#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <unistd.h>

#include <json.hpp>

#include "quench/cli.hpp"
#include "quench/constants.hpp"
#include "quench/error.hpp"
#include "quench/oracles.hpp"

using namespace quench;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("quench_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig small_config(const fs::path& out) {
  RunConfig c;
  c.cells = 400;
  c.core_cells = 80;
  c.U_stop = 1e4;
  c.output_dir = out.string();
  return c;
}

}  // namespace

TEST_CASE("format_double round-trips bit-exactly") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5, 0.0, std::nextafter(1.0, 2.0),
                   std::numeric_limits<double>::denorm_min()}) {
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(format_double(0.05) == "0.05");
  CHECK_THROWS_AS(parse_double("1.0x", "T"), ConfigError);
  CHECK_THROWS_AS(parse_double("", "T"), ConfigError);
}

TEST_CASE("config text round trip") {
  RunConfig c;
  set_config_value(c, "q", "0.3");
  set_config_value(c, "T", "1e-8");
  set_config_value(c, "cells", "1500");
  set_config_value(c, "regrid", "false");
  set_config_value(c, "theta_amplitude", "radial");
  set_config_value(c, "delta0", "0.2");
  const std::string text = serialize_config(c);
  const RunConfig back = parse_config(text);
  CHECK(serialize_config(back) == text);
  CHECK(back.model.q == 0.3);
  CHECK(back.T == 1e-8);
  CHECK(back.cells == 1500);
  CHECK_FALSE(back.regrid);
  CHECK(back.theta_amplitude == "radial");
  CHECK(get_config_value(back, "delta0") == "0.2");
  std::size_t lines = 0;
  for (char ch : text) lines += ch == '\n';
  CHECK(lines == config_keys().size());
  set_config_value(c, "delta0", "auto");
  CHECK(get_config_value(c, "delta0") == "auto");
}

TEST_CASE("config parsing rejects bad input with line numbers") {
  const RunConfig c = parse_config("# comment\n\nq = 0.2   # trailing\nT=1e-7\n");
  CHECK(c.model.q == 0.2);
  CHECK(c.T == 1e-7);
  try {
    parse_config("q = 0.2\nbogus = 1\n");
    FAIL("unknown key accepted");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    CHECK(std::string(e.what()).find("bogus") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("q = 0.2\nq = 0.3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("q 0.2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("cells = 12.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("regrid = maybe\n"), ConfigError);
}

TEST_CASE("validate") {
  RunConfig c;
  CHECK_NOTHROW(validate(c));
  c.T = 0.5;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = RunConfig{};
  c.core_cells = c.cells;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = RunConfig{};
  c.theta_amplitude = "half";
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = RunConfig{};
  c.cells = 5;
  CHECK_THROWS_AS(validate(c), ConfigError);
}

TEST_CASE("environment overrides the output directory") {
  RunConfig c;
  ::setenv(output_dir_env, "/tmp/quench_env_dir", 1);
  apply_environment(c);
  CHECK(c.output_dir == "/tmp/quench_env_dir");
  ::unsetenv(output_dir_env);
  RunConfig d;
  apply_environment(d);
  CHECK(d.output_dir == "quench_out");
}

TEST_CASE("constants subcommand") {
  RunConfig c;
  std::ostringstream out, err;
  CHECK(cmd_constants(c, true, out, err) == exit_ok);
  const auto j = nlohmann::json::parse(out.str());
  const DerivedConstants dc = derive_constants(c.model);
  CHECK(j.at("beta").get<double>() == dc.beta);
  CHECK(j.at("b").get<double>() == dc.b);
  CHECK(j.at("theta_inf").get<double>() == dc.theta_inf);
  CHECK(j.at("theta_inf_full").get<double>() == dc.theta_inf_full);
  CHECK(j.at("kappa").get<double>() == dc.kappa);
  CHECK(j.at("a").get<double>() == dc.a);

  std::ostringstream table, terr;
  CHECK(cmd_constants(c, false, table, terr) == exit_ok);
  CHECK(table.str().find("theta_inf") != std::string::npos);

  c.model.q = 1.5;
  std::ostringstream bad_out, bad_err;
  CHECK(cmd_constants(c, false, bad_out, bad_err) == exit_config);
  CHECK(bad_err.str().find("q < 2/N") != std::string::npos);
}

TEST_CASE("run stopped by t_max skips diagnostics and exits 0") {
  TempDir tmp("tmax");
  RunConfig c = small_config(tmp.path / "run");
  c.t_max = 1e-12;
  std::ostringstream out, err;
  CHECK(cmd_run(c, out, err) == exit_ok);
  const auto summary = nlohmann::json::parse(slurp(tmp.path / "run" / "summary.json"));
  CHECK(summary.at("run").at("termination").get<std::string>() == "time_limit");
  CHECK(out.str().find("diagnostics skipped") != std::string::npos);
}

TEST_CASE("run rejects a supercritical q with exit 2") {
  TempDir tmp("super");
  RunConfig c = small_config(tmp.path / "run");
  c.model.q = 1.5;
  std::ostringstream out, err;
  CHECK(cmd_run(c, out, err) == exit_config);
}

TEST_CASE("runs are deterministic and diagnose reproduces the stored diagnostics") {
  TempDir tmp("det");
  std::ostringstream out, err;
  REQUIRE(cmd_run(small_config(tmp.path / "a"), out, err) == exit_ok);
  REQUIRE(cmd_run(small_config(tmp.path / "b"), out, err) == exit_ok);
  for (const char* name : {"trajectory.csv", "snapshots.csv", "profile_0.csv", "profile_error.csv", "modes.csv",
                           "laws.json"}) {
    CAPTURE(name);
    CHECK(slurp(tmp.path / "a" / name) == slurp(tmp.path / "b" / name));
  }
  CHECK(slurp(tmp.path / "a" / "trajectory.csv").rfind(
            "t,theta,u_max,u_center,dt,t_lo,tau,norm_r,grad_integral,reaction_integral,step\n", 0) == 0);
  CHECK(slurp(tmp.path / "a" / "snapshots.csv").rfind("index,t,theta,u_max,nodes,file,t_lo\n", 0) == 0);

  const std::string laws = slurp(tmp.path / "a" / "laws.json");
  const std::string modes = slurp(tmp.path / "a" / "modes.csv");
  fs::remove(tmp.path / "a" / "laws.json");
  std::ostringstream dout, derr;
  CHECK(cmd_diagnose(tmp.path / "a", dout, derr) == exit_ok);
  CHECK(slurp(tmp.path / "a" / "laws.json") == laws);
  CHECK(slurp(tmp.path / "a" / "modes.csv") == modes);

  const RunRecord back = read_run(tmp.path / "a");
  CHECK(back.trajectory.reason == Termination::quench);
  CHECK(serialize_config(back.config) == slurp(tmp.path / "a" / "config.txt"));

  std::ostringstream mout, merr;
  CHECK(cmd_diagnose(tmp.path / "missing", mout, merr) != exit_ok);
}

TEST_CASE("selftest passes and each mutation is caught") {
  std::ostringstream out, err;
  CHECK(cmd_selftest({}, out, err) == exit_ok);
  std::size_t pass_lines = 0;
  std::istringstream lines(out.str());
  for (std::string line; std::getline(lines, line);) pass_lines += line.rfind("PASS ", 0) == 0;
  CHECK(pass_lines == run_selftest().size());

  const OracleResult bubble = oracle_bubble(-1.0);
  CHECK(bubble.name == "bubble_integral");
  CHECK_FALSE(bubble.pass);
  SelfTestOptions flipped;
  flipped.b_multiplier = -1.0;
  std::ostringstream fout, ferr;
  CHECK(cmd_selftest(flipped, fout, ferr) != exit_ok);
  CHECK(ferr.str().find("failed oracle bubble_integral") != std::string::npos);

  const OracleResult coarse = oracle_manufactured(4);
  CHECK(coarse.name == "manufactured_order");
  CHECK_FALSE(coarse.pass);
}

TEST_CASE("sweep argument errors and partial failure") {
  TempDir tmp("sweep");
  RunConfig c = small_config(tmp.path / "sweep");
  std::ostringstream out, err;
  CHECK(cmd_sweep(c, {}, 1, out, err) == exit_config);
  CHECK(cmd_sweep(c, {SweepAxis{"q", {}}}, 1, out, err) == exit_config);
  CHECK(cmd_sweep(c, {SweepAxis{"nonsense", {1.0}}}, 1, out, err) == exit_config);
  CHECK_THROWS_AS(parse_sweep_axis("q"), ConfigError);
  CHECK_THROWS_AS(parse_sweep_axis("q=0.1,abc"), ConfigError);
  const SweepAxis axis = parse_sweep_axis("q = 0.1, 1.5");
  CHECK(axis.key == "q");
  CHECK(axis.values == std::vector<double>{0.1, 1.5});

  std::ostringstream sout, serr;
  CHECK(cmd_sweep(c, {axis}, 2, sout, serr) == exit_ok);
  const std::string table = slurp(tmp.path / "sweep" / "sweep.csv");
  std::istringstream rows(table);
  std::string header, first, second;
  std::getline(rows, header);
  std::getline(rows, first);
  std::getline(rows, second);
  CHECK(header.rfind("index,q,status,reason,T_est,beta_emp", 0) == 0);
  CHECK(first.find(",ok,quench,") != std::string::npos);
  CHECK(second.find(",failed,error,") != std::string::npos);
  CHECK(fs::exists(tmp.path / "sweep" / "run_000" / "summary.json"));

  std::ostringstream aout, aerr;
  CHECK(cmd_sweep(c, {SweepAxis{"q", {1.5, 2.0}}}, 1, aout, aerr) == exit_failure);
}
