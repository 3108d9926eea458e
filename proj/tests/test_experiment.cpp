#include <doctest.h>

#include "nsstab/checkpoint.hpp"
#include "nsstab/exec.hpp"
#include "nsstab/experiment.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace nsstab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
  const auto dir = fs::temp_directory_path() / ("nsstab_test_experiment_" + name);
  fs::remove_all(dir);
  return dir;
}

ExperimentConfig tiny(const fs::path& out)
{
  ExperimentConfig c;
  c.N = 16;
  c.t_max = 1.0;
  c.dt = 0.05;
  c.hardy_trials = 10;
  c.output_dir = out.string();
  return c;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct SerialGuard
{
  exec::ScopedMode mode{exec::Mode::Serial};
  SerialGuard() { unsetenv("NSSTAB_OUTPUT_DIR"); }
};

} // namespace

TEST_CASE("config round trip")
{
  ExperimentConfig c;
  c.L = 1.0 / 3.0;
  c.N = 32;
  c.scenario = Scenario::CalderonSplit;
  c.space = SpaceNorm::morrey(2.75);
  c.amplitude = 0.123456789012345678;
  c.seed = 18446744073709551615ull;
  c.t_max = 2.0;
  c.dt = 0.1;
  c.quadrature = "trapezoid";
  c.output_dir = "some dir/with: colon";
  const auto back = parse_config(to_yaml(c));
  CHECK(back == c);
  CHECK(to_yaml(back) == to_yaml(c));
  CHECK(parse_config("") == ExperimentConfig{});
}

TEST_CASE("config errors name the key and line")
{
  auto expect = [](const std::string& text, const std::string& field, int line) {
    try {
      parse_config(text);
      FAIL("expected ConfigError for: " << text);
    } catch (const ConfigError& e) {
      CHECK(e.field() == field);
      CHECK(e.line() == line);
    }
  };
  expect("N: 16\nbogus: 1\n", "bogus", 2);
  expect("N: 16\nt_max: 1\ndt: fast\n", "dt", 3);
  expect("scenario: zero_V\n\nscenario: zero_V\n", "scenario", 3);
  expect("N: 16\nscenario: turbulent\n", "scenario", 2);
  expect("space: morrey3p:4\n", "space", 1);
  expect("N: 16\nt_max: 1\ndt: 0.3\n", "t_max", 2);
  expect("N: 15\n", "N", 1);
  expect("seed: [1, 2]\n", "seed", 1);
  expect("N: 16\n  dt: : :\n", "", 2);
}

TEST_CASE("output directory override")
{
  ExperimentConfig c;
  c.output_dir = "from_config";
  unsetenv("NSSTAB_OUTPUT_DIR");
  CHECK(resolve_output_dir(c) == fs::path("from_config"));
  setenv("NSSTAB_OUTPUT_DIR", "from_env", 1);
  CHECK(resolve_output_dir(c) == fs::path("from_env"));
  unsetenv("NSSTAB_OUTPUT_DIR");
}

TEST_CASE("zero background smoke run")
{
  SerialGuard guard;
  const auto out = scratch("smoke");
  const auto start = std::chrono::steady_clock::now();
  const auto summary = run_experiment(tiny(out));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(seconds < 10.0);
  CHECK(summary.completed);
  CHECK(summary.passed());
  CHECK(summary.exit_status() == 0);
  for (const char* f : {"config.yaml", "hardy.csv", "ledger.csv", "diagnostics.csv", "report.txt", "checkpoints/final.ckpt"})
    CHECK(fs::exists(out / f));
  CHECK(slurp(out / "report.txt").find("RESULT PASS") != std::string::npos);
  CHECK(parse_config(slurp(out / "config.yaml")) == tiny(out));
  fs::remove_all(out);
}

TEST_CASE("every scenario runs at small amplitude")
{
  SerialGuard guard;
  for (auto sc : {Scenario::SmallStationaryV, Scenario::SelfSimilarV, Scenario::CalderonSplit}) {
    CAPTURE(to_string(sc));
    const auto out = scratch(to_string(sc));
    auto c = tiny(out);
    c.scenario = sc;
    c.amplitude = 0.1;
    const auto summary = run_experiment(c);
    CHECK(summary.completed);
    CHECK(summary.passed());
    fs::remove_all(out);
  }
}

TEST_CASE("large self-similar data fails cleanly")
{
  SerialGuard guard;
  const auto out = scratch("picard_failure");
  auto c = tiny(out);
  c.scenario = Scenario::SelfSimilarV;
  c.amplitude = 300.0;
  const auto summary = run_experiment(c);
  CHECK_FALSE(summary.passed());
  CHECK(summary.exit_status() != 0);
  bool saw = false;
  for (const auto& s : summary.suites)
    if (s.name == "mild_contraction") {
      saw = true;
      CHECK_FALSE(s.passed);
      CHECK(s.detail.find("contract") != std::string::npos);
    }
  CHECK(saw);
  CHECK(fs::exists(out / "hardy.csv"));
  CHECK(slurp(out / "report.txt").find("RESULT FAIL") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("inadmissible background is reported")
{
  SerialGuard guard;
  const auto out = scratch("inadmissible");
  auto c = tiny(out);
  c.scenario = Scenario::SmallStationaryV;
  c.amplitude = 50.0;
  const auto summary = run_experiment(c);
  CHECK_FALSE(summary.passed());
  fs::remove_all(out);
}

TEST_CASE("serial runs are byte-identical")
{
  SerialGuard guard;
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  auto ca = tiny(a);
  ca.scenario = Scenario::SmallStationaryV;
  auto cb = ca;
  cb.output_dir = b.string();
  run_experiment(ca);
  run_experiment(cb);
  for (const char* f : {"hardy.csv", "ledger.csv", "diagnostics.csv"})
    CHECK(slurp(a / f) == slurp(b / f));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("replay continues a split run bitwise")
{
  SerialGuard guard;
  const auto whole = scratch("whole");
  const auto split = scratch("split");
  auto c = tiny(whole);
  c.scenario = Scenario::SmallStationaryV;
  c.t_max = 2.0;
  c.checkpoint_every = 10;
  run_experiment(c);
  CHECK(fs::exists(whole / "checkpoints/step_00000010.ckpt"));
  CHECK(fs::exists(whole / "checkpoints/step_00000040.ckpt"));

  auto half = c;
  half.t_max = 1.0;
  half.output_dir = split.string();
  run_experiment(half);
  const auto summary = replay_experiment(split / "checkpoints/final.ckpt", 1.0);
  CHECK(summary.passed());
  CHECK(slurp(split / "ledger.csv") == slurp(whole / "ledger.csv"));

  const auto before = slurp(whole / "ledger.csv");
  replay_experiment(whole / "checkpoints/final.ckpt", 0.0);
  CHECK(slurp(whole / "ledger.csv") == before);
  fs::remove_all(whole);
  fs::remove_all(split);
}

TEST_CASE("corrupt checkpoint is rejected before any output changes")
{
  SerialGuard guard;
  const auto out = scratch("corrupt");
  run_experiment(tiny(out));
  const auto ckpt = out / "checkpoints/final.ckpt";
  std::string bytes = slurp(ckpt);
  REQUIRE(bytes.size() > 300);
  bytes[bytes.size() / 2] ^= 0x5a;
  const auto bad = out / "bad.ckpt";
  std::ofstream(bad, std::ios::binary) << bytes;
  const auto ledger = slurp(out / "ledger.csv");
  const auto report = slurp(out / "report.txt");
  CHECK_THROWS_AS(replay_experiment(bad, 1.0), CheckpointError);
  CHECK(slurp(out / "ledger.csv") == ledger);
  CHECK(slurp(out / "report.txt") == report);
  CHECK_THROWS_AS(replay_experiment(out / "missing.ckpt", 1.0), CheckpointError);
  fs::remove_all(out);
}
