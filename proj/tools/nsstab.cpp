#include "nsstab/checkpoint.hpp"
#include "nsstab/exec.hpp"
#include "nsstab/experiment.hpp"
#include "nsstab/hardy.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

namespace {

void print_summary(const nsstab::RunSummary& s)
{
  for (const auto& suite : s.suites)
    std::printf("%-18s %s  %s\n", suite.name.c_str(), suite.passed ? "PASS" : "FAIL", suite.detail.c_str());
  if (!s.failure.empty())
    std::printf("failure: %s\n", s.failure.c_str());
  std::printf("output: %s\n", s.output_dir.string().c_str());
  std::printf("RESULT %s\n", s.passed() ? "PASS" : "FAIL");
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Perturbation stability experiments for periodic Navier-Stokes flows"};
  app.require_subcommand(1);

  int threads = 0;
  bool serial = false;
  app.add_option("--threads", threads, "OpenMP threads for kernels and FFTs")->check(CLI::PositiveNumber);
  app.add_flag("--serial", serial, "Run every kernel serially (bitwise deterministic)");

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment from a YAML config");
  run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);

  std::string checkpoint_path;
  double extra_time = 0.0;
  auto* replay = app.add_subcommand("replay", "Continue a run from a checkpoint");
  replay->add_option("checkpoint", checkpoint_path, "Checkpoint file")->required()->check(CLI::ExistingFile);
  replay->add_option("--extra-time", extra_time, "Additional simulated time")->required()->check(CLI::NonNegativeNumber);

  std::string space_text;
  int trials = 60;
  std::uint64_t seed = 1;
  int points = 32;
  std::string csv_path;
  auto* hardy = app.add_subcommand("hardy", "Estimate the trilinear Hardy constant for a space");
  hardy->add_option("space", space_text, "Space name, e.g. weighted_linfty or morrey3p:2.5")->required();
  hardy->add_option("--trials", trials, "Number of randomized trials")->check(CLI::PositiveNumber);
  hardy->add_option("--seed", seed, "Random seed");
  hardy->add_option("--N", points, "Grid points per axis")->check(CLI::PositiveNumber);
  hardy->add_option("--csv", csv_path, "Write per-trial samples to this file");

  CLI11_PARSE(app, argc, argv);

  if (threads > 0)
    nsstab::exec::set_threads(threads);
  if (serial)
    nsstab::exec::set_mode(nsstab::exec::Mode::Serial);

  try {
    if (*run) {
      const auto summary = nsstab::run_experiment(nsstab::load_config(config_path));
      print_summary(summary);
      return summary.exit_status();
    }
    if (*replay) {
      const auto summary = nsstab::replay_experiment(checkpoint_path, extra_time);
      print_summary(summary);
      return summary.exit_status();
    }
    nsstab::GridSpec grid;
    grid.points_per_axis = points;
    const auto est = nsstab::estimate_hardy_constant(nsstab::SpaceNorm::parse(space_text), grid, trials, seed);
    if (!csv_path.empty())
      nsstab::write_hardy_csv(csv_path, est);
    std::printf("space %s trials %d rejected %d K_hat %.17g\n", est.space.to_string().c_str(), est.trials,
                est.rejected, est.K_hat);
    return 0;
  } catch (const nsstab::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const nsstab::CheckpointError& e) {
    std::fprintf(stderr, "checkpoint error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
