#pragma once

#include "nsstab/grid.hpp"
#include "nsstab/space_norm.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsstab {

enum class Scenario { ZeroV, SmallStationaryV, SelfSimilarV, CalderonSplit };

std::string to_string(Scenario s);
Scenario parse_scenario(const std::string& text);

/// Flat experiment description. Every field maps to a YAML key of the same name.
struct ExperimentConfig
{
  // Grid.
  double L = GridSpec{}.box_length;
  int N = 64;
  double dealias = 2.0 / 3.0;

  Scenario scenario = Scenario::ZeroV;
  SpaceNorm space = SpaceNorm::of(SpaceNorm::Tag::WeightedLinfty);
  /// Background amplitude: max velocity of V0 (small_stationary_V) or the
  /// profile amplitude (self_similar_V).
  double amplitude = 0.1;
  std::uint64_t seed = 1;
  double t_max = 1.0;
  double dt = 0.05;
  double alpha = 3.0;
  int hardy_trials = 60;
  std::string output_dir = "nsstab_out";
  /// Steps between checkpoints (0: only the final one).
  int checkpoint_every = 0;

  // Perturbation data.
  double w0_rms = 0.05;
  double w0_spectrum_exponent = 2.0;
  double w0_kmin = 0.0;
  double V_spectrum_exponent = 2.5;

  // Mild solution.
  /// Horizon of the Picard time grid (0: use t_max).
  double mild_horizon = 0.0;
  int mild_slices = 16;
  int picard_max_iters = 20;
  double picard_tol = 1e-10;

  // Calderon split.
  double calderon_R = 0.05;
  double u0_amplitude = 1.0;

  // Evolution and diagnostics.
  int store_every = 1;
  /// Galerkin radius (0: no truncation).
  double galerkin_m = 0.0;
  std::string quadrature = "exponential";
  int gen_energy_pairs = 10;
  /// Required ||w(t_max)|| / ||w0|| (0: decay is reported but not enforced).
  double decay_threshold = 0.0;
  double transient_fraction = 0.2;
  int morrey_center_stride = 4;

  GridSpec grid() const { return {L, N, dealias}; }

  /// Throws ConfigError naming the offending field.
  void validate() const;

  bool operator==(const ExperimentConfig&) const = default;
};

class ConfigError : public std::runtime_error
{
public:
  ConfigError(const std::string& field, int line, const std::string& message);
  const std::string& field() const { return field_; }
  const std::string& message() const { return message_; }
  /// 1-based line, or 0 when unknown.
  int line() const { return line_; }

private:
  std::string field_;
  std::string message_;
  int line_;
};

/// Parses and validates. Missing keys keep their defaults; errors carry the
/// offending key and its line.
ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string to_yaml(const ExperimentConfig& config);

/// The output directory after applying the NSSTAB_OUTPUT_DIR override.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

struct SuiteResult
{
  std::string name;
  bool passed = true;
  std::string detail;
};

struct RunSummary
{
  std::filesystem::path output_dir;
  std::vector<SuiteResult> suites;
  bool completed = false;
  std::string failure;

  bool passed() const;
  int exit_status() const { return passed() ? 0 : 1; }
};

/// Hardy stage, background construction, admissibility, evolution,
/// diagnostics and decay report. Writes config.yaml, hardy.csv, ledger.csv,
/// diagnostics.csv, report.txt and checkpoints/ under the output directory.
/// Stage failures are recorded in the summary and partial artifacts are kept.
RunSummary run_experiment(const ExperimentConfig& config);

/// Continues the run stored in `checkpoint` for `extra_time` more time units
/// and rewrites the artifact set. The ledger carries over from the checkpoint;
/// the diagnostics cover the replayed segment. Throws CheckpointError for
/// unreadable checkpoints before touching any output.
RunSummary replay_experiment(const std::filesystem::path& checkpoint, double extra_time);

} // namespace nsstab
