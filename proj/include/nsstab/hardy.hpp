#pragma once

#include "nsstab/field.hpp"
#include "nsstab/space_norm.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace nsstab {

struct HardySample
{
  int trial_index = 0;
  double ratio = 0.0;
  double norm_W = 0.0;
  double grad_g = 0.0;
  double grad_h = 0.0;
};

struct HardyEstimate
{
  SpaceNorm space;
  int trials = 0;
  double K_hat = 0.0;
  std::vector<double> ratio_samples;
  std::vector<HardySample> samples;
  /// Draws discarded because ||grad g||, ||grad h|| or ||W||_X vanished.
  int rejected = 0;
};

/// Empirical constant in |b(g,h,W)| <= K ||W||_X ||grad g||_2 ||grad h||_2.
/// Each trial draws divergence-free g, h and a multiplier W from a rotating
/// set of families (broadband random fields, localized bumps near the
/// origin, degree -1 homogeneous profiles); every fourth group of trials uses
/// h = g. Deterministic in `seed`.
HardyEstimate estimate_hardy_constant(const SpaceNorm& space, const GridSpec& grid, int trials,
                                      std::uint64_t seed, const NormOptions& opts = {});

/// (int |g|^2/|x|^2 dx) / ||grad g||_2^2 with box-centered |x| and the origin
/// cell excluded. Throws std::domain_error when grad g vanishes.
double classical_hardy_ratio(const SpectralVectorField& g);

/// Columns trial_index,ratio,norm_W,grad_g,grad_h, then a "# K_hat" line.
void write_hardy_csv(const std::filesystem::path& path, const HardyEstimate& est);

} // namespace nsstab
