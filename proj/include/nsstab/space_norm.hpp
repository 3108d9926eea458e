#pragma once

#include "nsstab/field.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nsstab {

/// One of the six scale-invariant spaces used as the home of the background
/// flow V. Only Morrey3p carries an exponent p in (2, 3].
struct SpaceNorm
{
  enum class Tag { SobolevHalf, Lebesgue3, WeightedLinfty, LeJanSznitman, Marcinkiewicz3, Morrey3p };

  Tag tag = Tag::Lebesgue3;
  std::optional<double> p;

  /// Throws std::invalid_argument if p is missing for Morrey3p, present for
  /// other tags, or outside (2, 3].
  void validate() const;

  /// Parses "sobolev_half", "lebesgue3", "weighted_linfty", "le_jan_sznitman",
  /// "marcinkiewicz3" or "morrey3p:<p>".
  static SpaceNorm parse(const std::string& text);
  std::string to_string() const;

  static SpaceNorm morrey(double p) { return {Tag::Morrey3p, p}; }
  static SpaceNorm of(Tag t) { return {t, std::nullopt}; }

  friend bool operator==(const SpaceNorm&, const SpaceNorm&) = default;
};

struct NormOptions
{
  /// Morrey centers are taken on every `morrey_center_stride`-th grid point per
  /// axis. With stride 1 every grid point is a center.
  int morrey_center_stride = 4;
};

/// Discrete evaluation of ||f||_X. Physical-space norms use the grid samples
/// at box-centered coordinates.
double norm(const SpectralVectorField& f, const SpaceNorm& space, const NormOptions& opts = {});

/// |f(x)| at every grid point.
std::vector<double> sample_magnitudes(const SpectralVectorField& f);

/// Weak-L^3 quasi-norm by a sweep over the distinct sample levels.
double marcinkiewicz3_level_sweep(std::vector<double> magnitudes, double cell_volume);
/// Weak-L^3 quasi-norm as max_n a_(n) (n * cell_volume)^(1/3) over the
/// decreasing rearrangement a_(1) >= a_(2) >= ...
double marcinkiewicz3_order_statistic(std::vector<double> magnitudes, double cell_volume);

/// Morrey norm sup_{x,R} R^(1-3/p) (int_{B_R(x)} |f|^p)^(1/p) over dyadic radii
/// R = h 2^j <= L/2. Ball integrals for all centers come from one periodic
/// FFT convolution per radius.
double morrey_norm(const SpectralVectorField& f, double p, int center_stride = 4);

/// Sharp constant of ||f||_6 <= C ||grad f||_2 in three dimensions.
double sobolev_constant();

} // namespace nsstab
