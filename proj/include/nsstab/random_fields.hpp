#pragma once

#include "nsstab/field.hpp"

#include <array>
#include <cstdint>
#include <functional>

namespace nsstab {

/// Hermitian, divergence-free, zero-mean field with |c_k| = (1+|k|)^(-exponent)
/// and seeded random phase and polarization. Deterministic in (grid, exponent,
/// seed); generation is always serial. Modes with |k| < k_min are left at
/// zero without changing the draws for the others. Throws for exponent <= 3/2
/// or negative k_min.
SpectralVectorField random_divfree_field(const GridSpec& grid, double spectrum_exponent,
                                         std::uint64_t seed, double k_min = 0.0);

/// Samples `f` at box-centered coordinates x in [-L/2, L/2)^3 and transforms.
/// The result is not projected.
SpectralVectorField sample_field(const GridSpec& grid,
                                 const std::function<std::array<double, 3>(const std::array<double, 3>&)>& f);

/// amplitude * exp(-|x - center|^2 / (2 width^2)) * direction.
SpectralVectorField gaussian_bump(const GridSpec& grid, const std::array<double, 3>& center,
                                  double width, const std::array<double, 3>& direction);

/// Divergence-free bump: curl of a Gaussian vector potential, rescaled to unit
/// maximal speed.
SpectralVectorField solenoidal_bump(const GridSpec& grid, const std::array<double, 3>& center,
                                    double width, std::uint64_t seed);

/// amplitude * sigma(x/|x|) / sqrt(|x|^2 + h^2) times a smooth radial cutoff
/// that is 1 for |x| <= 3L/8 and vanishes at |x| = L/2, with h the grid
/// spacing. The profile sigma(w) = w x (a + (c.w) b + (b.w) c), with seeded
/// unit vectors a, b, c, is tangential and surface-divergence-free, so the
/// continuum field is solenoidal. Not projected.
SpectralVectorField homogeneous_profile(const GridSpec& grid, double amplitude, std::uint64_t seed);

/// max over the unit sphere of |sigma| for the profile with this seed
/// (dense angular sampling).
double homogeneous_profile_peak(std::uint64_t seed);

/// Root-mean-square velocity ||f||_2 / L^{3/2}.
double rms_velocity(const SpectralVectorField& f);

/// max_x |f(x)| on the grid.
double max_velocity(const SpectralVectorField& f);

} // namespace nsstab
