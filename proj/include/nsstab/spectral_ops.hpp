#pragma once

#include "nsstab/field.hpp"

#include <array>
#include <functional>
#include <vector>

namespace nsstab {

/// Real symbol evaluated per retained mode.
using Symbol = std::function<double(const Mode&)>;

/// Orthogonal projection onto divergence-free fields, symbol I - xi xi^T/|xi|^2.
SpectralVectorField leray_project(const SpectralVectorField& f);

/// exp(t Delta) f. Throws std::invalid_argument for t < 0.
SpectralVectorField heat_semigroup(const SpectralVectorField& f, double t);

/// ||grad f||_2^2 = L^3 sum_k |xi|^2 |c_k|^2 over the full (Hermitian) spectrum.
double gradient_norm_sq(const SpectralVectorField& f);

/// L^2 inner product <f, g> = L^3 sum_k Re(c_f(k) . conj c_g(k)).
double l2_inner(const SpectralVectorField& f, const SpectralVectorField& g);
double l2_norm_sq(const SpectralVectorField& f);
double l2_norm(const SpectralVectorField& f);

/// L^3 sum_k symbol(k) Re(c_f(k) . conj c_g(k)).
double weighted_inner(const SpectralVectorField& f, const SpectralVectorField& g, const Symbol& symbol);

/// Coefficient-wise multiplication by a real symbol. Preserves the
/// divergence-free flag.
SpectralVectorField apply_symbol(const SpectralVectorField& f, const Symbol& symbol);

/// Sharp Fourier-ball projector: keeps modes with |k| <= radius (integer units).
SpectralVectorField truncate_ball(const SpectralVectorField& f, double radius);

/// Periodized heat kernel at time s: the kernel whose convolution multiplies
/// each mode by exp(-s|xi|^2). s = 1 is the mollifier phi with
/// Fourier symbol exp(-|xi|^2).
ScalarField heat_kernel(const GridSpec& grid, double s);

/// Componentwise convolution kernel * f, computed as L^3 kernel_k f_k.
SpectralVectorField convolve(const ScalarField& kernel, const SpectralVectorField& f);

/// Samples of f on the grid (inverse FFT of the retained coefficients).
PhysicalVectorField to_physical(const SpectralVectorField& f);

/// Forward FFT of grid samples, keeping the retained modes. The mean and the
/// discarded modes are dropped.
SpectralVectorField to_spectral(const PhysicalVectorField& f);

/// Nine grid samples d_i f_j stored at index 3*i + j.
struct PhysicalTensorField
{
  GridSpec grid;
  std::array<std::vector<double>, 9> comps;

  explicit PhysicalTensorField(const GridSpec& g)
    : grid(g)
  {
    for (auto& c : comps)
      c.assign(g.physical_size(), 0.0);
  }
};

PhysicalTensorField gradient_physical(const SpectralVectorField& f);

/// curl f in spectral space.
SpectralVectorField curl(const SpectralVectorField& f);

/// Physical-space L^2 quadrature of f . g with cell volume (L/N)^3.
double physical_inner(const PhysicalVectorField& f, const PhysicalVectorField& g);

/// max |f(x)| over the grid.
double max_magnitude(const PhysicalVectorField& f);

} // namespace nsstab
