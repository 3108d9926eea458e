#include "nsstab/trilinear.hpp"

#include "nsstab/kernels.hpp"
#include "nsstab/spectral_ops.hpp"

#include <cmath>
#include <stdexcept>

namespace nsstab {

namespace {

constexpr double kDivergenceTol = 1e-12;

PhysicalVectorField advective_physical(const SpectralVectorField& f, const SpectralVectorField& g)
{
  const auto fp = to_physical(f);
  const auto grad = gradient_physical(g);
  PhysicalVectorField out(f.grid());
  exec::dispatch([&](auto p) { kernels::advective_product(p, fp.comps, grad.comps, out.comps); });
  return out;
}

} // namespace

double b_value(const SpectralVectorField& f, const SpectralVectorField& g, const SpectralVectorField& h)
{
  if (!f.same_grid(g) || !f.same_grid(h))
    throw GridMismatch("b_value");
  return physical_inner(advective_physical(f, g), to_physical(h));
}

double b_value_fourier(const SpectralVectorField& f, const SpectralVectorField& g, const SpectralVectorField& h)
{
  if (!f.same_grid(g) || !f.same_grid(h))
    throw GridMismatch("b_value_fourier");
  return l2_inner(advective_term(f, g), h);
}

SpectralVectorField advective_term(const SpectralVectorField& f, const SpectralVectorField& g)
{
  if (!f.same_grid(g))
    throw GridMismatch("advective_term");
  return to_spectral(advective_physical(f, g));
}

TrilinearResult b_form(const SpectralVectorField& f, const SpectralVectorField& g, const SpectralVectorField& h)
{
  TrilinearResult r;
  r.divergence_free_input = f.divergence_residual() <= kDivergenceTol;
  r.value = b_value(f, g, h);
  const double swapped = b_value(f, h, g);
  const double scale = 2.0 * l2_norm(f) * std::sqrt(gradient_norm_sq(g) * gradient_norm_sq(h));
  r.antisymmetry_residual = scale > 0.0 ? std::abs(r.value + swapped) / scale : 0.0;
  return r;
}

double b_against_multiplier(const SpectralVectorField& g, const SpectralVectorField& h,
                            const SpectralVectorField& W, const SpaceNorm& space, const NormOptions& opts)
{
  const double denom = norm(W, space, opts) * std::sqrt(gradient_norm_sq(g) * gradient_norm_sq(h));
  if (!(denom > 0.0) || !std::isfinite(denom))
    throw std::domain_error("b_against_multiplier: vanishing denominator");
  return std::abs(b_value(g, h, W)) / denom;
}

} // namespace nsstab
