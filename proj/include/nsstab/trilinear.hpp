#pragma once

#include "nsstab/field.hpp"
#include "nsstab/space_norm.hpp"

namespace nsstab {

struct TrilinearResult
{
  double value = 0.0;
  /// |b(f,g,h) + b(f,h,g)| / (2 ||f||_2 ||grad g||_2 ||grad h||_2), or 0 when
  /// the scale vanishes.
  double antisymmetry_residual = 0.0;
  /// False when f failed the divergence check; the identities then do not
  /// apply but the value is still computed.
  bool divergence_free_input = true;
};

/// b(f,g,h) = int (f . grad) g . h dx, as grid quadrature of the product
/// (f . grad g) . h. On the dealiased mode set the quadrature is exact.
double b_value(const SpectralVectorField& f, const SpectralVectorField& g, const SpectralVectorField& h);

/// Same form evaluated in Fourier space: the retained coefficients of
/// (f . grad) g paired with h.
double b_value_fourier(const SpectralVectorField& f, const SpectralVectorField& g, const SpectralVectorField& h);

/// b(f,g,h) together with the antisymmetry residual from b(f,h,g).
TrilinearResult b_form(const SpectralVectorField& f, const SpectralVectorField& g, const SpectralVectorField& h);

/// (f . grad) g, truncated to the retained modes (not projected).
SpectralVectorField advective_term(const SpectralVectorField& f, const SpectralVectorField& g);

/// |b(g,h,W)| / (||W||_X ||grad g||_2 ||grad h||_2). Throws std::domain_error
/// when the denominator vanishes.
double b_against_multiplier(const SpectralVectorField& g, const SpectralVectorField& h,
                            const SpectralVectorField& W, const SpaceNorm& space, const NormOptions& opts = {});

} // namespace nsstab
