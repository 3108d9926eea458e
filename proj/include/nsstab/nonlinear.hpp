#pragma once

#include "nsstab/field.hpp"

namespace nsstab {

/// P div(w (x) w + w (x) V + V (x) w) on the retained modes, with the products
/// formed on the grid. Pass V = nullptr for the pure self-interaction
/// P div(w (x) w). For divergence-free inputs this equals
/// P[(w.grad)w + (w.grad)V + (V.grad)w]. If `max_speed` is given it receives
/// max_x (|w(x)| + |V(x)|) from the same grid samples.
SpectralVectorField projected_flux_divergence(const SpectralVectorField& w, const SpectralVectorField* V,
                                              double* max_speed = nullptr);

} // namespace nsstab
