#include "nsstab/nonlinear.hpp"

#include "nsstab/fft.hpp"
#include "nsstab/kernels.hpp"
#include "nsstab/spectral_ops.hpp"

namespace nsstab {

SpectralVectorField projected_flux_divergence(const SpectralVectorField& w, const SpectralVectorField* V,
                                              double* max_speed)
{
  if (V != nullptr && !w.same_grid(*V))
    throw GridMismatch("projected_flux_divergence");
  const auto& grid = w.grid();
  const auto wp = to_physical(w);
  std::array<std::vector<double>, 6> flux;
  for (auto& c : flux)
    c.resize(grid.physical_size());
  const PhysicalVectorField vp = V != nullptr ? to_physical(*V) : PhysicalVectorField(grid);
  exec::dispatch([&](auto p) {
    kernels::perturbation_flux(p, wp.comps, vp.comps, flux);
    if (max_speed != nullptr)
      *max_speed = kernels::grid_max_speed_sum(p, wp.comps, vp.comps);
  });

  // Entry e of the symmetric tensor holds (ii[e], jj[e]).
  static constexpr int ii[6] = {0, 1, 2, 0, 0, 1};
  static constexpr int jj[6] = {0, 1, 2, 1, 2, 2};
  SpectralVectorField out(w.table_ptr());
  const auto modes = out.table().modes();
  auto oc = out.coeffs();
  const double scale = 1.0 / static_cast<double>(grid.physical_size());
  std::vector<cplx> half(grid.spectral_size());
  auto& fft = FftEngine::for_grid(grid);
  for (int e = 0; e < 6; ++e) {
    fft.forward(flux[e], half);
    const int i = ii[e], j = jj[e];
    for (std::size_t m = 0; m < modes.size(); ++m) {
      const cplx t = half[modes[m].slot] * scale;
      // (div T)_j = sum_i i xi_i T_ij, with T symmetric.
      oc[3 * m + j] += cplx{0.0, modes[m].xi[i]} * t;
      if (i != j)
        oc[3 * m + i] += cplx{0.0, modes[m].xi[j]} * t;
    }
  }
  return leray_project(out);
}

} // namespace nsstab
