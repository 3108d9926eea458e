#include "nsstab/spectral_ops.hpp"

#include "nsstab/fft.hpp"
#include "nsstab/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace nsstab {

namespace {

std::vector<double> evaluate_symbol(const ModeTable& table, const Symbol& symbol)
{
  const auto modes = table.modes();
  std::vector<double> out(modes.size());
  for (std::size_t m = 0; m < modes.size(); ++m)
    out[m] = symbol(modes[m]);
  return out;
}

// Scatters one component of the retained coefficients (optionally multiplied
// by i*xi_dir) into the half spectrum and transforms back to the grid.
void component_to_grid(const SpectralVectorField& f, int comp, int deriv_dir, std::vector<double>& out)
{
  const auto& grid = f.grid();
  std::vector<cplx> half(grid.spectral_size(), cplx{0.0, 0.0});
  const auto modes = f.table().modes();
  const auto c = f.coeffs();
  for (std::size_t m = 0; m < modes.size(); ++m) {
    cplx v = c[3 * m + comp];
    if (deriv_dir >= 0)
      v *= cplx{0.0, modes[m].xi[deriv_dir]};
    half[modes[m].slot] = v;
  }
  out.resize(grid.physical_size());
  FftEngine::for_grid(grid).backward(half, out);
}

} // namespace

SpectralVectorField leray_project(const SpectralVectorField& f)
{
  SpectralVectorField out = f;
  exec::dispatch([&](auto p) { kernels::leray(p, out.table().modes(), out.coeffs()); });
  out.set_divergence_free(true);
  return out;
}

SpectralVectorField heat_semigroup(const SpectralVectorField& f, double t)
{
  if (!(t >= 0.0))
    throw std::invalid_argument("heat_semigroup: time must be non-negative");
  return apply_symbol(f, [t](const Mode& m) { return std::exp(-t * m.xi_sq); });
}

double gradient_norm_sq(const SpectralVectorField& f)
{
  return weighted_inner(f, f, [](const Mode& m) { return m.xi_sq; });
}

double l2_inner(const SpectralVectorField& f, const SpectralVectorField& g)
{
  if (!f.same_grid(g))
    throw GridMismatch("l2_inner");
  const auto modes = f.table().modes();
  const std::vector<double> ones(modes.size(), 1.0);
  const double s =
      exec::dispatch([&](auto p) { return kernels::mode_inner(p, modes, ones, f.coeffs(), g.coeffs()); });
  return f.grid().volume() * s;
}

double l2_norm_sq(const SpectralVectorField& f) { return l2_inner(f, f); }

double l2_norm(const SpectralVectorField& f) { return std::sqrt(l2_norm_sq(f)); }

double weighted_inner(const SpectralVectorField& f, const SpectralVectorField& g, const Symbol& symbol)
{
  if (!f.same_grid(g))
    throw GridMismatch("weighted_inner");
  const auto sym = evaluate_symbol(f.table(), symbol);
  const double s = exec::dispatch(
      [&](auto p) { return kernels::mode_inner(p, f.table().modes(), sym, f.coeffs(), g.coeffs()); });
  return f.grid().volume() * s;
}

SpectralVectorField apply_symbol(const SpectralVectorField& f, const Symbol& symbol)
{
  SpectralVectorField out = f;
  const auto sym = evaluate_symbol(f.table(), symbol);
  exec::dispatch([&](auto p) { kernels::scale_modes(p, sym, out.coeffs()); });
  return out;
}

SpectralVectorField truncate_ball(const SpectralVectorField& f, double radius)
{
  return apply_symbol(f, [radius](const Mode& m) { return m.k_norm <= radius + 1e-12 ? 1.0 : 0.0; });
}

ScalarField heat_kernel(const GridSpec& grid, double s)
{
  if (!(s >= 0.0))
    throw std::invalid_argument("heat_kernel: time must be non-negative");
  ScalarField k(grid);
  const auto modes = k.table().modes();
  const double inv_vol = 1.0 / grid.volume();
  for (std::size_t m = 0; m < modes.size(); ++m)
    k.coeffs()[m] = std::exp(-s * modes[m].xi_sq) * inv_vol;
  return k;
}

SpectralVectorField convolve(const ScalarField& kernel, const SpectralVectorField& f)
{
  if (!(kernel.grid() == f.grid()))
    throw GridMismatch("convolve");
  SpectralVectorField out = f;
  const double vol = f.grid().volume();
  const auto kc = kernel.coeffs();
  auto oc = out.coeffs();
  for (std::size_t m = 0; m < out.mode_count(); ++m)
    for (int j = 0; j < 3; ++j)
      oc[3 * m + j] *= vol * kc[m];
  return out;
}

PhysicalVectorField to_physical(const SpectralVectorField& f)
{
  PhysicalVectorField out(f.grid());
  for (int j = 0; j < 3; ++j)
    component_to_grid(f, j, -1, out.comps[j]);
  return out;
}

SpectralVectorField to_spectral(const PhysicalVectorField& f)
{
  SpectralVectorField out(f.grid);
  const auto modes = out.table().modes();
  const double scale = 1.0 / static_cast<double>(f.grid.physical_size());
  std::vector<cplx> half(f.grid.spectral_size());
  auto& fft = FftEngine::for_grid(f.grid);
  auto oc = out.coeffs();
  for (int j = 0; j < 3; ++j) {
    fft.forward(f.comps[j], half);
    for (std::size_t m = 0; m < modes.size(); ++m)
      oc[3 * m + j] = half[modes[m].slot] * scale;
  }
  out.set_divergence_free(false);
  return out;
}

PhysicalTensorField gradient_physical(const SpectralVectorField& f)
{
  PhysicalTensorField out(f.grid());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      component_to_grid(f, j, i, out.comps[3 * i + j]);
  return out;
}

SpectralVectorField curl(const SpectralVectorField& f)
{
  SpectralVectorField out(f.table_ptr());
  const auto modes = f.table().modes();
  const auto c = f.coeffs();
  auto o = out.coeffs();
  const cplx I{0.0, 1.0};
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const auto& xi = modes[m].xi;
    const cplx* v = c.data() + 3 * m;
    o[3 * m + 0] = I * (xi[1] * v[2] - xi[2] * v[1]);
    o[3 * m + 1] = I * (xi[2] * v[0] - xi[0] * v[2]);
    o[3 * m + 2] = I * (xi[0] * v[1] - xi[1] * v[0]);
  }
  out.set_divergence_free(true);
  return out;
}

double physical_inner(const PhysicalVectorField& f, const PhysicalVectorField& g)
{
  if (!(f.grid == g.grid))
    throw GridMismatch("physical_inner");
  const double s = exec::dispatch([&](auto p) { return kernels::grid_dot(p, f.comps, g.comps); });
  return s * f.grid.cell_volume();
}

double max_magnitude(const PhysicalVectorField& f)
{
  return exec::dispatch([&](auto p) { return kernels::grid_max_magnitude(p, f.comps); });
}

} // namespace nsstab
