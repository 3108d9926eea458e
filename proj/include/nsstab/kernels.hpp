#pragma once

// Data-parallel inner loops shared by the spectral operations. Every kernel is
// templated on an execution policy: exec::Serial is the reference used for
// bitwise-reproducible runs and for testing, exec::OpenMP is the threaded
// variant. Both must agree to roundoff.

#include "nsstab/exec.hpp"
#include "nsstab/field.hpp"
#include "nsstab/grid.hpp"

#include <cmath>
#include <span>

namespace nsstab::kernels {

/// c <- (I - xi xi^T/|xi|^2) c on every mode.
template <class P>
void leray(P policy, std::span<const Mode> modes, std::span<cplx> c)
{
  exec::for_each(policy, modes.size(), [&](std::size_t m) {
    const auto& xi = modes[m].xi;
    cplx* v = c.data() + 3 * m;
    const cplx dot = xi[0] * v[0] + xi[1] * v[1] + xi[2] * v[2];
    const cplx s = dot / modes[m].xi_sq;
    v[0] -= s * xi[0];
    v[1] -= s * xi[1];
    v[2] -= s * xi[2];
  });
}

/// c_m <- symbol[m] * c_m for all three components.
template <class P>
void scale_modes(P policy, std::span<const double> symbol, std::span<cplx> c)
{
  exec::for_each(policy, symbol.size(), [&](std::size_t m) {
    c[3 * m] *= symbol[m];
    c[3 * m + 1] *= symbol[m];
    c[3 * m + 2] *= symbol[m];
  });
}

/// sum_m weight_m symbol_m Re(a_m . conj b_m); the caller supplies L^3.
template <class P>
double mode_inner(P policy, std::span<const Mode> modes, std::span<const double> symbol,
                  std::span<const cplx> a, std::span<const cplx> b)
{
  return exec::sum(policy, modes.size(), [&](std::size_t m) {
    double acc = 0.0;
    for (int j = 0; j < 3; ++j)
      acc += a[3 * m + j].real() * b[3 * m + j].real() + a[3 * m + j].imag() * b[3 * m + j].imag();
    return modes[m].weight * symbol[m] * acc;
  });
}

/// out_j = sum_i a_i d_i g_j with grad[3*i + j] = d_i g_j.
template <class P>
void advective_product(P policy, const std::array<std::vector<double>, 3>& a,
                       const std::array<std::vector<double>, 9>& grad,
                       std::array<std::vector<double>, 3>& out)
{
  exec::for_each(policy, a[0].size(), [&](std::size_t x) {
    const double a0 = a[0][x], a1 = a[1][x], a2 = a[2][x];
    for (int j = 0; j < 3; ++j)
      out[j][x] = a0 * grad[j][x] + a1 * grad[3 + j][x] + a2 * grad[6 + j][x];
  });
}

/// Symmetric flux tensor T = w (x) w + w (x) v + v (x) w, stored as the six
/// entries (00, 11, 22, 01, 02, 12).
template <class P>
void perturbation_flux(P policy, const std::array<std::vector<double>, 3>& w,
                       const std::array<std::vector<double>, 3>& v,
                       std::array<std::vector<double>, 6>& out)
{
  static constexpr int ii[6] = {0, 1, 2, 0, 0, 1};
  static constexpr int jj[6] = {0, 1, 2, 1, 2, 2};
  exec::for_each(policy, w[0].size(), [&](std::size_t x) {
    for (int e = 0; e < 6; ++e) {
      const double wi = w[ii[e]][x], wj = w[jj[e]][x];
      out[e][x] = wi * wj + wi * v[jj[e]][x] + v[ii[e]][x] * wj;
    }
  });
}

/// sum_x f(x) . g(x) without the cell volume.
template <class P>
double grid_dot(P policy, const std::array<std::vector<double>, 3>& f,
                const std::array<std::vector<double>, 3>& g)
{
  return exec::sum(policy, f[0].size(), [&](std::size_t x) {
    return f[0][x] * g[0][x] + f[1][x] * g[1][x] + f[2][x] * g[2][x];
  });
}

/// max_x |f(x)|.
template <class P>
double grid_max_magnitude(P policy, const std::array<std::vector<double>, 3>& f)
{
  return exec::max(policy, f[0].size(), [&](std::size_t x) {
    return std::sqrt(f[0][x] * f[0][x] + f[1][x] * f[1][x] + f[2][x] * f[2][x]);
  });
}

/// max_x (|f(x)| + |g(x)|), the advective speed bound.
template <class P>
double grid_max_speed_sum(P policy, const std::array<std::vector<double>, 3>& f,
                          const std::array<std::vector<double>, 3>& g)
{
  return exec::max(policy, f[0].size(), [&](std::size_t x) {
    return std::sqrt(f[0][x] * f[0][x] + f[1][x] * f[1][x] + f[2][x] * f[2][x]) +
           std::sqrt(g[0][x] * g[0][x] + g[1][x] * g[1][x] + g[2][x] * g[2][x]);
  });
}

/// sum_x |f(x)|^p without the cell volume.
template <class P>
double grid_sum_pow(P policy, const std::array<std::vector<double>, 3>& f, double p)
{
  return exec::sum(policy, f[0].size(), [&](std::size_t x) {
    const double m = std::sqrt(f[0][x] * f[0][x] + f[1][x] * f[1][x] + f[2][x] * f[2][x]);
    return std::pow(m, p);
  });
}

} // namespace nsstab::kernels
