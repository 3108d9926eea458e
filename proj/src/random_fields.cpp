#include "nsstab/random_fields.hpp"

#include "nsstab/spectral_ops.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace nsstab {

namespace {

using Vec3 = std::array<double, 3>;

Vec3 cross(const Vec3& a, const Vec3& b)
{
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 unit_vector(std::mt19937_64& rng)
{
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec3 v{};
  double n = 0.0;
  while (n < 1e-8) {
    v = {normal(rng), normal(rng), normal(rng)};
    n = std::sqrt(dot(v, v));
  }
  return {v[0] / n, v[1] / n, v[2] / n};
}

struct Profile
{
  Vec3 a, b, c;

  explicit Profile(std::uint64_t seed)
  {
    std::mt19937_64 rng(seed);
    a = unit_vector(rng);
    b = unit_vector(rng);
    c = unit_vector(rng);
  }

  // w x grad_S psi for psi(w) = a.w + (b.w)(c.w): tangential and free of
  // surface divergence, so sigma(x/|x|)/|x| is solenoidal away from 0.
  Vec3 operator()(const Vec3& w) const
  {
    const double bw = dot(b, w), cw = dot(c, w);
    const Vec3 v{a[0] + cw * b[0] + bw * c[0], a[1] + cw * b[1] + bw * c[1], a[2] + cw * b[2] + bw * c[2]};
    return cross(w, v);
  }
};

// C-infinity step from 1 (t <= 0) to 0 (t >= 1).
double smooth_step_down(double t)
{
  if (t <= 0.0)
    return 1.0;
  if (t >= 1.0)
    return 0.0;
  const double e0 = std::exp(-1.0 / t);
  const double e1 = std::exp(-1.0 / (1.0 - t));
  return e1 / (e0 + e1);
}

// Shortest periodic displacement from `c` to `x` along one axis.
double periodic_offset(double x, double c, double L)
{
  double d = x - c;
  d -= L * std::round(d / L);
  return d;
}

} // namespace

SpectralVectorField random_divfree_field(const GridSpec& grid, double spectrum_exponent, std::uint64_t seed,
                                         double k_min)
{
  if (!(spectrum_exponent > 1.5) || !std::isfinite(spectrum_exponent))
    throw std::invalid_argument("random_divfree_field: spectrum exponent must exceed 3/2");
  if (!(k_min >= 0.0))
    throw std::invalid_argument("random_divfree_field: k_min must be non-negative");
  SpectralVectorField f(grid);
  const auto& table = f.table();
  const auto modes = table.modes();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

  for (std::size_t m = 0; m < modes.size(); ++m) {
    const auto p = table.partner(m);
    if (p != ModeTable::npos && p < m)
      continue;
    const auto& xi = modes[m].xi;
    // Random real direction orthogonal to xi, rotated by a random phase.
    Vec3 d{normal(rng), normal(rng), normal(rng)};
    const double s = dot(d, xi) / modes[m].xi_sq;
    for (int j = 0; j < 3; ++j)
      d[j] -= s * xi[j];
    const double n = std::sqrt(dot(d, d));
    const double theta = phase(rng);
    if (n == 0.0 || modes[m].k_norm < k_min)
      continue;
    const double amp = std::pow(1.0 + modes[m].k_norm, -spectrum_exponent);
    const cplx rot = std::polar(amp / n, theta);
    for (int j = 0; j < 3; ++j) {
      f.at(m, j) = rot * d[j];
      if (p != ModeTable::npos)
        f.at(p, j) = std::conj(f.at(m, j));
    }
  }
  f.set_divergence_free(true);
  return f;
}

SpectralVectorField sample_field(const GridSpec& grid,
                                 const std::function<std::array<double, 3>(const std::array<double, 3>&)>& fn)
{
  PhysicalVectorField phys(grid);
  const int n = grid.points_per_axis;
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l, ++idx) {
        const Vec3 x{grid.centered_coordinate(i), grid.centered_coordinate(j), grid.centered_coordinate(l)};
        const Vec3 v = fn(x);
        for (int c = 0; c < 3; ++c)
          phys.comps[c][idx] = v[c];
      }
  return to_spectral(phys);
}

SpectralVectorField gaussian_bump(const GridSpec& grid, const std::array<double, 3>& center, double width,
                                  const std::array<double, 3>& direction)
{
  const double L = grid.box_length;
  return sample_field(grid, [&](const Vec3& x) {
    double r2 = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double d = periodic_offset(x[c], center[c], L);
      r2 += d * d;
    }
    const double g = std::exp(-r2 / (2.0 * width * width));
    return Vec3{g * direction[0], g * direction[1], g * direction[2]};
  });
}

SpectralVectorField solenoidal_bump(const GridSpec& grid, const std::array<double, 3>& center, double width,
                                    std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  const Vec3 a = unit_vector(rng);
  auto f = curl(gaussian_bump(grid, center, width, a));
  const double vmax = max_velocity(f);
  if (vmax > 0.0)
    f *= 1.0 / vmax;
  f.set_divergence_free(true);
  return f;
}

SpectralVectorField homogeneous_profile(const GridSpec& grid, double amplitude, std::uint64_t seed)
{
  const Profile sigma(seed);
  const double L = grid.box_length;
  const double r_in = 3.0 * L / 8.0, r_out = L / 2.0;
  const double h = grid.spacing();
  return sample_field(grid, [&](const Vec3& x) {
    const double r = std::sqrt(dot(x, x));
    if (r < 0.5 * h)
      return Vec3{0.0, 0.0, 0.0};
    const double cut = smooth_step_down((r - r_in) / (r_out - r_in));
    const Vec3 w{x[0] / r, x[1] / r, x[2] / r};
    const Vec3 s = sigma(w);
    const double scale = amplitude * cut / std::sqrt(r * r + h * h);
    return Vec3{scale * s[0], scale * s[1], scale * s[2]};
  });
}

double homogeneous_profile_peak(std::uint64_t seed)
{
  const Profile sigma(seed);
  // Fibonacci lattice on the sphere, then a few rounds of local refinement.
  constexpr int samples = 20000;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  double best = 0.0, best_theta = 0.0, best_phi = 0.0;
  auto eval = [&](double theta, double phi) {
    const Vec3 w{std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
    const Vec3 s = sigma(w);
    return std::sqrt(dot(s, s));
  };
  for (int i = 0; i < samples; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / samples;
    const double theta = std::acos(z);
    const double phi = golden * i;
    const double v = eval(theta, phi);
    if (v > best) {
      best = v;
      best_theta = theta;
      best_phi = phi;
    }
  }
  double step = 0.05;
  for (int round = 0; round < 60; ++round) {
    bool improved = false;
    for (int dt = -1; dt <= 1; ++dt)
      for (int dp = -1; dp <= 1; ++dp) {
        const double th = best_theta + dt * step, ph = best_phi + dp * step;
        const double v = eval(th, ph);
        if (v > best) {
          best = v;
          best_theta = th;
          best_phi = ph;
          improved = true;
        }
      }
    if (!improved)
      step *= 0.5;
  }
  return best;
}

double rms_velocity(const SpectralVectorField& f)
{
  return l2_norm(f) / std::pow(f.grid().box_length, 1.5);
}

double max_velocity(const SpectralVectorField& f) { return max_magnitude(to_physical(f)); }

} // namespace nsstab
