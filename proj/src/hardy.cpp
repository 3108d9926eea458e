#include "nsstab/hardy.hpp"

#include "nsstab/random_fields.hpp"
#include "nsstab/spectral_ops.hpp"
#include "nsstab/trilinear.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <stdexcept>

namespace nsstab {

namespace {

constexpr int kMaxRejections = 1000;

// Draws one divergence-free field from the family selected by `kind`.
SpectralVectorField draw_field(const GridSpec& grid, int kind, std::mt19937_64& rng)
{
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::uint64_t seed = rng();
  const double L = grid.box_length;
  switch (kind % 3) {
  case 0:
    return random_divfree_field(grid, 1.6 + 1.4 * unit(rng), seed);
  case 1: {
    const double width = L / 64.0 * (1.0 + 3.0 * unit(rng));
    const std::array<double, 3> c{0.05 * L * (unit(rng) - 0.5), 0.05 * L * (unit(rng) - 0.5),
                                  0.05 * L * (unit(rng) - 0.5)};
    return solenoidal_bump(grid, c, width, seed);
  }
  default:
    return leray_project(homogeneous_profile(grid, 1.0, seed));
  }
}

} // namespace

HardyEstimate estimate_hardy_constant(const SpaceNorm& space, const GridSpec& grid, int trials,
                                      std::uint64_t seed, const NormOptions& opts)
{
  if (trials < 1)
    throw std::invalid_argument("estimate_hardy_constant: trials must be >= 1");
  space.validate();
  HardyEstimate est;
  est.space = space;
  est.trials = trials;
  std::mt19937_64 rng(seed);

  for (int t = 0; t < trials; ++t) {
    for (int attempt = 0;; ++attempt) {
      if (attempt > kMaxRejections)
        throw std::runtime_error("estimate_hardy_constant: too many degenerate draws");
      // h = g probes the self-interaction b(w, w, V) that enters the
      // perturbation energy balance.
      const int h_kind = (t / 3) % 4;
      const auto g = draw_field(grid, t, rng);
      const auto h = h_kind == 0 ? g : draw_field(grid, h_kind - 1, rng);
      const auto W = draw_field(grid, t / 12 + 2, rng);
      HardySample s;
      s.trial_index = t;
      s.grad_g = std::sqrt(gradient_norm_sq(g));
      s.grad_h = std::sqrt(gradient_norm_sq(h));
      s.norm_W = norm(W, space, opts);
      const double denom = s.norm_W * s.grad_g * s.grad_h;
      if (!(denom > 0.0) || !std::isfinite(denom)) {
        ++est.rejected;
        continue;
      }
      s.ratio = std::abs(b_value(g, h, W)) / denom;
      est.samples.push_back(s);
      est.ratio_samples.push_back(s.ratio);
      est.K_hat = std::max(est.K_hat, s.ratio);
      break;
    }
  }
  return est;
}

double classical_hardy_ratio(const SpectralVectorField& g)
{
  const double grad = gradient_norm_sq(g);
  if (!(grad > 0.0))
    throw std::domain_error("classical_hardy_ratio: gradient vanishes");
  const auto& grid = g.grid();
  const auto phys = to_physical(g);
  const int n = grid.points_per_axis;
  double acc = 0.0;
  std::size_t idx = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l, ++idx) {
        if (i == 0 && j == 0 && l == 0)
          continue;
        const double x = grid.centered_coordinate(i), y = grid.centered_coordinate(j),
                     z = grid.centered_coordinate(l);
        const double m = phys.magnitude(idx);
        acc += m * m / (x * x + y * y + z * z);
      }
  return acc * grid.cell_volume() / grad;
}

void write_hardy_csv(const std::filesystem::path& path, const HardyEstimate& est)
{
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  out << "trial_index,ratio,norm_W,grad_g,grad_h\n";
  char buf[256];
  for (const auto& s : est.samples) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", s.trial_index, s.ratio, s.norm_W, s.grad_g,
                  s.grad_h);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "# K_hat=%.17g space=%s trials=%d rejected=%d\n", est.K_hat,
                est.space.to_string().c_str(), est.trials, est.rejected);
  out << buf;
}

} // namespace nsstab
