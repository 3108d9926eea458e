#include "nsstab/space_norm.hpp"

#include "nsstab/fft.hpp"
#include "nsstab/kernels.hpp"
#include "nsstab/spectral_ops.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

namespace nsstab {

namespace {

struct TagName
{
  SpaceNorm::Tag tag;
  const char* name;
};

constexpr TagName kTagNames[] = {
    {SpaceNorm::Tag::SobolevHalf, "sobolev_half"},
    {SpaceNorm::Tag::Lebesgue3, "lebesgue3"},
    {SpaceNorm::Tag::WeightedLinfty, "weighted_linfty"},
    {SpaceNorm::Tag::LeJanSznitman, "le_jan_sznitman"},
    {SpaceNorm::Tag::Marcinkiewicz3, "marcinkiewicz3"},
    {SpaceNorm::Tag::Morrey3p, "morrey3p"},
};

double sobolev_half(const SpectralVectorField& f)
{
  return std::sqrt(weighted_inner(f, f, [](const Mode& m) { return m.xi_norm; }));
}

double lebesgue3(const SpectralVectorField& f)
{
  const auto phys = to_physical(f);
  const double s = exec::dispatch([&](auto p) { return kernels::grid_sum_pow(p, phys.comps, 3.0); });
  return std::cbrt(s * f.grid().cell_volume());
}

double weighted_linfty(const SpectralVectorField& f)
{
  const auto& g = f.grid();
  const auto phys = to_physical(f);
  const int n = g.points_per_axis;
  std::vector<double> coord(n);
  for (int i = 0; i < n; ++i)
    coord[i] = g.centered_coordinate(i);
  const auto nn = static_cast<std::size_t>(n);
  return exec::dispatch([&](auto p) {
    return exec::max(p, phys.size(), [&](std::size_t idx) {
      const std::size_t i = idx / (nn * nn), j = (idx / nn) % nn, l = idx % nn;
      const double r = std::sqrt(coord[i] * coord[i] + coord[j] * coord[j] + coord[l] * coord[l]);
      return r * phys.magnitude(idx);
    });
  });
}

double le_jan_sznitman(const SpectralVectorField& f)
{
  const double scale = std::pow(2.0 * std::numbers::pi, -1.5) * f.grid().volume();
  const auto modes = f.table().modes();
  double best = 0.0;
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const double mag =
        std::sqrt(std::norm(f.at(m, 0)) + std::norm(f.at(m, 1)) + std::norm(f.at(m, 2)));
    best = std::max(best, modes[m].xi_sq * mag);
  }
  return scale * best;
}

} // namespace

void SpaceNorm::validate() const
{
  if (tag == Tag::Morrey3p) {
    if (!p)
      throw std::invalid_argument("morrey3p requires an exponent p");
    if (!(*p > 2.0 && *p <= 3.0))
      throw std::invalid_argument("morrey3p exponent must lie in (2,3], got " + std::to_string(*p));
  } else if (p) {
    throw std::invalid_argument(to_string() + " does not take an exponent");
  }
}

SpaceNorm SpaceNorm::parse(const std::string& text)
{
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  for (const auto& tn : kTagNames) {
    if (head != tn.name)
      continue;
    SpaceNorm s{tn.tag, std::nullopt};
    if (colon != std::string::npos) {
      std::size_t used = 0;
      const std::string tail = text.substr(colon + 1);
      try {
        s.p = std::stod(tail, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != tail.size())
        throw std::invalid_argument("bad exponent in space '" + text + "'");
    }
    s.validate();
    return s;
  }
  throw std::invalid_argument("unknown space '" + text + "'");
}

std::string SpaceNorm::to_string() const
{
  for (const auto& tn : kTagNames)
    if (tn.tag == tag) {
      std::string s = tn.name;
      if (p) {
        char buf[32];
        std::snprintf(buf, sizeof buf, ":%.17g", *p);
        s += buf;
      }
      return s;
    }
  return "unknown";
}

std::vector<double> sample_magnitudes(const SpectralVectorField& f)
{
  const auto phys = to_physical(f);
  std::vector<double> out(phys.size());
  exec::dispatch([&](auto p) { exec::for_each(p, out.size(), [&](std::size_t i) { out[i] = phys.magnitude(i); }); });
  return out;
}

double marcinkiewicz3_level_sweep(std::vector<double> magnitudes, double cell_volume)
{
  std::sort(magnitudes.begin(), magnitudes.end());
  const std::size_t total = magnitudes.size();
  double best = 0.0;
  // For lambda just below a level v, |{|f| > lambda}| counts every sample >= v.
  auto it = magnitudes.begin();
  while (it != magnitudes.end()) {
    const double level = *it;
    const auto first = std::lower_bound(magnitudes.begin(), magnitudes.end(), level);
    const auto count = static_cast<double>(total - static_cast<std::size_t>(first - magnitudes.begin()));
    if (level > 0.0)
      best = std::max(best, level * std::cbrt(count * cell_volume));
    it = std::upper_bound(it, magnitudes.end(), level);
  }
  return best;
}

double marcinkiewicz3_order_statistic(std::vector<double> magnitudes, double cell_volume)
{
  std::sort(magnitudes.begin(), magnitudes.end(), std::greater<>());
  double best = 0.0;
  for (std::size_t n = 0; n < magnitudes.size(); ++n)
    best = std::max(best, magnitudes[n] * std::cbrt(static_cast<double>(n + 1) * cell_volume));
  return best;
}

double morrey_norm(const SpectralVectorField& f, double p, int center_stride)
{
  if (center_stride < 1)
    throw std::invalid_argument("morrey_norm: center stride must be positive");
  const auto& g = f.grid();
  const int n = g.points_per_axis;
  const auto nn = static_cast<std::size_t>(n);
  const double h = g.spacing();
  const double cv = g.cell_volume();

  auto mags = sample_magnitudes(f);
  for (auto& m : mags)
    m = std::pow(m, p);

  auto& fft = FftEngine::for_grid(g);
  std::vector<cplx> mag_hat(g.spectral_size()), ball_hat(g.spectral_size()), prod(g.spectral_size());
  fft.forward(mags, mag_hat);

  std::vector<double> ball(g.physical_size()), integral(g.physical_size());
  double best = 0.0;
  for (double R = h; R <= 0.5 * g.box_length * (1.0 + 1e-12); R *= 2.0) {
    std::size_t idx = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l, ++idx) {
          const double x = g.centered_coordinate(i), y = g.centered_coordinate(j), z = g.centered_coordinate(l);
          ball[idx] = (x * x + y * y + z * z <= R * R * (1.0 + 1e-12)) ? 1.0 : 0.0;
        }
    fft.forward(ball, ball_hat);
    for (std::size_t k = 0; k < prod.size(); ++k)
      prod[k] = mag_hat[k] * ball_hat[k];
    fft.backward(prod, integral);
    const double scale = cv / static_cast<double>(g.physical_size());
    const double weight = std::pow(R, 1.0 - 3.0 / p);
    for (std::size_t i = 0; i < nn; i += center_stride)
      for (std::size_t j = 0; j < nn; j += center_stride)
        for (std::size_t l = 0; l < nn; l += center_stride) {
          const double v = std::max(0.0, integral[(i * nn + j) * nn + l] * scale);
          best = std::max(best, weight * std::pow(v, 1.0 / p));
        }
  }
  return best;
}

double sobolev_constant()
{
  return std::cbrt(4.0 / std::sqrt(std::numbers::pi)) / std::sqrt(3.0 * std::numbers::pi);
}

double norm(const SpectralVectorField& f, const SpaceNorm& space, const NormOptions& opts)
{
  space.validate();
  switch (space.tag) {
  case SpaceNorm::Tag::SobolevHalf:
    return sobolev_half(f);
  case SpaceNorm::Tag::Lebesgue3:
    return lebesgue3(f);
  case SpaceNorm::Tag::WeightedLinfty:
    return weighted_linfty(f);
  case SpaceNorm::Tag::LeJanSznitman:
    return le_jan_sznitman(f);
  case SpaceNorm::Tag::Marcinkiewicz3:
    return marcinkiewicz3_order_statistic(sample_magnitudes(f), f.grid().cell_volume());
  case SpaceNorm::Tag::Morrey3p:
    return morrey_norm(f, *space.p, opts.morrey_center_stride);
  }
  throw std::invalid_argument("unknown space tag");
}

} // namespace nsstab
