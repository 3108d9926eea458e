#include "nsstab/grid.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>
#include <tuple>

namespace nsstab {

void GridSpec::validate() const
{
  if (!(box_length > 0.0) || !std::isfinite(box_length))
    throw std::invalid_argument("grid: box_length must be positive, got " + std::to_string(box_length));
  if (points_per_axis < 8 || points_per_axis % 2 != 0)
    throw std::invalid_argument("grid: points_per_axis must be even and >= 8, got " +
                                std::to_string(points_per_axis));
  if (!(dealias_fraction > 0.0 && dealias_fraction <= 1.0))
    throw std::invalid_argument("grid: dealias_fraction must lie in (0,1], got " +
                                std::to_string(dealias_fraction));
}

int GridSpec::kmax() const
{
  const int half = points_per_axis / 2;
  const int k = static_cast<int>(std::floor(dealias_fraction * half + 1e-12));
  return std::min(k, half - 1);
}

double GridSpec::cell_volume() const
{
  const double h = spacing();
  return h * h * h;
}

std::size_t GridSpec::physical_size() const
{
  const auto n = static_cast<std::size_t>(points_per_axis);
  return n * n * n;
}

std::size_t GridSpec::spectral_size() const
{
  const auto n = static_cast<std::size_t>(points_per_axis);
  return n * n * (n / 2 + 1);
}

double GridSpec::centered_coordinate(int i) const
{
  const int n = points_per_axis;
  return (i < n / 2 ? i : i - n) * spacing();
}

ModeTable::ModeTable(const GridSpec& grid)
  : grid_(grid)
{
  grid_.validate();
  const int kmax = grid_.kmax();
  const int n = grid_.points_per_axis;
  const int nz = n / 2 + 1;
  const double unit = grid_.wavenumber_unit();
  const int side = 2 * kmax + 1;
  lookup_.assign(static_cast<std::size_t>(side) * side * (kmax + 1), npos);

  for (int k1 = -kmax; k1 <= kmax; ++k1)
    for (int k2 = -kmax; k2 <= kmax; ++k2)
      for (int k3 = 0; k3 <= kmax; ++k3) {
        if (k1 == 0 && k2 == 0 && k3 == 0)
          continue;
        Mode m{};
        m.k = {k1, k2, k3};
        m.xi = {unit * k1, unit * k2, unit * k3};
        m.xi_sq = m.xi[0] * m.xi[0] + m.xi[1] * m.xi[1] + m.xi[2] * m.xi[2];
        m.xi_norm = std::sqrt(m.xi_sq);
        m.k_norm = std::sqrt(static_cast<double>(k1 * k1 + k2 * k2 + k3 * k3));
        m.weight = (k3 == 0) ? 1.0 : 2.0;
        const int i = (k1 + n) % n;
        const int j = (k2 + n) % n;
        m.slot = (static_cast<std::size_t>(i) * n + j) * nz + k3;
        lookup_[(static_cast<std::size_t>(k1 + kmax) * side + (k2 + kmax)) * (kmax + 1) + k3] = modes_.size();
        modes_.push_back(m);
      }

  partner_.assign(modes_.size(), npos);
  for (std::size_t idx = 0; idx < modes_.size(); ++idx) {
    const auto& k = modes_[idx].k;
    if (k[2] == 0)
      partner_[idx] = *find({-k[0], -k[1], 0});
  }
}

std::optional<std::size_t> ModeTable::find(const std::array<int, 3>& k) const
{
  const int kmax = grid_.kmax();
  if (std::abs(k[0]) > kmax || std::abs(k[1]) > kmax || k[2] < 0 || k[2] > kmax)
    return std::nullopt;
  const int side = 2 * kmax + 1;
  const auto idx = lookup_[(static_cast<std::size_t>(k[0] + kmax) * side + (k[1] + kmax)) * (kmax + 1) + k[2]];
  if (idx == npos)
    return std::nullopt;
  return idx;
}

std::shared_ptr<const ModeTable> ModeTable::for_grid(const GridSpec& grid)
{
  static std::mutex mutex;
  static std::map<std::tuple<double, int, double>, std::shared_ptr<const ModeTable>> cache;
  std::lock_guard lock(mutex);
  const auto key = std::make_tuple(grid.box_length, grid.points_per_axis, grid.dealias_fraction);
  auto it = cache.find(key);
  if (it != cache.end())
    return it->second;
  auto table = std::make_shared<const ModeTable>(grid);
  cache.emplace(key, table);
  return table;
}

} // namespace nsstab
