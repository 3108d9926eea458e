#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace nsstab {

/// Periodic cube [0,L)^3 sampled with N points per axis. Fields keep only the
/// wavenumbers with |k_i| <= kmax(), where kmax follows the dealiasing rule.
struct GridSpec
{
  double box_length = 2.0 * std::numbers::pi * 16.0;
  int points_per_axis = 64;
  double dealias_fraction = 2.0 / 3.0;

  /// Throws std::invalid_argument when N < 8, N odd, L <= 0 or the fraction
  /// is outside (0,1].
  void validate() const;

  /// Largest retained |k_i|. The Nyquist index N/2 is never retained.
  int kmax() const;

  double wavenumber_unit() const { return 2.0 * std::numbers::pi / box_length; }
  double spacing() const { return box_length / points_per_axis; }
  double cell_volume() const;
  double volume() const { return box_length * box_length * box_length; }

  std::size_t physical_size() const;
  /// Size of the half-complex (r2c) array N x N x (N/2+1).
  std::size_t spectral_size() const;

  /// Box-centered coordinate of grid index i along one axis, in [-L/2, L/2).
  double centered_coordinate(int i) const;

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// One retained wavenumber in the half space k3 >= 0 (k != 0).
struct Mode
{
  std::array<int, 3> k;
  std::array<double, 3> xi;    // 2*pi*k/L
  double xi_sq;
  double xi_norm;
  double k_norm;               // |k| in integer units
  double weight;               // 1 on the k3 = 0 plane, 2 otherwise (Hermitian pair)
  std::size_t slot;            // index into the N x N x (N/2+1) r2c array
};

/// Immutable table of retained modes for one grid, shared between fields.
/// Order is lexicographic in (k1, k2, k3) with k1, k2 in [-kmax, kmax] and
/// k3 in [0, kmax]; this is also the checkpoint order.
class ModeTable
{
public:
  static std::shared_ptr<const ModeTable> for_grid(const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  std::span<const Mode> modes() const { return modes_; }
  std::size_t size() const { return modes_.size(); }

  /// Index of mode k if k is retained and lies in the stored half space.
  std::optional<std::size_t> find(const std::array<int, 3>& k) const;

  /// For k3 = 0 modes, the index of -k; npos otherwise.
  std::size_t partner(std::size_t m) const { return partner_[m]; }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  explicit ModeTable(const GridSpec& grid);

private:
  GridSpec grid_;
  std::vector<Mode> modes_;
  std::vector<std::size_t> partner_;
  std::vector<std::size_t> lookup_;   // dense (2kmax+1)^2 (kmax+1) -> index or npos
};

} // namespace nsstab
