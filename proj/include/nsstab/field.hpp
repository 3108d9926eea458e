#pragma once

#include "nsstab/grid.hpp"

#include <array>
#include <complex>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsstab {

using cplx = std::complex<double>;

class GridMismatch : public std::invalid_argument
{
public:
  explicit GridMismatch(const std::string& where)
    : std::invalid_argument(where + ": fields live on different grids")
  {}
};

/// Real 3-vector field stored as Fourier coefficients on the retained modes:
/// f(x) = sum_k c_k exp(i xi_k . x). Coefficients are laid out mode-major,
/// three components per mode. Mode k = 0 is never stored (zero mean).
class SpectralVectorField
{
public:
  explicit SpectralVectorField(const GridSpec& grid);
  explicit SpectralVectorField(std::shared_ptr<const ModeTable> table);

  const GridSpec& grid() const { return table_->grid(); }
  const ModeTable& table() const { return *table_; }
  const std::shared_ptr<const ModeTable>& table_ptr() const { return table_; }
  std::size_t mode_count() const { return table_->size(); }

  std::span<cplx> coeffs() { return coeffs_; }
  std::span<const cplx> coeffs() const { return coeffs_; }

  cplx& at(std::size_t mode, int component) { return coeffs_[3 * mode + component]; }
  const cplx& at(std::size_t mode, int component) const { return coeffs_[3 * mode + component]; }

  /// Set by operations whose output is divergence-free by construction.
  bool divergence_free() const { return divfree_; }
  void set_divergence_free(bool flag) { divfree_ = flag; }

  /// max_k |xi.c| / |c| over modes with nonzero coefficient.
  double divergence_residual() const;
  /// max |c(-k) - conj c(k)| / max|c| over the k3 = 0 plane.
  double hermitian_residual() const;
  /// Replace each k3 = 0 pair by its Hermitian average.
  void enforce_hermitian();

  bool same_grid(const SpectralVectorField& other) const;
  bool is_zero() const;

  SpectralVectorField& operator+=(const SpectralVectorField& rhs);
  SpectralVectorField& operator-=(const SpectralVectorField& rhs);
  SpectralVectorField& operator*=(double s);

  friend SpectralVectorField operator+(SpectralVectorField a, const SpectralVectorField& b) { return a += b; }
  friend SpectralVectorField operator-(SpectralVectorField a, const SpectralVectorField& b) { return a -= b; }
  friend SpectralVectorField operator*(SpectralVectorField a, double s) { return a *= s; }
  friend SpectralVectorField operator*(double s, SpectralVectorField a) { return a *= s; }

  bool bitwise_equal(const SpectralVectorField& other) const;

private:
  std::shared_ptr<const ModeTable> table_;
  std::vector<cplx> coeffs_;
  bool divfree_ = false;
};

/// Real scalar field on the retained modes, used for convolution kernels.
/// Coefficients are those of the periodized kernel, so that
/// (phi * f)_k = L^3 phi_k f_k.
class ScalarField
{
public:
  explicit ScalarField(const GridSpec& grid);
  explicit ScalarField(std::shared_ptr<const ModeTable> table);

  const GridSpec& grid() const { return table_->grid(); }
  const ModeTable& table() const { return *table_; }
  std::span<cplx> coeffs() { return coeffs_; }
  std::span<const cplx> coeffs() const { return coeffs_; }

private:
  std::shared_ptr<const ModeTable> table_;
  std::vector<cplx> coeffs_;
};

/// Samples of a real scalar on the N^3 grid, row-major (i, j, l).
struct PhysicalScalarField
{
  GridSpec grid;
  std::vector<double> values;

  explicit PhysicalScalarField(const GridSpec& g) : grid(g), values(g.physical_size(), 0.0) {}
};

/// Samples of a real 3-vector on the N^3 grid.
struct PhysicalVectorField
{
  GridSpec grid;
  std::array<std::vector<double>, 3> comps;

  explicit PhysicalVectorField(const GridSpec& g)
    : grid(g)
  {
    for (auto& c : comps)
      c.assign(g.physical_size(), 0.0);
  }

  std::size_t size() const { return comps[0].size(); }
  double magnitude(std::size_t i) const;
};

} // namespace nsstab
