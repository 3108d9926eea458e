#include "nsstab/field.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace nsstab {

SpectralVectorField::SpectralVectorField(const GridSpec& grid)
  : SpectralVectorField(ModeTable::for_grid(grid))
{}

SpectralVectorField::SpectralVectorField(std::shared_ptr<const ModeTable> table)
  : table_(std::move(table)), coeffs_(3 * table_->size(), cplx{0.0, 0.0}), divfree_(true)
{}

double SpectralVectorField::divergence_residual() const
{
  const auto modes = table_->modes();
  double worst = 0.0;
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const cplx* v = coeffs_.data() + 3 * m;
    const double mag = std::sqrt(std::norm(v[0]) + std::norm(v[1]) + std::norm(v[2]));
    if (mag == 0.0)
      continue;
    const auto& xi = modes[m].xi;
    const cplx dot = xi[0] * v[0] + xi[1] * v[1] + xi[2] * v[2];
    worst = std::max(worst, std::abs(dot) / (modes[m].xi_norm * mag));
  }
  return worst;
}

double SpectralVectorField::hermitian_residual() const
{
  double worst = 0.0, scale = 0.0;
  for (std::size_t m = 0; m < table_->size(); ++m) {
    for (int j = 0; j < 3; ++j)
      scale = std::max(scale, std::abs(coeffs_[3 * m + j]));
    const auto p = table_->partner(m);
    if (p == ModeTable::npos)
      continue;
    for (int j = 0; j < 3; ++j)
      worst = std::max(worst, std::abs(coeffs_[3 * p + j] - std::conj(coeffs_[3 * m + j])));
  }
  return scale > 0.0 ? worst / scale : 0.0;
}

void SpectralVectorField::enforce_hermitian()
{
  for (std::size_t m = 0; m < table_->size(); ++m) {
    const auto p = table_->partner(m);
    if (p == ModeTable::npos || p < m)
      continue;
    for (int j = 0; j < 3; ++j) {
      const cplx avg = 0.5 * (coeffs_[3 * m + j] + std::conj(coeffs_[3 * p + j]));
      coeffs_[3 * m + j] = avg;
      coeffs_[3 * p + j] = std::conj(avg);
    }
  }
}

bool SpectralVectorField::same_grid(const SpectralVectorField& other) const
{
  return table_ == other.table_ || table_->grid() == other.table_->grid();
}

bool SpectralVectorField::is_zero() const
{
  return std::all_of(coeffs_.begin(), coeffs_.end(), [](const cplx& c) { return c == cplx{}; });
}

SpectralVectorField& SpectralVectorField::operator+=(const SpectralVectorField& rhs)
{
  if (!same_grid(rhs))
    throw GridMismatch("SpectralVectorField::operator+=");
  for (std::size_t i = 0; i < coeffs_.size(); ++i)
    coeffs_[i] += rhs.coeffs_[i];
  divfree_ = divfree_ && rhs.divfree_;
  return *this;
}

SpectralVectorField& SpectralVectorField::operator-=(const SpectralVectorField& rhs)
{
  if (!same_grid(rhs))
    throw GridMismatch("SpectralVectorField::operator-=");
  for (std::size_t i = 0; i < coeffs_.size(); ++i)
    coeffs_[i] -= rhs.coeffs_[i];
  divfree_ = divfree_ && rhs.divfree_;
  return *this;
}

SpectralVectorField& SpectralVectorField::operator*=(double s)
{
  for (auto& c : coeffs_)
    c *= s;
  return *this;
}

bool SpectralVectorField::bitwise_equal(const SpectralVectorField& other) const
{
  return same_grid(other) &&
         std::memcmp(coeffs_.data(), other.coeffs_.data(), coeffs_.size() * sizeof(cplx)) == 0;
}

ScalarField::ScalarField(const GridSpec& grid)
  : ScalarField(ModeTable::for_grid(grid))
{}

ScalarField::ScalarField(std::shared_ptr<const ModeTable> table)
  : table_(std::move(table)), coeffs_(table_->size(), cplx{0.0, 0.0})
{}

double PhysicalVectorField::magnitude(std::size_t i) const
{
  return std::sqrt(comps[0][i] * comps[0][i] + comps[1][i] * comps[1][i] + comps[2][i] * comps[2][i]);
}

} // namespace nsstab
