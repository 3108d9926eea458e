#pragma once

#include "nsstab/field.hpp"
#include "nsstab/grid.hpp"

#include <span>
#include <vector>

namespace nsstab {

/// Thin owner of FFTW plans for one cube size. Plans are created with
/// FFTW_ESTIMATE so plan choice (and therefore roundoff) does not depend on
/// timing measurements. Engines are cached per (N, thread count).
class FftEngine
{
public:
  static FftEngine& for_grid(const GridSpec& grid);

  ~FftEngine();
  FftEngine(const FftEngine&) = delete;
  FftEngine& operator=(const FftEngine&) = delete;

  /// Unnormalized backward transform of an N x N x (N/2+1) half spectrum.
  void backward(std::span<const cplx> half_spectrum, std::span<double> out);
  /// Unnormalized forward transform into the half spectrum.
  void forward(std::span<const double> in, std::span<cplx> half_spectrum);

  int points_per_axis() const { return n_; }

  FftEngine(int n, int nthreads);

private:
  int n_;
  void* plan_backward_ = nullptr;
  void* plan_forward_ = nullptr;
  std::vector<cplx> scratch_;
};

} // namespace nsstab
