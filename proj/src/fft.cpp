#include "nsstab/fft.hpp"

#include "nsstab/exec.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace nsstab {

namespace {

std::mutex& planner_mutex()
{
  static std::mutex m;
  return m;
}

void init_fftw_threads()
{
  static const bool ok = fftw_init_threads() != 0;
  if (!ok)
    throw std::runtime_error("fftw_init_threads failed");
}

} // namespace

FftEngine::FftEngine(int n, int nthreads)
  : n_(n)
{
  const auto nn = static_cast<std::size_t>(n);
  scratch_.resize(nn * nn * (nn / 2 + 1));
  std::vector<double> real(nn * nn * nn);

  std::lock_guard lock(planner_mutex());
  init_fftw_threads();
  fftw_plan_with_nthreads(nthreads);
  auto* c = reinterpret_cast<fftw_complex*>(scratch_.data());
  plan_backward_ = fftw_plan_dft_c2r_3d(n, n, n, c, real.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
  plan_forward_ = fftw_plan_dft_r2c_3d(n, n, n, real.data(), c, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (plan_backward_ == nullptr || plan_forward_ == nullptr)
    throw std::runtime_error("FFTW planning failed");
}

FftEngine::~FftEngine()
{
  std::lock_guard lock(planner_mutex());
  if (plan_backward_ != nullptr)
    fftw_destroy_plan(static_cast<fftw_plan>(plan_backward_));
  if (plan_forward_ != nullptr)
    fftw_destroy_plan(static_cast<fftw_plan>(plan_forward_));
}

FftEngine& FftEngine::for_grid(const GridSpec& grid)
{
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::unique_ptr<FftEngine>> cache;
  const int nthreads = exec::effective_threads();
  std::lock_guard lock(mutex);
  const auto key = std::make_pair(grid.points_per_axis, nthreads);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, std::make_unique<FftEngine>(grid.points_per_axis, nthreads)).first;
  return *it->second;
}

void FftEngine::backward(std::span<const cplx> half_spectrum, std::span<double> out)
{
  // c2r overwrites its input, so transform from a private copy.
  std::copy(half_spectrum.begin(), half_spectrum.end(), scratch_.begin());
  fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_backward_),
                       reinterpret_cast<fftw_complex*>(scratch_.data()), out.data());
}

void FftEngine::forward(std::span<const double> in, std::span<cplx> half_spectrum)
{
  fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_forward_), const_cast<double*>(in.data()),
                       reinterpret_cast<fftw_complex*>(half_spectrum.data()));
}

} // namespace nsstab
