#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nsstab::exec {

/// Process-wide execution mode. Serial mode is bitwise deterministic; parallel
/// mode reorders reductions and agrees with serial to roundoff.
enum class Mode { Serial, Parallel };

void set_mode(Mode mode);
Mode mode();

/// Thread count used in parallel mode (also passed to the FFT planner).
void set_threads(int n);
int threads();

/// Number of threads that will actually run kernels right now.
int effective_threads();

struct Serial {};
struct OpenMP {};

template <class F>
void for_each(Serial, std::size_t n, F&& f)
{
  for (std::size_t i = 0; i < n; ++i)
    f(i);
}

template <class F>
void for_each(OpenMP, std::size_t n, F&& f)
{
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) num_threads(threads())
  for (std::ptrdiff_t i = 0; i < count; ++i)
    f(static_cast<std::size_t>(i));
}

template <class F>
double sum(Serial, std::size_t n, F&& f)
{
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    acc += f(i);
  return acc;
}

template <class F>
double sum(OpenMP, std::size_t n, F&& f)
{
  const auto count = static_cast<std::ptrdiff_t>(n);
  double acc = 0.0;
#pragma omp parallel for schedule(static) reduction(+ : acc) num_threads(threads())
  for (std::ptrdiff_t i = 0; i < count; ++i)
    acc += f(static_cast<std::size_t>(i));
  return acc;
}

template <class F>
double max(Serial, std::size_t n, F&& f)
{
  double acc = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    acc = std::max(acc, f(i));
  return acc;
}

template <class F>
double max(OpenMP, std::size_t n, F&& f)
{
  const auto count = static_cast<std::ptrdiff_t>(n);
  double acc = -std::numeric_limits<double>::infinity();
#pragma omp parallel for schedule(static) reduction(max : acc) num_threads(threads())
  for (std::ptrdiff_t i = 0; i < count; ++i)
    acc = std::max(acc, f(static_cast<std::size_t>(i)));
  return acc;
}

/// Calls `f(Serial{})` or `f(OpenMP{})` depending on the current mode.
template <class F>
decltype(auto) dispatch(F&& f)
{
  if (mode() == Mode::Serial)
    return f(Serial{});
  return f(OpenMP{});
}

/// RAII override of the execution mode, restored on scope exit.
class ScopedMode
{
public:
  explicit ScopedMode(Mode m) : saved_(mode()) { set_mode(m); }
  ~ScopedMode() { set_mode(saved_); }
  ScopedMode(const ScopedMode&) = delete;
  ScopedMode& operator=(const ScopedMode&) = delete;

private:
  Mode saved_;
};

} // namespace nsstab::exec
