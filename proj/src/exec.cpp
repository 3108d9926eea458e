#include "nsstab/exec.hpp"

#include <atomic>
#include <stdexcept>

namespace nsstab::exec {

namespace {
std::atomic<Mode> g_mode{Mode::Parallel};
std::atomic<int> g_threads{0};
} // namespace

void set_mode(Mode m) { g_mode = m; }
Mode mode() { return g_mode; }

void set_threads(int n)
{
  if (n < 0)
    throw std::invalid_argument("thread count must be non-negative");
  g_threads = n;
}

int threads()
{
  const int n = g_threads;
  if (n > 0)
    return n;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

int effective_threads() { return mode() == Mode::Serial ? 1 : threads(); }

} // namespace nsstab::exec
