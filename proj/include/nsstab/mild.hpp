#pragma once

#include "nsstab/field.hpp"
#include "nsstab/space_norm.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsstab {

/// Background flow V(t) stored as spectral slices on an increasing time grid
/// starting at 0. Between slices V is interpolated linearly; past the last
/// slice it is continued by the heat semigroup. A stationary trajectory holds
/// one slice that is returned at every time.
struct MildTrajectory
{
  GridSpec grid;
  std::vector<double> times;
  std::vector<SpectralVectorField> slices;
  SpaceNorm space;
  double sup_norm = 0.0;
  double K_used = 0.0;
  bool stationary = false;
  /// Contraction history: sup_t ||V^(n+1) - V^(n)||_2 / sup_t ||V^(n)||_2 for
  /// n >= 1 (the first update, from V^(0) = 0, has no relative size).
  std::vector<double> contraction_history;
  /// Ratios of consecutive absolute updates.
  std::vector<double> update_ratios;
  int iterations = 0;

  bool admissible() const { return K_used * sup_norm < 1.0; }
  bool is_zero() const;

  SpectralVectorField at(double t) const;
};

class PicardFailure : public std::runtime_error
{
public:
  PicardFailure(const std::string& what, std::vector<double> history, std::vector<double> ratios)
    : std::runtime_error(what), history_(std::move(history)), ratios_(std::move(ratios))
  {}
  const std::vector<double>& history() const { return history_; }
  const std::vector<double>& ratios() const { return ratios_; }

private:
  std::vector<double> history_;
  std::vector<double> ratios_;
};

/// t_i = horizon * (i/n)^2, i = 0..n. Grids with n and 2n are nested.
std::vector<double> geometric_time_grid(double horizon, int slices);

/// Duhamel term I(t_i) = int_0^{t_i} exp((t_i - s)Delta) B(s) ds by the
/// trapezoid rule on each subinterval, computed recursively.
std::vector<SpectralVectorField> duhamel_trapezoid(const std::vector<double>& times,
                                                   const std::vector<SpectralVectorField>& integrand);

/// One Picard map: exp(t Delta)V0 - int_0^t exp((t-s)Delta) P div(V (x) V)(s) ds
/// evaluated on the slices of `current`.
std::vector<SpectralVectorField> picard_map(const SpectralVectorField& V0, const std::vector<double>& times,
                                            const std::vector<SpectralVectorField>& current);

/// Fixed-point iteration from V^(0) = 0 (so V^(1) is the heat flow of V0).
/// Stops when sup_t ||V^(n+1) - V^(n)||_2 / sup_t ||V^(n)||_2 < tol. Throws
/// PicardFailure when an update is not smaller than the previous one or
/// max_iters is reached.
MildTrajectory picard_iterate(const SpectralVectorField& V0, const std::vector<double>& times, int max_iters,
                              double tol, const SpaceNorm& space, const NormOptions& opts = {});

MildTrajectory stationary_trajectory(const SpectralVectorField& V, const SpaceNorm& space,
                                     const NormOptions& opts = {});
MildTrajectory zero_trajectory(const GridSpec& grid, const SpaceNorm& space);

/// P applied to the degree -1 homogeneous profile with the given amplitude.
SpectralVectorField homogeneous_minus_one_data(const GridSpec& grid, double amplitude, std::uint64_t profile_seed);

struct CalderonSplit
{
  double R = 0.0;
  SpectralVectorField V0;
  SpectralVectorField w0;
  double l3_of_smooth = 0.0;
  double l2_of_rough = 0.0;
};

/// u0 = u_{0,R} + u0^R with u_{0,R}(x) = u0(x) min(1, R/|u0(x)|) on the grid,
/// then V0 = P u_{0,R} and w0 = P u0^R. Throws for R <= 0.
CalderonSplit calderon_split(const SpectralVectorField& u0, double R);

struct StandingAssumptionReport
{
  double sup_norm = 0.0;
  double K_hat = 0.0;
  double product = 0.0;
  bool admissible = true;
  /// max over adjacent slices and the test battery of |<V(t_{i+1}) - V(t_i), phi>|.
  double continuity_proxy = 0.0;
  double max_divergence_residual = 0.0;
};

/// Also stores K_hat into traj.K_used.
StandingAssumptionReport verify_standing_assumptions(MildTrajectory& traj, double K_hat);

/// Eight fixed smooth divergence-free test fields used by the continuity proxy.
std::vector<SpectralVectorField> test_field_battery(const GridSpec& grid);

/// Directory with manifest.json and one checkpoint file per slice.
void save_trajectory(const std::filesystem::path& dir, const MildTrajectory& traj);
MildTrajectory load_trajectory(const std::filesystem::path& dir);

} // namespace nsstab
