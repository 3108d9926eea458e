#pragma once

#include "nsstab/field.hpp"
#include "nsstab/mild.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace nsstab {

/// Thrown by step() when dt exceeds the advective limit 0.5 h / max(|w| + |V|).
class CflViolation : public std::runtime_error
{
public:
  CflViolation(double dt, double admissible_dt);
  double dt() const { return dt_; }
  double admissible_dt() const { return admissible_; }

private:
  double dt_;
  double admissible_;
};

/// Sharp Fourier-ball projector P_m keeping modes with |k| <= m.
struct GalerkinTruncation
{
  double m = 0.0;
  /// Throws std::invalid_argument unless 1 <= m <= kmax.
  void validate(const GridSpec& grid) const;
};

/// -P[(w.grad)w + (w.grad)V + (V.grad)w] in flux-divergence form.
/// Pass V = nullptr for V = 0.
SpectralVectorField rhs(const SpectralVectorField& w, const SpectralVectorField* V);
SpectralVectorField rhs(const SpectralVectorField& w, const SpectralVectorField& V);

/// Independent evaluations used as cross-checks: P(w x curl w) (V = 0 only)
/// and the sum of the three advective products projected afterwards.
SpectralVectorField rhs_rotational(const SpectralVectorField& w);
SpectralVectorField rhs_advective(const SpectralVectorField& w, const SpectralVectorField* V);

/// Admissible dt for the advective limit given the current state.
double cfl_dt(const SpectralVectorField& w, const SpectralVectorField* V);

/// One integrating-factor midpoint step. `nonlinear = false` drops every
/// transport term and leaves the exact heat flow.
SpectralVectorField step(const SpectralVectorField& w, const SpectralVectorField* V_t,
                         const SpectralVectorField* V_half, double dt, bool nonlinear = true);

enum class DissipationQuadrature {
  /// Trapezoid rule on ||grad w||^2 between steps.
  Trapezoid,
  /// Per-mode log-mean of |w_k|^2 between steps; exact for pure heat decay.
  Exponential,
};

std::string to_string(DissipationQuadrature q);
DissipationQuadrature parse_quadrature(const std::string& text);

struct LedgerRow
{
  double t = 0.0;
  double l2_sq = 0.0;
  double grad_l2_sq = 0.0;
  /// 2 int_0^t ||grad w||^2.
  double dissipation_cum = 0.0;

  bool operator==(const LedgerRow&) const = default;
};

struct EnergyLedger
{
  double K_sup_V = 0.0;
  DissipationQuadrature quadrature = DissipationQuadrature::Exponential;
  std::vector<LedgerRow> rows;

  /// ||w(s)||^2 - ||w(t)||^2 - (1 - K_sup_V)(D(t) - D(s)) for row indices s <= t.
  double slack(std::size_t s, std::size_t t) const;
  double slack_vs_t0(std::size_t t) const { return slack(0, t); }

  struct PairSlack
  {
    double value = 0.0;
    std::size_t s = 0;
    std::size_t t = 0;
  };
  /// Minimum slack over every stored pair s < t, in O(rows).
  PairSlack min_pair_slack() const;

  /// max_t D(t) / (||w0||^2 / (1 - K_sup_V)); at most 1 + tol when the
  /// running dissipation bound holds.
  double dissipation_bound_ratio() const;

  bool operator==(const EnergyLedger&) const = default;
};

/// 1e-6 ||w0||^2 at the reference step 0.01, scaled linearly with dt.
double energy_tolerance(double l2_sq0, double dt);
inline constexpr double kReferenceDt = 0.01;

void write_ledger_csv(const std::filesystem::path& path, const EnergyLedger& ledger);
nlohmann::json ledger_to_json(const EnergyLedger& ledger);
EnergyLedger ledger_from_json(const nlohmann::json& j);

/// Stored snapshots of w. times[i] = steps[i] * dt.
struct WTrajectory
{
  double dt = 0.0;
  std::vector<std::int64_t> steps;
  std::vector<double> times;
  std::vector<SpectralVectorField> snapshots;

  /// Index of the snapshot at time t (within 1e-9 dt). Throws std::out_of_range.
  std::size_t index_of(double t) const;
};

/// Everything needed to continue a run.
struct EvolveState
{
  std::int64_t step = 0;
  SpectralVectorField w;
  EnergyLedger ledger;
};

struct EvolveOptions
{
  double t_max = 1.0;
  double dt = kReferenceDt;
  std::optional<GalerkinTruncation> truncation;
  bool nonlinear = true;
  /// Store every n-th state in the returned trajectory (the final state is always stored).
  int store_every = 1;
  DissipationQuadrature quadrature = DissipationQuadrature::Exponential;
  /// Called with the state after every `checkpoint_every` steps (0 disables).
  int checkpoint_every = 0;
  std::function<void(const EvolveState&)> on_checkpoint;
};

struct EvolveResult
{
  WTrajectory trajectory;
  EvolveState state;
  /// Set when the run stopped early; trajectory and ledger hold the steps done.
  std::optional<std::string> error;
  bool completed() const { return !error.has_value(); }
};

/// Steps w0 to t_max against V, interpolated between its slices. The
/// ledger's K_sup_V is V.K_used * V.sup_norm.
EvolveResult evolve(const SpectralVectorField& w0, const MildTrajectory& V, const EvolveOptions& opts);

/// Continues from a saved state up to opts.t_max. The returned trajectory
/// starts with the resumed state.
EvolveResult resume(EvolveState state, const MildTrajectory& V, const EvolveOptions& opts);

enum class TestProfile {
  /// phi(x, tau) = exp(-tau) psi(x).
  Exponential,
  /// phi(x, tau) = psi(x).
  Constant,
};

enum class WeakForm {
  /// Transport of V written as -<(w.grad)phi, V> + <(V.grad)w, phi>.
  AsDisplayed,
  /// Same terms as b(w, V, phi) + b(V, w, phi).
  Rearranged,
};

struct WeakResidual
{
  double lhs = 0.0;
  double rhs = 0.0;
  double residual = 0.0;
};

/// Both sides of the weak formulation on [s, t] against phi built from
/// `test_field`, with trapezoid quadrature over the stored snapshots. s and t
/// must be snapshot times.
WeakResidual weak_residual(const WTrajectory& traj, const MildTrajectory& V, const SpectralVectorField& test_field,
                           double s, double t, TestProfile profile = TestProfile::Exponential,
                           WeakForm form = WeakForm::AsDisplayed);

} // namespace nsstab
