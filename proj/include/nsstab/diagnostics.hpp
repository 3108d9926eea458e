#pragma once

#include "nsstab/dynamics.hpp"
#include "nsstab/field.hpp"
#include "nsstab/mild.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace nsstab {

/// Plancherel-weighted masses of w under the multiplier phi(xi) = exp(-|xi|^2):
/// low = ||phi w||^2, high = ||(1 - phi) w||^2, cross = <phi w, (1 - phi) w>,
/// so low + high + 2 cross = ||w||^2.
struct SplitMasses
{
  double low = 0.0;
  double high = 0.0;
  double cross = 0.0;
};

SplitMasses split_masses(const SpectralVectorField& w);

/// E(t) = (1+t)^alpha, E'(t) and the cutoff G(t) = sqrt(alpha / (2 (1+t))).
double weight_E(double alpha, double t);
double weight_E_rate(double alpha, double t);
double cutoff_G(double alpha, double t);

/// Norms of the convolution kernels phi*phi (heat kernel at time 2) and
/// eta = phi*phi - 2 phi on R^3.
struct KernelNorms
{
  double phiphi_6_5 = 0.0;
  double phiphi_1 = 1.0;
  double eta_6_5 = 0.0;
  double eta_1 = 0.0;
};

/// phi*phi norms in closed form, eta norms by adaptive radial quadrature.
KernelNorms kernel_norms();

/// ||phi*phi||_{6/5} by radial quadrature (cross-check of the closed form).
double phiphi_6_5_quadrature();

enum class PsiMode {
  /// E = 1 and psi(tau) * w = exp((t - tau)Delta) phi * w.
  HeatKernelShifted,
  /// E = (1+tau)^alpha and psi = delta - phi.
  DeltaMinusPhi,
};

std::string to_string(PsiMode mode);

struct GenEnergyCheck
{
  double s = 0.0;
  double t = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;

  // Pieces of rhs.
  double initial = 0.0;
  /// int E'||psi w||^2 + 2 E (<psi' w, psi w> - ||psi grad w||^2).
  double linear = 0.0;
  /// -2 int E [b(w,w,psi psi w) + b(V,w,psi psi w) + b(w,V,psi psi w)].
  double trilinear = 0.0;
};

/// Generalized energy inequality on [s, t] over the stored snapshots. The
/// linear terms use a per-mode exponential interpolant of |w_k|^2 with
/// Gauss-Legendre nodes on each interval; the trilinear terms use the
/// trapezoid rule. s and t must be snapshot times.
GenEnergyCheck check_gen_energy(const WTrajectory& traj, const MildTrajectory& V, double alpha, PsiMode mode,
                                double s, double t);

/// Same check for many pairs with one pass over the snapshots.
std::vector<GenEnergyCheck> check_gen_energy(const WTrajectory& traj, const MildTrajectory& V, double alpha,
                                             PsiMode mode, const std::vector<std::pair<double, double>>& pairs);

/// Up to `count` distinct pairs s < t drawn from `seed` among the stored
/// times nearest to the lattice t_0 + (t_end - t_0) {0, 1/20, ..., 1}. Runs
/// storing every step with a step count divisible by 20 get lattice times
/// that do not depend on dt.
std::vector<std::pair<double, double>> sample_time_pairs(const std::vector<double>& stored_times, int count,
                                                         std::uint64_t seed);

/// Tolerance for a gen-energy slack at time t: 1e-6 ||w0||^2 E(t).
double gen_energy_tolerance(double l2_sq0, double alpha, PsiMode mode, double t);

/// Integrated bound check: lhs <= rhs.
struct BoundCheck
{
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds() const { return lhs <= rhs; }
};

struct SplittingOptions
{
  /// Fraction of t_max treated as the initial transient in trend checks.
  double transient_fraction = 0.2;
  /// Compute the delta-minus-phi gen-energy slack from t = 0 at every row.
  bool gen_energy_column = true;
};

struct SplittingDiagnostics
{
  double alpha = 3.0;
  double l2_sq0 = 0.0;
  double K = 0.0;
  double sup_V = 0.0;
  KernelNorms kernels;

  std::vector<double> times;
  std::vector<double> l2_sq;
  std::vector<double> low_mass;
  std::vector<double> high_mass;
  std::vector<double> cross_mass;
  std::vector<double> G;
  std::vector<double> E;
  std::vector<double> gen_energy_slack;
  std::vector<double> I2_lhs, I2_rhs, I3_lhs, I3_rhs, I4_lhs, I4_rhs;
  /// 0.5 (D(t_max) - D(t)) from the ledger.
  std::vector<double> tail_dissipation;

  /// J1..J4 integrated over [0, t_max].
  std::vector<BoundCheck> J;

  /// max_t |E' - 2 E G^2| / E'.
  double annihilation_residual = 0.0;
  /// Largest violation of sqrt(low) + sqrt(high) >= ||w|| (negative is fine).
  double triangle_violation = 0.0;
  /// max_t |low + high + 2 cross - ||w||^2| / ||w0||^2.
  double completeness_residual = 0.0;
  /// Grid multiplier checks 1 - exp(-|xi|^2) <= |xi|^2 and <= 1 on every mode.
  bool multiplier_bounds = true;
  /// high <= max_k (1 - exp(-|xi|^2))^2 ||w||^2 at every row.
  bool high_dominance = true;

  /// (alpha^3 / 4) ||w0||^2 int_0^t (1+tau)^(alpha-3) / E(t) at t_max/2 and t_max.
  double budget_ratio_half = 0.0;
  double budget_ratio_end = 0.0;
  bool budget_trend() const { return budget_ratio_end < budget_ratio_half; }

  bool low_monotone = true;
  bool high_monotone = true;
  bool tail_monotone = true;

  bool I_bounds_hold() const;
  bool J_bounds_hold() const;
};

/// Fills the splitting diagnostics over the stored snapshots. K and sup_V
/// come from V (zero when V vanishes); ||w0||^2 is the ledger's first row.
/// Throws std::invalid_argument for alpha <= 0.
SplittingDiagnostics run_splitting_analysis(const WTrajectory& traj, const MildTrajectory& V,
                                            const EnergyLedger& ledger, double alpha,
                                            const SplittingOptions& opts = {});

void write_diagnostics_csv(const std::filesystem::path& path, const SplittingDiagnostics& d);

struct DecayReport
{
  std::vector<double> times;
  std::vector<double> w_l2;
  std::vector<double> V_l3;
  double final_over_initial = 0.0;
  /// Least-squares rate r in ||w|| ~ exp(-r t) and exponent p in
  /// ||w|| ~ (1+t)^(-p), both over the second half of the run.
  double exponential_rate = 0.0;
  double algebraic_exponent = 0.0;

  bool w_nonincreasing = true;
  bool decay_threshold_met = true;
  bool masses_monotone = true;
  bool V_l3_nonincreasing = true;
  double threshold = 0.2;

  bool pass() const { return w_nonincreasing && decay_threshold_met && masses_monotone && V_l3_nonincreasing; }
};

/// ||w||_2 from the ledger rows, ||V||_3 at the snapshot times. The decay
/// threshold applies to ||w(t_max)|| / ||w0||.
DecayReport decay_report(const WTrajectory& traj, const MildTrajectory& V, const EnergyLedger& ledger,
                         const SplittingDiagnostics& split, double threshold = 0.2);

std::string format_decay_report(const DecayReport& r);

} // namespace nsstab
