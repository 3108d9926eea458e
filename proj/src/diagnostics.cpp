#include "nsstab/diagnostics.hpp"

#include "nsstab/kernels.hpp"
#include "nsstab/space_norm.hpp"
#include "nsstab/spectral_ops.hpp"
#include "nsstab/trilinear.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace nsstab {

namespace {

constexpr std::array<double, 4> kGaussNodes{-0.86113631159405258, -0.33998104358485626, 0.33998104358485626,
                                            0.86113631159405258};
constexpr std::array<double, 4> kGaussWeights{0.34785484513745386, 0.65214515486254614, 0.65214515486254614,
                                              0.34785484513745386};

double heat_density(double s, double r) { return std::pow(4.0 * std::numbers::pi * s, -1.5) * std::exp(-r * r / (4.0 * s)); }

double eta_density(double r) { return heat_density(2.0, r) - 2.0 * heat_density(1.0, r); }

/// (int_{R^3} |f|^q)^(1/q) for a radial f, split at `kink` where f changes sign.
template <class F>
double radial_norm(F f, double q, double kink)
{
  using boost::math::quadrature::gauss_kronrod;
  auto integrand = [&](double r) { return 4.0 * std::numbers::pi * r * r * std::pow(std::abs(f(r)), q); };
  const double inner = gauss_kronrod<double, 61>::integrate(integrand, 0.0, kink, 15, 1e-14);
  const double outer =
      gauss_kronrod<double, 61>::integrate(integrand, kink, std::numeric_limits<double>::infinity(), 15, 1e-14);
  return std::pow(inner + outer, 1.0 / q);
}

std::vector<double> mode_energies(const SpectralVectorField& w)
{
  const auto n = w.mode_count();
  std::vector<double> e(n);
  exec::dispatch([&](auto p) {
    exec::for_each(p, n, [&](std::size_t m) {
      e[m] = std::norm(w.at(m, 0)) + std::norm(w.at(m, 1)) + std::norm(w.at(m, 2));
    });
  });
  return e;
}

/// L^3 sum_k weight symbol(xi^2) e_k.
template <class Sym>
double mass(const ModeTable& table, const std::vector<double>& e, Sym symbol)
{
  const auto modes = table.modes();
  const double s = exec::dispatch([&](auto p) {
    return exec::sum(p, modes.size(), [&](std::size_t m) { return modes[m].weight * symbol(modes[m].xi_sq) * e[m]; });
  });
  return table.grid().volume() * s;
}

/// <a, symbol w> with a real symbol of xi^2.
template <class Sym>
double paired(const SpectralVectorField& a, const SpectralVectorField& w, Sym symbol)
{
  const auto modes = a.table().modes();
  std::vector<double> sym(modes.size());
  for (std::size_t m = 0; m < modes.size(); ++m)
    sym[m] = symbol(modes[m].xi_sq);
  const double s = exec::dispatch([&](auto p) { return kernels::mode_inner(p, modes, sym, a.coeffs(), w.coeffs()); });
  return a.grid().volume() * s;
}

/// Value of int_{t0}^{t1} c(tau, xi^2) |w_k(tau)|^2 dtau summed over modes,
/// with |w_k|^2 interpolated exponentially between the endpoint values.
template <class Coef>
double linear_step(const ModeTable& table, const std::vector<double>& e0, const std::vector<double>& e1, double t0,
                   double t1, Coef coef)
{
  const auto modes = table.modes();
  const double h = t1 - t0;
  std::array<double, 4> taus{}, thetas{};
  for (int q = 0; q < 4; ++q) {
    thetas[q] = 0.5 * (kGaussNodes[q] + 1.0);
    taus[q] = t0 + h * thetas[q];
  }
  const double s = exec::dispatch([&](auto p) {
    return exec::sum(p, modes.size(), [&](std::size_t m) {
      const double a = e0[m], b = e1[m];
      if (a == 0.0 && b == 0.0)
        return 0.0;
      const bool geometric = a > 0.0 && b > 0.0;
      const double log_ratio = geometric ? std::log(b / a) : 0.0;
      double acc = 0.0;
      for (int q = 0; q < 4; ++q) {
        const double v = geometric ? a * std::exp(thetas[q] * log_ratio) : a + thetas[q] * (b - a);
        acc += kGaussWeights[q] * coef(taus[q], modes[m].xi_sq) * v;
      }
      return modes[m].weight * 0.5 * h * acc;
    });
  });
  return table.grid().volume() * s;
}

struct Psi
{
  PsiMode mode;
  double alpha;
  double t;   // target time; used by the shifted heat kernel

  double E(double tau) const { return mode == PsiMode::HeatKernelShifted ? 1.0 : weight_E(alpha, tau); }
  double E_rate(double tau) const { return mode == PsiMode::HeatKernelShifted ? 0.0 : weight_E_rate(alpha, tau); }
  double m(double tau, double xi_sq) const
  {
    if (mode == PsiMode::HeatKernelShifted)
      return std::exp(-(t - tau) * xi_sq - xi_sq);
    return 1.0 - std::exp(-xi_sq);
  }
  double m_rate(double tau, double xi_sq) const
  {
    return mode == PsiMode::HeatKernelShifted ? xi_sq * m(tau, xi_sq) : 0.0;
  }
  /// Coefficient of |w_k|^2 in E'|psi w|^2 + 2E(<psi' w, psi w> - |psi grad w|^2).
  double linear_coef(double tau, double xi_sq) const
  {
    const double mv = m(tau, xi_sq);
    return E_rate(tau) * mv * mv + 2.0 * E(tau) * (mv * m_rate(tau, xi_sq) - xi_sq * mv * mv);
  }
};

/// Sum of the three advective products whose pairing with psi psi w gives the
/// trilinear terms.
SpectralVectorField transport_sum(const SpectralVectorField& w, const SpectralVectorField* v)
{
  auto s = advective_term(w, w);
  if (v != nullptr) {
    s += advective_term(*v, w);
    s += advective_term(w, *v);
  }
  return s;
}

bool zero_background(const MildTrajectory& V) { return V.slices.empty() || V.is_zero(); }

} // namespace

SplitMasses split_masses(const SpectralVectorField& w)
{
  const auto e = mode_energies(w);
  SplitMasses r;
  r.low = mass(w.table(), e, [](double x) { return std::exp(-2.0 * x); });
  r.high = mass(w.table(), e, [](double x) {
    const double h = -std::expm1(-x);
    return h * h;
  });
  r.cross = mass(w.table(), e, [](double x) { return std::exp(-x) * -std::expm1(-x); });
  return r;
}

double weight_E(double alpha, double t) { return std::pow(1.0 + t, alpha); }
double weight_E_rate(double alpha, double t) { return alpha * std::pow(1.0 + t, alpha - 1.0); }
double cutoff_G(double alpha, double t) { return std::sqrt(alpha / (2.0 * (1.0 + t))); }

KernelNorms kernel_norms()
{
  KernelNorms k;
  // Heat kernel at time 2: ||.||_q = (8 pi)^(-3/2) (8 pi / q)^(3/(2q)).
  const double q = 1.2;
  k.phiphi_6_5 = std::pow(8.0 * std::numbers::pi, -1.5) * std::pow(8.0 * std::numbers::pi / q, 1.5 / q);
  k.phiphi_1 = 1.0;
  // eta changes sign where exp(r^2/8) = 2^(5/2).
  const double kink = std::sqrt(8.0 * std::log(std::pow(2.0, 2.5)));
  k.eta_6_5 = radial_norm(eta_density, q, kink);
  k.eta_1 = radial_norm(eta_density, 1.0, kink);
  return k;
}

double phiphi_6_5_quadrature()
{
  return radial_norm([](double r) { return heat_density(2.0, r); }, 1.2, 4.0);
}

std::string to_string(PsiMode mode)
{
  return mode == PsiMode::HeatKernelShifted ? "heat_kernel_shifted" : "delta_minus_phi";
}

GenEnergyCheck check_gen_energy(const WTrajectory& traj, const MildTrajectory& V, double alpha, PsiMode mode,
                                double s, double t)
{
  return check_gen_energy(traj, V, alpha, mode, std::vector<std::pair<double, double>>{{s, t}}).front();
}

std::vector<GenEnergyCheck> check_gen_energy(const WTrajectory& traj, const MildTrajectory& V, double alpha,
                                             PsiMode mode, const std::vector<std::pair<double, double>>& pairs)
{
  if (mode == PsiMode::DeltaMinusPhi && !(alpha > 0.0))
    throw std::invalid_argument("check_gen_energy: alpha must be positive");
  struct Active
  {
    std::size_t is, it;
    Psi psi;
    double tri_prev = 0.0;
  };
  std::vector<Active> active;
  std::vector<GenEnergyCheck> out(pairs.size());
  std::size_t lo = traj.times.size(), hi = 0;
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [s, t] = pairs[p];
    if (!(s < t))
      throw std::out_of_range("check_gen_energy: need s < t");
    const std::size_t is = traj.index_of(s), it = traj.index_of(t);
    active.push_back({is, it, Psi{mode, alpha, traj.times[it]}});
    out[p].s = traj.times[is];
    out[p].t = traj.times[it];
    lo = std::min(lo, is);
    hi = std::max(hi, it);
  }
  if (pairs.empty())
    return out;

  const bool zero_V = zero_background(V);
  const auto& table = traj.snapshots.front().table();
  std::vector<double> e_prev;
  for (std::size_t j = lo; j <= hi; ++j) {
    const double tau = traj.times[j];
    const auto& w = traj.snapshots[j];
    const auto e = mode_energies(w);
    const bool needed = std::any_of(active.begin(), active.end(), [&](const Active& a) { return a.is <= j && j <= a.it; });
    if (!needed) {
      e_prev = e;
      continue;
    }
    SpectralVectorField S(w.table_ptr());
    if (!w.is_zero()) {
      if (zero_V) {
        S = transport_sum(w, nullptr);
      } else {
        const auto v = V.at(tau);
        S = transport_sum(w, &v);
      }
    }
    for (std::size_t p = 0; p < active.size(); ++p) {
      auto& a = active[p];
      if (j < a.is || j > a.it)
        continue;
      const auto& psi = a.psi;
      const double tri = psi.E(tau) * paired(S, w, [&](double x) {
        const double mv = psi.m(tau, x);
        return mv * mv;
      });
      if (j == a.is) {
        out[p].initial = psi.E(tau) * mass(table, e, [&](double x) {
          const double mv = psi.m(tau, x);
          return mv * mv;
        });
      } else {
        const double h = tau - traj.times[j - 1];
        out[p].linear += linear_step(table, e_prev, e, traj.times[j - 1], tau,
                                     [&](double tt, double x) { return psi.linear_coef(tt, x); });
        out[p].trilinear += -2.0 * 0.5 * h * (a.tri_prev + tri);
      }
      a.tri_prev = tri;
      if (j == a.it) {
        out[p].lhs = psi.E(tau) * mass(table, e, [&](double x) {
          const double mv = psi.m(tau, x);
          return mv * mv;
        });
        out[p].rhs = out[p].initial + out[p].linear + out[p].trilinear;
        out[p].slack = out[p].rhs - out[p].lhs;
      }
    }
    e_prev = e;
  }
  return out;
}

std::vector<std::pair<double, double>> sample_time_pairs(const std::vector<double>& stored_times, int count,
                                                         std::uint64_t seed)
{
  constexpr int lattice = 20;
  if (count < 0)
    throw std::invalid_argument("sample_time_pairs: negative pair count");
  if (stored_times.size() < 2 || count == 0)
    return {};
  const auto last = stored_times.size() - 1;
  std::vector<std::size_t> nodes;
  for (int i = 0; i <= lattice; ++i) {
    const auto idx = static_cast<std::size_t>(std::llround(static_cast<double>(i) * last / lattice));
    if (nodes.empty() || nodes.back() != idx)
      nodes.push_back(idx);
  }
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t a = 0; a < nodes.size(); ++a)
    for (std::size_t b = a + 1; b < nodes.size(); ++b)
      all.emplace_back(nodes[a], nodes[b]);
  std::mt19937_64 rng(seed);
  // Partial Fisher-Yates with explicit index draws, independent of the
  // standard library's shuffle implementation.
  const auto take = std::min(all.size(), static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < take; ++i) {
    const auto j = i + static_cast<std::size_t>(rng() % (all.size() - i));
    std::swap(all[i], all[j]);
  }
  std::vector<std::pair<double, double>> out;
  for (std::size_t i = 0; i < take; ++i)
    out.emplace_back(stored_times[all[i].first], stored_times[all[i].second]);
  return out;
}

double gen_energy_tolerance(double l2_sq0, double alpha, PsiMode mode, double t)
{
  const double E = mode == PsiMode::HeatKernelShifted ? 1.0 : weight_E(alpha, t);
  return 1e-6 * l2_sq0 * E;
}

bool SplittingDiagnostics::I_bounds_hold() const
{
  for (std::size_t i = 0; i < times.size(); ++i)
    if (I2_lhs[i] > I2_rhs[i] || I3_lhs[i] > I3_rhs[i] || I4_lhs[i] > I4_rhs[i])
      return false;
  return true;
}

bool SplittingDiagnostics::J_bounds_hold() const
{
  return std::all_of(J.begin(), J.end(), [](const BoundCheck& b) { return b.holds(); });
}

SplittingDiagnostics run_splitting_analysis(const WTrajectory& traj, const MildTrajectory& V,
                                            const EnergyLedger& ledger, double alpha, const SplittingOptions& opts)
{
  if (!(alpha > 0.0))
    throw std::invalid_argument("run_splitting_analysis: alpha must be positive");
  if (traj.snapshots.empty() || ledger.rows.empty())
    throw std::invalid_argument("run_splitting_analysis: empty trajectory or ledger");

  SplittingDiagnostics d;
  d.alpha = alpha;
  d.l2_sq0 = ledger.rows.front().l2_sq;
  const bool zero_V = zero_background(V);
  d.K = zero_V ? 0.0 : V.K_used;
  d.sup_V = zero_V ? 0.0 : V.sup_norm;
  d.kernels = kernel_norms();
  const double w0_norm = std::sqrt(d.l2_sq0);
  const double C_S = sobolev_constant();
  const auto& table = traj.snapshots.front().table();

  double max_multiplier_sq = 0.0;
  for (const auto& m : table.modes()) {
    const double h = -std::expm1(-m.xi_sq);
    if (h > m.xi_sq || h > 1.0)
      d.multiplier_bounds = false;
    max_multiplier_sq = std::max(max_multiplier_sq, h * h);
  }

  const auto pp = [](double x) { return std::exp(-2.0 * x); };
  const auto eta = [](double x) { return std::exp(-2.0 * x) - 2.0 * std::exp(-x); };
  const auto one_plus_eta = [](double x) { return 1.0 + std::exp(-2.0 * x) - 2.0 * std::exp(-x); };

  // Running integrals for J1..J4 and the delta-minus-phi gen-energy column.
  double J_lhs[4] = {0, 0, 0, 0}, J_rhs[4] = {0, 0, 0, 0};
  double prev_lhs[4] = {0, 0, 0, 0}, prev_rhs[4] = {0, 0, 0, 0};
  const Psi psi{PsiMode::DeltaMinusPhi, alpha, 0.0};
  double ge_initial = 0.0, ge_linear = 0.0, ge_tri = 0.0, ge_tri_prev = 0.0;
  std::vector<double> e_prev;

  const double D_end = ledger.rows.back().dissipation_cum;
  for (std::size_t j = 0; j < traj.snapshots.size(); ++j) {
    const double tau = traj.times[j];
    const auto& w = traj.snapshots[j];
    const auto e = mode_energies(w);
    const double l2 = mass(table, e, [](double) { return 1.0; });
    const double grad = mass(table, e, [](double x) { return x; });
    const auto sm = split_masses(w);
    const double Ev = weight_E(alpha, tau), Er = weight_E_rate(alpha, tau), Gv = cutoff_G(alpha, tau);

    d.times.push_back(tau);
    d.l2_sq.push_back(l2);
    d.low_mass.push_back(sm.low);
    d.high_mass.push_back(sm.high);
    d.cross_mass.push_back(sm.cross);
    d.G.push_back(Gv);
    d.E.push_back(Ev);

    d.annihilation_residual = std::max(d.annihilation_residual, std::abs(Er - 2.0 * Ev * Gv * Gv) / Er);
    d.triangle_violation = std::max(d.triangle_violation, std::sqrt(l2) - (std::sqrt(sm.low) + std::sqrt(sm.high)));
    if (d.l2_sq0 > 0.0)
      d.completeness_residual =
          std::max(d.completeness_residual, std::abs(sm.low + sm.high + 2.0 * sm.cross - l2) / d.l2_sq0);
    if (sm.high > max_multiplier_sq * l2 * (1.0 + 1e-12))
      d.high_dominance = false;

    const auto step = static_cast<std::size_t>(traj.steps[j]);
    d.tail_dissipation.push_back(step < ledger.rows.size() ? 0.5 * (D_end - ledger.rows[step].dissipation_cum) : 0.0);

    // Advective products; V enters only through A_Vw and A_wV.
    SpectralVectorField A_ww(w.table_ptr()), A_Vw(w.table_ptr()), A_wV(w.table_ptr());
    if (!w.is_zero()) {
      A_ww = advective_term(w, w);
      if (!zero_V) {
        const auto v = V.at(tau);
        A_Vw = advective_term(v, w);
        A_wV = advective_term(w, v);
      }
    }

    d.I2_lhs.push_back(std::abs(paired(A_ww, w, pp)));
    d.I2_rhs.push_back(C_S * d.kernels.phiphi_6_5 * w0_norm * grad);
    d.I3_lhs.push_back(std::abs(paired(A_Vw, w, pp)));
    d.I3_rhs.push_back(d.K * d.kernels.phiphi_1 * d.sup_V * grad);
    d.I4_lhs.push_back(std::abs(paired(A_wV, w, pp)));
    d.I4_rhs.push_back(d.K * d.kernels.phiphi_1 * d.sup_V * grad);

    const double cur_lhs[4] = {
        mass(table, e,
             [&](double x) {
               const double h = -std::expm1(-x);
               return (Er - 2.0 * Ev * x) * h * h;
             }),
        Ev * std::abs(paired(A_ww, w, eta)),
        Ev * std::abs(paired(A_Vw, w, eta)),
        Ev * std::abs(paired(A_wV, w, one_plus_eta)),
    };
    const double cur_rhs[4] = {
        0.25 * alpha * alpha * alpha * d.l2_sq0 * std::pow(1.0 + tau, alpha - 3.0),
        C_S * d.kernels.eta_6_5 * w0_norm * Ev * grad,
        d.K * d.kernels.eta_1 * d.sup_V * Ev * grad,
        d.K * (1.0 + d.kernels.eta_1) * d.sup_V * Ev * grad,
    };

    auto S = A_ww;
    if (!zero_V) {
      S += A_Vw;
      S += A_wV;
    }
    const double ge_tri_cur = psi.E(tau) * paired(S, w, [&](double x) {
      const double mv = psi.m(tau, x);
      return mv * mv;
    });
    if (j == 0) {
      ge_initial = psi.E(tau) * mass(table, e, [&](double x) {
        const double mv = psi.m(tau, x);
        return mv * mv;
      });
    } else {
      const double h = tau - traj.times[j - 1];
      for (int k = 0; k < 4; ++k) {
        J_lhs[k] += 0.5 * h * (prev_lhs[k] + cur_lhs[k]);
        J_rhs[k] += 0.5 * h * (prev_rhs[k] + cur_rhs[k]);
      }
      if (opts.gen_energy_column) {
        ge_linear += linear_step(table, e_prev, e, traj.times[j - 1], tau,
                                 [&](double tt, double x) { return psi.linear_coef(tt, x); });
        ge_tri += -2.0 * 0.5 * h * (ge_tri_prev + ge_tri_cur);
      }
    }
    for (int k = 0; k < 4; ++k) {
      prev_lhs[k] = cur_lhs[k];
      prev_rhs[k] = cur_rhs[k];
    }
    ge_tri_prev = ge_tri_cur;
    const double ge_lhs = psi.E(tau) * mass(table, e, [&](double x) {
      const double mv = psi.m(tau, x);
      return mv * mv;
    });
    d.gen_energy_slack.push_back(opts.gen_energy_column ? ge_initial + ge_linear + ge_tri - ge_lhs : 0.0);
    e_prev = e;
  }

  const char* names[4] = {"J1", "J2", "J3", "J4"};
  for (int k = 0; k < 4; ++k)
    d.J.push_back({names[k], J_lhs[k], J_rhs[k]});

  const double t_end = d.times.back();
  auto budget_ratio = [&](double t) {
    const double integral =
        std::abs(alpha - 2.0) < 1e-14 ? std::log1p(t) : (std::pow(1.0 + t, alpha - 2.0) - 1.0) / (alpha - 2.0);
    return 0.25 * alpha * alpha * alpha * d.l2_sq0 * integral / weight_E(alpha, t);
  };
  d.budget_ratio_half = budget_ratio(0.5 * t_end);
  d.budget_ratio_end = budget_ratio(t_end);

  const double tol = 1e-10 * d.l2_sq0;
  const double t_transient = opts.transient_fraction * t_end;
  for (std::size_t j = 1; j < d.times.size(); ++j) {
    if (d.tail_dissipation[j] > d.tail_dissipation[j - 1] + tol)
      d.tail_monotone = false;
    if (d.times[j - 1] < t_transient)
      continue;
    if (d.low_mass[j] > d.low_mass[j - 1] + tol)
      d.low_monotone = false;
    if (d.high_mass[j] > d.high_mass[j - 1] + tol)
      d.high_monotone = false;
  }
  return d;
}

void write_diagnostics_csv(const std::filesystem::path& path, const SplittingDiagnostics& d)
{
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  out << "t,l2_sq,low_mass,high_mass,G,E,gen_energy_slack,I2_lhs,I2_rhs,I3_lhs,I3_rhs,I4_lhs,I4_rhs\n";
  char buf[512];
  for (std::size_t i = 0; i < d.times.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  d.times[i], d.l2_sq[i], d.low_mass[i], d.high_mass[i], d.G[i], d.E[i], d.gen_energy_slack[i],
                  d.I2_lhs[i], d.I2_rhs[i], d.I3_lhs[i], d.I3_rhs[i], d.I4_lhs[i], d.I4_rhs[i]);
    out << buf;
  }
}

namespace {

/// Least-squares slope of y against x.
double fit_slope(const std::vector<double>& x, const std::vector<double>& y)
{
  const auto n = static_cast<double>(x.size());
  if (x.size() < 2)
    return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  return den != 0.0 ? (n * sxy - sx * sy) / den : 0.0;
}

} // namespace

DecayReport decay_report(const WTrajectory& traj, const MildTrajectory& V, const EnergyLedger& ledger,
                         const SplittingDiagnostics& split, double threshold)
{
  DecayReport r;
  r.threshold = threshold;
  if (ledger.rows.empty())
    return r;
  const double l2_0 = ledger.rows.front().l2_sq;
  const double dt = ledger.rows.size() > 1 ? ledger.rows[1].t - ledger.rows[0].t : kReferenceDt;
  const double tol = energy_tolerance(l2_0, dt);
  for (std::size_t i = 0; i < ledger.rows.size(); ++i) {
    r.times.push_back(ledger.rows[i].t);
    r.w_l2.push_back(std::sqrt(ledger.rows[i].l2_sq));
    if (i > 0 && ledger.rows[i].l2_sq > ledger.rows[i - 1].l2_sq + tol)
      r.w_nonincreasing = false;
  }
  const double w0 = r.w_l2.front();
  r.final_over_initial = w0 > 0.0 ? r.w_l2.back() / w0 : 0.0;
  r.decay_threshold_met = r.final_over_initial <= threshold;

  std::vector<double> t_half, log_w, log_1pt;
  const double t_end = r.times.back();
  for (std::size_t i = 0; i < r.times.size(); ++i)
    if (r.times[i] >= 0.5 * t_end && r.w_l2[i] > 0.0) {
      t_half.push_back(r.times[i]);
      log_w.push_back(std::log(r.w_l2[i]));
      log_1pt.push_back(std::log1p(r.times[i]));
    }
  r.exponential_rate = -fit_slope(t_half, log_w);
  r.algebraic_exponent = -fit_slope(log_1pt, log_w);

  r.masses_monotone = split.low_monotone && split.high_monotone;

  const bool zero_V = V.slices.empty() || V.is_zero();
  const auto l3 = SpaceNorm::of(SpaceNorm::Tag::Lebesgue3);
  for (const double t : traj.times)
    r.V_l3.push_back(zero_V ? 0.0 : norm(V.at(t), l3));
  for (std::size_t i = 1; i < r.V_l3.size(); ++i)
    if (r.V_l3[i] > r.V_l3[i - 1] * (1.0 + 1e-12))
      r.V_l3_nonincreasing = false;
  return r;
}

std::string format_decay_report(const DecayReport& r)
{
  std::ostringstream os;
  char buf[256];
  std::snprintf(buf, sizeof buf, "final/initial ||w||_2      %.6g (threshold %.3g)\n", r.final_over_initial,
                r.threshold);
  os << buf;
  std::snprintf(buf, sizeof buf, "exponential rate (2nd half) %.6g\n", r.exponential_rate);
  os << buf;
  std::snprintf(buf, sizeof buf, "algebraic exponent (2nd half) %.6g\n", r.algebraic_exponent);
  os << buf;
  os << "||w||_2 non-increasing     " << (r.w_nonincreasing ? "yes" : "no") << "\n";
  os << "decay threshold met        " << (r.decay_threshold_met ? "yes" : "no") << "\n";
  os << "low/high masses monotone   " << (r.masses_monotone ? "yes" : "no") << "\n";
  os << "||V||_3 non-increasing     " << (r.V_l3_nonincreasing ? "yes" : "no") << "\n";
  return os.str();
}

} // namespace nsstab
