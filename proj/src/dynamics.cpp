#include "nsstab/dynamics.hpp"

#include "nsstab/kernels.hpp"
#include "nsstab/nonlinear.hpp"
#include "nsstab/random_fields.hpp"
#include "nsstab/spectral_ops.hpp"
#include "nsstab/trilinear.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace nsstab {

namespace {

std::string cfl_message(double dt, double admissible)
{
  char buf[160];
  std::snprintf(buf, sizeof buf, "CFL violation: dt = %.6g exceeds admissible dt = %.6g", dt, admissible);
  return buf;
}

SpectralVectorField zero_like(const SpectralVectorField& f)
{
  SpectralVectorField z(f.table_ptr());
  z.set_divergence_free(true);
  return z;
}

double admissible_from_speed(const GridSpec& grid, double speed)
{
  return speed > 0.0 ? 0.5 * grid.spacing() / speed : std::numeric_limits<double>::infinity();
}

/// Flux form plus the max speed seen on the grid.
SpectralVectorField rhs_with_speed(const SpectralVectorField& w, const SpectralVectorField* V, double& speed)
{
  if (V != nullptr && !w.same_grid(*V))
    throw GridMismatch("rhs");
  if (w.is_zero()) {
    speed = V != nullptr ? max_velocity(*V) : 0.0;
    return zero_like(w);
  }
  auto out = projected_flux_divergence(w, V, &speed);
  out *= -1.0;
  out.set_divergence_free(true);
  return out;
}

double log_mean(double a, double b)
{
  if (a <= 0.0 || b <= 0.0)
    return 0.5 * (a + b);
  const double r = std::log(a / b);
  if (std::abs(r) < 1e-6)
    return 0.5 * (a + b);
  return (a - b) / r;
}

double mode_energy(const SpectralVectorField& f, std::size_t m)
{
  return std::norm(f.at(m, 0)) + std::norm(f.at(m, 1)) + std::norm(f.at(m, 2));
}

/// 2 int ||grad w||^2 over one step.
double dissipation_increment(const SpectralVectorField& a, const SpectralVectorField& b, double grad_a,
                             double grad_b, double dt, DissipationQuadrature q)
{
  if (q == DissipationQuadrature::Trapezoid)
    return dt * (grad_a + grad_b);
  const auto modes = a.table().modes();
  const double s = exec::dispatch([&](auto p) {
    return exec::sum(p, modes.size(), [&](std::size_t m) {
      return modes[m].weight * modes[m].xi_sq * log_mean(mode_energy(a, m), mode_energy(b, m));
    });
  });
  return 2.0 * dt * a.grid().volume() * s;
}

LedgerRow make_row(double t, const SpectralVectorField& w, double dissipation_cum)
{
  return {t, l2_norm_sq(w), gradient_norm_sq(w), dissipation_cum};
}

std::int64_t step_count(double t_max, double dt)
{
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("evolve: dt must be positive");
  if (!(t_max >= 0.0) || !std::isfinite(t_max))
    throw std::invalid_argument("evolve: t_max must be non-negative");
  const double ratio = t_max / dt;
  const auto n = static_cast<std::int64_t>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(n)) > 1e-9 * std::max(1.0, ratio))
    throw std::invalid_argument("evolve: t_max must be an integer multiple of dt");
  return n;
}

void push_snapshot(WTrajectory& traj, std::int64_t n, const SpectralVectorField& w)
{
  traj.steps.push_back(n);
  traj.times.push_back(static_cast<double>(n) * traj.dt);
  traj.snapshots.push_back(w);
}

} // namespace

CflViolation::CflViolation(double dt, double admissible_dt)
  : std::runtime_error(cfl_message(dt, admissible_dt)), dt_(dt), admissible_(admissible_dt)
{}

void GalerkinTruncation::validate(const GridSpec& grid) const
{
  if (!(m >= 1.0) || m > grid.kmax())
    throw std::invalid_argument("Galerkin radius must lie in [1, " + std::to_string(grid.kmax()) + "], got " +
                                std::to_string(m));
}

SpectralVectorField rhs(const SpectralVectorField& w, const SpectralVectorField* V)
{
  double speed = 0.0;
  return rhs_with_speed(w, V, speed);
}

SpectralVectorField rhs(const SpectralVectorField& w, const SpectralVectorField& V) { return rhs(w, &V); }

SpectralVectorField rhs_rotational(const SpectralVectorField& w)
{
  const auto wp = to_physical(w);
  const auto op = to_physical(curl(w));
  PhysicalVectorField cross(w.grid());
  exec::dispatch([&](auto p) {
    exec::for_each(p, wp.size(), [&](std::size_t i) {
      cross.comps[0][i] = wp.comps[1][i] * op.comps[2][i] - wp.comps[2][i] * op.comps[1][i];
      cross.comps[1][i] = wp.comps[2][i] * op.comps[0][i] - wp.comps[0][i] * op.comps[2][i];
      cross.comps[2][i] = wp.comps[0][i] * op.comps[1][i] - wp.comps[1][i] * op.comps[0][i];
    });
  });
  return leray_project(to_spectral(cross));
}

SpectralVectorField rhs_advective(const SpectralVectorField& w, const SpectralVectorField* V)
{
  auto sum = advective_term(w, w);
  if (V != nullptr) {
    sum += advective_term(w, *V);
    sum += advective_term(*V, w);
  }
  sum *= -1.0;
  return leray_project(sum);
}

double cfl_dt(const SpectralVectorField& w, const SpectralVectorField* V)
{
  const auto wp = to_physical(w);
  const PhysicalVectorField vp = V != nullptr ? to_physical(*V) : PhysicalVectorField(w.grid());
  const double speed = exec::dispatch([&](auto p) { return kernels::grid_max_speed_sum(p, wp.comps, vp.comps); });
  return admissible_from_speed(w.grid(), speed);
}

SpectralVectorField step(const SpectralVectorField& w, const SpectralVectorField* V_t,
                         const SpectralVectorField* V_half, double dt, bool nonlinear)
{
  if (!(dt > 0.0))
    throw std::invalid_argument("step: dt must be positive");
  if (!nonlinear)
    return heat_semigroup(w, dt);

  double speed = 0.0;
  auto k1 = rhs_with_speed(w, V_t, speed);
  const double admissible = admissible_from_speed(w.grid(), speed);
  if (dt > admissible)
    throw CflViolation(dt, admissible);

  k1 *= 0.5 * dt;
  k1 += w;
  const auto w_half = heat_semigroup(k1, 0.5 * dt);
  auto k2 = rhs(w_half, V_half);
  auto next = heat_semigroup(w, dt);
  next += heat_semigroup(k2, 0.5 * dt) * dt;
  next.set_divergence_free(true);
  return next;
}

std::string to_string(DissipationQuadrature q)
{
  return q == DissipationQuadrature::Trapezoid ? "trapezoid" : "exponential";
}

DissipationQuadrature parse_quadrature(const std::string& text)
{
  if (text == "trapezoid")
    return DissipationQuadrature::Trapezoid;
  if (text == "exponential")
    return DissipationQuadrature::Exponential;
  throw std::invalid_argument("unknown dissipation quadrature '" + text + "'");
}

double EnergyLedger::slack(std::size_t s, std::size_t t) const
{
  const auto& a = rows.at(s);
  const auto& b = rows.at(t);
  return a.l2_sq - b.l2_sq - (1.0 - K_sup_V) * (b.dissipation_cum - a.dissipation_cum);
}

EnergyLedger::PairSlack EnergyLedger::min_pair_slack() const
{
  // slack(s, t) = q(s) - q(t) with q = l2_sq + (1 - K) D, so the worst pair
  // ending at t starts at the running minimum of q.
  PairSlack best{0.0, 0, 0};
  if (rows.empty())
    return best;
  auto q = [&](std::size_t i) { return rows[i].l2_sq + (1.0 - K_sup_V) * rows[i].dissipation_cum; };
  std::size_t arg_min = 0;
  for (std::size_t t = 1; t < rows.size(); ++t) {
    if (q(t - 1) < q(arg_min))
      arg_min = t - 1;
    const double v = slack(arg_min, t);
    if (v < best.value || (best.s == 0 && best.t == 0))
      best = {v, arg_min, t};
  }
  return best;
}

double EnergyLedger::dissipation_bound_ratio() const
{
  if (rows.empty() || rows.front().l2_sq == 0.0)
    return 0.0;
  const double bound = rows.front().l2_sq / (1.0 - K_sup_V);
  double d = 0.0;
  for (const auto& r : rows)
    d = std::max(d, r.dissipation_cum);
  return d / bound;
}

double energy_tolerance(double l2_sq0, double dt) { return 1e-6 * l2_sq0 * (dt / kReferenceDt); }

void write_ledger_csv(const std::filesystem::path& path, const EnergyLedger& ledger)
{
  std::ofstream out(path);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  out << "t,l2_sq,grad_l2_sq,dissipation_cum,slack_vs_t0,K_sup_V\n";
  char buf[256];
  for (std::size_t i = 0; i < ledger.rows.size(); ++i) {
    const auto& r = ledger.rows[i];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t, r.l2_sq, r.grad_l2_sq,
                  r.dissipation_cum, ledger.slack_vs_t0(i), ledger.K_sup_V);
    out << buf;
  }
}

nlohmann::json ledger_to_json(const EnergyLedger& ledger)
{
  std::vector<double> t, l2, grad, diss;
  for (const auto& r : ledger.rows) {
    t.push_back(r.t);
    l2.push_back(r.l2_sq);
    grad.push_back(r.grad_l2_sq);
    diss.push_back(r.dissipation_cum);
  }
  return {{"K_sup_V", ledger.K_sup_V},
          {"quadrature", to_string(ledger.quadrature)},
          {"t", t},
          {"l2_sq", l2},
          {"grad_l2_sq", grad},
          {"dissipation_cum", diss}};
}

EnergyLedger ledger_from_json(const nlohmann::json& j)
{
  EnergyLedger ledger;
  ledger.K_sup_V = j.at("K_sup_V").get<double>();
  ledger.quadrature = parse_quadrature(j.at("quadrature").get<std::string>());
  const auto t = j.at("t").get<std::vector<double>>();
  const auto l2 = j.at("l2_sq").get<std::vector<double>>();
  const auto grad = j.at("grad_l2_sq").get<std::vector<double>>();
  const auto diss = j.at("dissipation_cum").get<std::vector<double>>();
  if (l2.size() != t.size() || grad.size() != t.size() || diss.size() != t.size())
    throw std::invalid_argument("ledger columns have different lengths");
  for (std::size_t i = 0; i < t.size(); ++i)
    ledger.rows.push_back({t[i], l2[i], grad[i], diss[i]});
  return ledger;
}

std::size_t WTrajectory::index_of(double t) const
{
  for (std::size_t i = 0; i < times.size(); ++i)
    if (std::abs(times[i] - t) <= 1e-9 * std::max(dt, 1e-300))
      return i;
  throw std::out_of_range("no stored snapshot at t = " + std::to_string(t));
}

EvolveResult evolve(const SpectralVectorField& w0, const MildTrajectory& V, const EvolveOptions& opts)
{
  if (w0.divergence_residual() > 1e-10)
    throw std::invalid_argument("evolve: w0 is not divergence-free");
  if (!V.slices.empty() && !(V.grid == w0.grid()))
    throw GridMismatch("evolve");
  SpectralVectorField start = w0;
  if (opts.truncation) {
    opts.truncation->validate(w0.grid());
    start = truncate_ball(w0, opts.truncation->m);
  }
  start.set_divergence_free(true);
  EnergyLedger ledger;
  ledger.K_sup_V = V.is_zero() ? 0.0 : V.K_used * V.sup_norm;
  ledger.quadrature = opts.quadrature;
  ledger.rows.push_back(make_row(0.0, start, 0.0));
  return resume(EvolveState{0, std::move(start), std::move(ledger)}, V, opts);
}

EvolveResult resume(EvolveState state, const MildTrajectory& V, const EvolveOptions& opts)
{
  const std::int64_t n_total = step_count(opts.t_max, opts.dt);
  if (opts.store_every < 1)
    throw std::invalid_argument("evolve: store_every must be positive");
  if (opts.truncation)
    opts.truncation->validate(state.w.grid());
  if (state.ledger.rows.empty())
    throw std::invalid_argument("resume: state carries an empty ledger");
  if (state.step > n_total)
    throw std::invalid_argument("resume: state is already past t_max");

  const bool zero_V = V.slices.empty() || V.is_zero();
  const double dt = opts.dt;
  EvolveResult result{WTrajectory{dt, {}, {}, {}}, std::move(state), std::nullopt};
  auto& st = result.state;
  push_snapshot(result.trajectory, st.step, st.w);
  double grad_prev = st.ledger.rows.back().grad_l2_sq;

  while (st.step < n_total) {
    const double t = static_cast<double>(st.step) * dt;
    SpectralVectorField next(st.w.table_ptr());
    try {
      if (zero_V) {
        next = step(st.w, nullptr, nullptr, dt, opts.nonlinear);
      } else {
        const auto v_t = V.at(t);
        const auto v_half = V.at(t + 0.5 * dt);
        next = step(st.w, &v_t, &v_half, dt, opts.nonlinear);
      }
      if (opts.truncation)
        next = truncate_ball(next, opts.truncation->m);
      next.set_divergence_free(true);
    } catch (const std::exception& e) {
      result.error = "step " + std::to_string(st.step) + " (t = " + std::to_string(t) + "): " + e.what();
      break;
    }

    const double grad_next = gradient_norm_sq(next);
    const double inc = dissipation_increment(st.w, next, grad_prev, grad_next, dt, st.ledger.quadrature);
    const double d = st.ledger.rows.back().dissipation_cum + inc;
    st.w = std::move(next);
    ++st.step;
    st.ledger.rows.push_back({static_cast<double>(st.step) * dt, l2_norm_sq(st.w), grad_next, d});
    grad_prev = grad_next;

    if (st.step % opts.store_every == 0 || st.step == n_total)
      push_snapshot(result.trajectory, st.step, st.w);
    if (opts.checkpoint_every > 0 && opts.on_checkpoint && st.step % opts.checkpoint_every == 0)
      opts.on_checkpoint(st);
  }
  if (result.error && result.trajectory.steps.back() != st.step)
    push_snapshot(result.trajectory, st.step, st.w);
  return result;
}

WeakResidual weak_residual(const WTrajectory& traj, const MildTrajectory& V, const SpectralVectorField& test_field,
                           double s, double t, TestProfile profile, WeakForm form)
{
  if (!(s < t))
    throw std::out_of_range("weak_residual: need s < t");
  const std::size_t is = traj.index_of(s), it = traj.index_of(t);
  const bool zero_V = V.slices.empty() || V.is_zero();
  const auto& psi = test_field;

  auto weight = [&](double tau) { return profile == TestProfile::Exponential ? std::exp(-tau) : 1.0; };
  auto weight_rate = [&](double tau) { return profile == TestProfile::Exponential ? -std::exp(-tau) : 0.0; };

  // Integrands of the two sides at snapshot j.
  auto integrands = [&](std::size_t j) {
    const double tau = traj.times[j];
    const auto& w = traj.snapshots[j];
    double lhs = weighted_inner(w, psi, [](const Mode& m) { return m.xi_sq; }) + b_value(w, w, psi);
    if (!zero_V) {
      const auto v = V.at(tau);
      if (form == WeakForm::AsDisplayed)
        lhs += -b_value(w, psi, v) + b_value(v, w, psi);
      else
        lhs += b_value(w, v, psi) + b_value(v, w, psi);
    }
    return std::pair{weight(tau) * lhs, weight_rate(tau) * l2_inner(w, psi)};
  };

  double int_lhs = 0.0, int_rhs = 0.0;
  auto prev = integrands(is);
  for (std::size_t j = is + 1; j <= it; ++j) {
    const auto cur = integrands(j);
    const double h = traj.times[j] - traj.times[j - 1];
    int_lhs += 0.5 * h * (prev.first + cur.first);
    int_rhs += 0.5 * h * (prev.second + cur.second);
    prev = cur;
  }

  WeakResidual r;
  r.lhs = weight(t) * l2_inner(traj.snapshots[it], psi) + int_lhs;
  r.rhs = weight(s) * l2_inner(traj.snapshots[is], psi) + int_rhs;
  r.residual = std::abs(r.lhs - r.rhs);
  return r;
}

} // namespace nsstab
