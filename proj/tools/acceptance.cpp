#include "nsstab/diagnostics.hpp"
#include "nsstab/dynamics.hpp"
#include "nsstab/exec.hpp"
#include "nsstab/experiment.hpp"
#include "nsstab/hardy.hpp"
#include "nsstab/mild.hpp"
#include "nsstab/random_fields.hpp"
#include "nsstab/spectral_ops.hpp"
#include "nsstab/trilinear.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

using namespace nsstab;
namespace fs = std::filesystem;

namespace {

struct Verdict
{
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

GridSpec grid_n(int n)
{
  GridSpec g;
  g.points_per_axis = n;
  return g;
}

const SpaceNorm linf = SpaceNorm::of(SpaceNorm::Tag::WeightedLinfty);

/// Shared setup for the N=64 runs: perturbation, background and K_hat.
struct Scenario64
{
  GridSpec grid = grid_n(64);
  SpectralVectorField w0{grid};
  MildTrajectory zero = zero_trajectory(grid, linf);
  MildTrajectory small = zero_trajectory(grid, linf);
  double K_hat = 0.0;

  Scenario64()
  {
    w0 = random_divfree_field(grid, 2.0, 7, 3.0);
    w0 *= 0.05 / rms_velocity(w0);
    auto V0 = random_divfree_field(grid, 2.5, 11);
    V0 *= 0.15 / max_velocity(V0);
    K_hat = estimate_hardy_constant(linf, grid, 60, 3).K_hat;
    small = stationary_trajectory(V0, linf);
    verify_standing_assumptions(small, K_hat);
  }
};

Scenario64& scenario64()
{
  static Scenario64 s;
  return s;
}

EvolveResult evolve_to(const SpectralVectorField& w0, const MildTrajectory& V, double t_max, double dt,
                       int store_every, std::optional<GalerkinTruncation> trunc = std::nullopt)
{
  EvolveOptions o;
  o.t_max = t_max;
  o.dt = dt;
  o.store_every = store_every;
  o.truncation = trunc;
  return evolve(w0, V, o);
}

/// Full small-background run at N=64 to t = 20, shared by criteria 3 and 4.
const EvolveResult& small_run_20()
{
  static const EvolveResult r = evolve_to(scenario64().w0, scenario64().small, 20.0, 0.05, 10);
  return r;
}

/// Admissible N=64 run to t = 50, shared by criteria 6 and 7.
struct LongRun
{
  EvolveResult run;
  SplittingDiagnostics split;
  DecayReport decay;
};

const LongRun& long_run()
{
  static const LongRun lr = [] {
    const auto& s = scenario64();
    LongRun out{evolve_to(s.w0, s.small, 50.0, 0.05, 10), {}, {}};
    out.split = run_splitting_analysis(out.run.trajectory, s.small, out.run.state.ledger, 3.0);
    out.decay = decay_report(out.run.trajectory, s.small, out.run.state.ledger, out.split, 0.2);
    return out;
  }();
  return lr;
}

Verdict trilinear_identities()
{
  const auto g = grid_n(32);
  double worst_zero = 0.0, worst_anti = 0.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto f = random_divfree_field(g, 2.0, 1000 + 3 * i);
    const auto u = random_divfree_field(g, 2.0, 1001 + 3 * i);
    const auto h = random_divfree_field(g, 2.0, 1002 + 3 * i);
    worst_zero = std::max(worst_zero, std::abs(b_value(f, h, h)) / (l2_norm(f) * gradient_norm_sq(h)));
    worst_anti = std::max(worst_anti, b_form(f, u, h).antisymmetry_residual);
  }
  return {worst_zero <= 1e-10 && worst_anti <= 1e-10,
          fmt("100 triples at N=32: max |b(f,h,h)| residual %.2e, max antisymmetry residual %.2e (tol 1e-10)",
              worst_zero, worst_anti)};
}

Verdict hardy_constant()
{
  const auto est = estimate_hardy_constant(linf, grid_n(32), 200, 42);
  const auto g = grid_n(64);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double width = g.box_length / 32.0 * std::pow(4.0, i / 19.0);
    const auto bump = (i % 2 == 0) ? gaussian_bump(g, {0.0, 0.0, 0.0}, width, {1.0, 0.5 * i / 19.0, 0.0})
                                   : solenoidal_bump(g, {0.0, 0.0, 0.0}, width, 100 + i);
    worst = std::max(worst, classical_hardy_ratio(bump));
  }
  return {est.K_hat <= 2.1 && worst <= 4.2,
          fmt("weighted_linfty K_hat %.4g over %d trials at N=32 (limit 2.1, %d rejected); max classical Hardy ratio "
              "%.4g over 20 centered bumps at N=64 (limit 4.2)",
              est.K_hat, est.trials, est.rejected, worst)};
}

double strict_tolerance(const EnergyLedger& L) { return 1e-6 * L.rows.front().l2_sq; }

Verdict strong_energy()
{
  const auto& s = scenario64();
  const auto zero = evolve_to(s.w0, s.zero, 20.0, 0.05, 1000);
  const auto& small = small_run_20();
  const double product = s.K_hat * s.small.sup_norm;
  const auto a = zero.state.ledger.min_pair_slack();
  const auto b = small.state.ledger.min_pair_slack();
  const double e0 = zero.state.ledger.rows.front().l2_sq;
  const bool ok = zero.completed() && small.completed() && product <= 0.5 &&
                  a.value >= -strict_tolerance(zero.state.ledger) && b.value >= -strict_tolerance(small.state.ledger);
  return {ok, fmt("N=64, t_max=20, dt=0.05, %zu rows each: min pair slack / ||w0||^2 zero_V %.3e, small V %.3e "
                  "(K_hat*sup %.3f <= 0.5; tol -1e-6)",
                  zero.state.ledger.rows.size(), a.value / e0, b.value / e0, product)};
}

Verdict galerkin()
{
  const auto& s = scenario64();
  const auto& full = small_run_20();
  const double e0 = l2_norm_sq(s.w0);
  bool ok = full.completed();
  double prev = std::numeric_limits<double>::infinity();
  std::string detail = "N=64, t_max=20, small V:";
  for (double m : {4.0, 8.0, 16.0}) {
    const auto r = evolve_to(s.w0, s.small, 20.0, 0.05, 1000, GalerkinTruncation{m});
    const auto& L = r.state.ledger;
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& row : L.rows)
      worst = std::min(worst, e0 - row.l2_sq - (1.0 - L.K_sup_V) * row.dissipation_cum);
    const double pair = L.min_pair_slack().value;
    const double dist = l2_norm(r.state.w - full.state.w);
    ok = ok && r.completed() && worst >= -1e-6 * e0 && pair >= -1e-6 * e0 && dist < prev;
    prev = dist;
    detail += fmt(" m=%g bound slack %.2e pair slack %.2e distance %.4e;", m, worst / e0, pair / e0,
                  dist / std::sqrt(e0));
  }
  detail += " (slacks relative to ||w0||^2, tol -1e-6; distance relative to ||w0||, must decrease)";
  return {ok, detail};
}

Verdict gen_energy()
{
  const auto g = grid_n(32);
  auto w0 = random_divfree_field(g, 2.0, 7);
  w0 *= 0.05 / rms_velocity(w0);
  auto V0 = random_divfree_field(g, 2.5, 11);
  V0 *= 0.15 / max_velocity(V0);
  const double K = estimate_hardy_constant(linf, g, 60, 3).K_hat;
  auto small = stationary_trajectory(V0, linf);
  verify_standing_assumptions(small, K);
  const double e0 = l2_norm_sq(w0);

  bool ok = true;
  double worst = std::numeric_limits<double>::infinity();
  double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
  int checks = 0;
  const auto zero = zero_trajectory(g, linf);
  std::uint64_t seed = 5;
  for (const auto* Vp : {&zero, &std::as_const(small)}) {
    const auto& V = *Vp;
    const auto coarse = evolve_to(w0, V, 2.0, 0.05, 1);
    const auto fine = evolve_to(w0, V, 2.0, 0.025, 1);
    ok = ok && coarse.completed() && fine.completed();
    const auto pairs = sample_time_pairs(coarse.trajectory.times, 10, seed++);
    ok = ok && pairs.size() == 10;
    for (const auto mode : {PsiMode::HeatKernelShifted, PsiMode::DeltaMinusPhi}) {
      const auto a = check_gen_energy(coarse.trajectory, V, 3.0, mode, pairs);
      const auto b = check_gen_energy(fine.trajectory, V, 3.0, mode, pairs);
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        worst = std::min({worst, a[p].slack / e0, b[p].slack / e0});
        const double ratio = a[p].slack / b[p].slack;
        rmin = std::min(rmin, ratio);
        rmax = std::max(rmax, ratio);
        ok = ok && a[p].slack >= -1e-6 * e0 && b[p].slack >= -1e-6 * e0 && ratio >= 3.0 && ratio <= 5.0;
        ++checks;
      }
    }
  }
  return {ok, fmt("N=32, t_max=2, zero_V and small V, both multipliers, %d (s,t) checks: min slack / ||w0||^2 "
                  "%.3e (tol -1e-6); dt-halving slack ratio in [%.3f, %.3f] (required [3,5])",
                  checks, worst, rmin, rmax)};
}

Verdict splitting()
{
  const auto& lr = long_run();
  const auto& d = lr.split;
  bool I2 = true, I3 = true, I4 = true;
  for (std::size_t i = 0; i < d.times.size(); ++i) {
    I2 = I2 && d.I2_lhs[i] <= d.I2_rhs[i];
    I3 = I3 && d.I3_lhs[i] <= d.I3_rhs[i];
    I4 = I4 && d.I4_lhs[i] <= d.I4_rhs[i];
  }
  std::map<std::string, bool> J;
  for (const auto& b : d.J)
    J[b.name] = b.holds();
  const bool ok = lr.run.completed() && d.annihilation_residual <= 1e-12 && d.multiplier_bounds && I2 && I3 && I4 &&
                  J["J2"] && J["J3"] && J["J4"];
  std::string jtext;
  for (const auto& b : d.J)
    jtext += fmt(" %s %.3g<=%.3g", b.name.c_str(), b.lhs, b.rhs);
  return {ok, fmt("admissible N=64 run, %zu rows: |E'-2EG^2|/E' %.2e; multiplier bounds %s; I2 %s I3 %s I4 %s;%s",
                  d.times.size(), d.annihilation_residual, d.multiplier_bounds ? "ok" : "FAIL", I2 ? "ok" : "FAIL",
                  I3 ? "ok" : "FAIL", I4 ? "ok" : "FAIL", jtext.c_str())};
}

Verdict decay()
{
  const auto& lr = long_run();
  const auto& r = lr.decay;
  const bool ok = lr.run.completed() && r.w_nonincreasing && r.final_over_initial <= 0.2 && lr.split.low_monotone &&
                  lr.split.high_monotone;
  return {ok, fmt("N=64, L=32pi, t_max=50, K_hat*sup %.3f: ||w|| non-increasing %s; final/initial %.4f (limit 0.2); "
                  "low mass monotone %s, high mass monotone %s after t=10; exp rate %.3g, algebraic exponent %.3g",
                  lr.split.K * lr.split.sup_V, r.w_nonincreasing ? "yes" : "no", r.final_over_initial,
                  lr.split.low_monotone ? "yes" : "no", lr.split.high_monotone ? "yes" : "no", r.exponential_rate,
                  r.algebraic_exponent)};
}

Verdict calderon()
{
  const auto g = grid_n(32);
  auto u0 = random_divfree_field(g, 2.5, 77);
  u0 *= 4.0 / max_velocity(u0);
  const auto pu0 = leray_project(u0);
  bool ok = true;
  double prev = std::numeric_limits<double>::infinity();
  double worst_rec = 0.0;
  std::string sweep;
  for (int j = 0; j <= 5; ++j) {
    const double R = std::ldexp(1.0, -j);
    const auto s = calderon_split(u0, R);
    const double rec = l2_norm(s.V0 + s.w0 - pu0);
    worst_rec = std::max(worst_rec, rec);
    ok = ok && s.l3_of_smooth < prev && std::isfinite(s.l2_of_rough) && rec <= 1e-12;
    prev = s.l3_of_smooth;
    sweep += fmt(" %.4g", s.l3_of_smooth);
  }
  return {ok, fmt("max|u0| = 4 at N=32, R = 1..1/32: ||V0(R)||_3 =%s (must decrease); max ||V0+w0-Pu0||_2 %.2e "
                  "(tol 1e-12)",
                  sweep.c_str(), worst_rec)};
}

Verdict mild_contraction()
{
  const auto g = grid_n(32);
  const auto l3 = SpaceNorm::of(SpaceNorm::Tag::Lebesgue3);
  auto V0 = random_divfree_field(g, 2.0, 17);
  V0 *= 1e-3 / max_velocity(V0);
  const auto traj = picard_iterate(V0, geometric_time_grid(20.0, 16), 20, 1e-10, l3);
  bool decreasing = true;
  std::string hist;
  for (std::size_t i = 0; i < traj.contraction_history.size(); ++i) {
    hist += fmt(" %.2e", traj.contraction_history[i]);
    if (i > 0 && !(traj.contraction_history[i] < traj.contraction_history[i - 1]))
      decreasing = false;
  }
  std::vector<MildTrajectory> runs;
  for (int n : {16, 32, 64})
    runs.push_back(picard_iterate(V0, geometric_time_grid(20.0, n), 20, 1e-13, l3));
  double d1 = 0.0, d2 = 0.0;
  for (int i = 0; i <= 16; ++i) {
    d1 = std::max(d1, l2_norm(runs[0].slices[i] - runs[1].slices[2 * i]));
    d2 = std::max(d2, l2_norm(runs[1].slices[2 * i] - runs[2].slices[4 * i]));
  }
  const double ratio = d1 / d2;
  const bool ok = decreasing && traj.iterations <= 5 && ratio >= 3.0 && ratio <= 5.0;
  return {ok, fmt("max|V0| = 1e-3 at N=32: %d iterations (limit 5), relative updates%s (strictly decreasing %s); "
                  "Duhamel self-convergence ratio %.3f (required [3,5])",
                  traj.iterations, hist.c_str(), decreasing ? "yes" : "no", ratio)};
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict determinism(const fs::path& root)
{
  exec::ScopedMode serial(exec::Mode::Serial);
  ExperimentConfig c;
  c.N = 32;
  c.scenario = Scenario::SmallStationaryV;
  c.t_max = 2.0;
  c.dt = 0.05;
  c.hardy_trials = 20;
  c.store_every = 2;
  auto in = [&](const std::string& name) {
    auto cc = c;
    cc.output_dir = (root / name).string();
    fs::remove_all(cc.output_dir);
    return cc;
  };
  const auto a = run_experiment(in("determinism_a"));
  const auto b = run_experiment(in("determinism_b"));
  bool same = true;
  for (const char* f : {"hardy.csv", "ledger.csv", "diagnostics.csv"})
    same = same && slurp(root / "determinism_a" / f) == slurp(root / "determinism_b" / f);

  auto half = in("split");
  half.t_max = 1.0;
  run_experiment(half);
  const auto replayed = replay_experiment(root / "split" / "checkpoints" / "final.ckpt", 1.0);
  const bool replay_same = slurp(root / "split" / "ledger.csv") == slurp(root / "determinism_a" / "ledger.csv");
  const bool ok = a.passed() && b.passed() && replayed.passed() && same && replay_same;
  return {ok, fmt("serial N=32 small V runs: CSVs bitwise identical %s; t_max/2 + replay ledger bitwise equal to "
                  "uninterrupted run %s",
                  same ? "yes" : "no", replay_same ? "yes" : "no")};
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Acceptance checks for the perturbation stability solver"};
  std::vector<int> only;
  std::string out = "acceptance_out";
  app.add_option("--criteria", only, "Run only these criteria (1-10)")->delimiter(',');
  app.add_option("--output-dir", out, "Scratch directory for experiment artifacts");
  CLI11_PARSE(app, argc, argv);

  const fs::path root = out;
  fs::create_directories(root);
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"trilinear identities", trilinear_identities},
      {"Hardy constant", hardy_constant},
      {"strong energy inequality", strong_energy},
      {"Galerkin uniform bound", galerkin},
      {"generalized energy inequality", gen_energy},
      {"Fourier splitting bookkeeping", splitting},
      {"decay", decay},
      {"Calderon split", calderon},
      {"mild-solution contraction", mild_contraction},
      {"determinism", [&] { return determinism(root); }},
  };
  const std::map<int, double> runtime_limit = {{1, 60.0}, {2, 300.0}, {3, 1800.0}};

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end())
      continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (const auto it = runtime_limit.find(id); it != runtime_limit.end() && sec > it->second) {
      v.pass = false;
      v.detail += fmt("; runtime %.0f s exceeds %.0f s", sec, it->second);
    }
    failures += v.pass ? 0 : 1;
    std::printf("criterion %2d %s  %s: %s [%.1f s]\n", id, v.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                v.detail.c_str(), sec);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
