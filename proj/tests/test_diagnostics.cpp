#include <doctest.h>

#include "nsstab/diagnostics.hpp"
#include "nsstab/random_fields.hpp"
#include "nsstab/spectral_ops.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <stdexcept>

using namespace nsstab;

namespace {

GridSpec grid_n(int n)
{
  GridSpec g;
  g.points_per_axis = n;
  return g;
}

SpectralVectorField perturbation(const GridSpec& g, double rms, double k_min = 0.0)
{
  auto w = random_divfree_field(g, 2.0, 7, k_min);
  w *= rms / rms_velocity(w);
  return w;
}

MildTrajectory small_background(const GridSpec& g, double max_speed)
{
  auto V0 = random_divfree_field(g, 2.5, 11);
  V0 *= max_speed / max_velocity(V0);
  auto V = stationary_trajectory(V0, SpaceNorm::of(SpaceNorm::Tag::WeightedLinfty));
  verify_standing_assumptions(V, 0.05);
  return V;
}

const SpaceNorm linf = SpaceNorm::of(SpaceNorm::Tag::WeightedLinfty);

EvolveResult run(const SpectralVectorField& w0, const MildTrajectory& V, double t_max, double dt,
                 bool nonlinear = true)
{
  EvolveOptions o;
  o.t_max = t_max;
  o.dt = dt;
  o.nonlinear = nonlinear;
  auto r = evolve(w0, V, o);
  REQUIRE(r.completed());
  return r;
}

} // namespace

TEST_CASE("kernel norms match independent quadrature")
{
  const auto k = kernel_norms();
  CHECK(k.phiphi_6_5 == doctest::Approx(0.35560141261229694).epsilon(1e-12));
  CHECK(k.phiphi_1 == 1.0);
  CHECK(k.eta_6_5 == doctest::Approx(0.5748491742981853).epsilon(1e-10));
  CHECK(k.eta_1 == doctest::Approx(1.3540091623467172).epsilon(1e-10));
  CHECK(phiphi_6_5_quadrature() == doctest::Approx(k.phiphi_6_5).epsilon(1e-10));
}

TEST_CASE("split masses of a single unit-frequency mode")
{
  GridSpec g;
  g.box_length = 2.0 * std::numbers::pi;
  g.points_per_axis = 16;
  SpectralVectorField w(g);
  const auto m = w.table().find({0, 0, 1});
  REQUIRE(m.has_value());
  w.at(*m, 0) = cplx(0.4, -0.2);
  const auto s = split_masses(w);
  const double total = l2_norm_sq(w);
  CHECK(s.low / total == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
  CHECK(s.high / total == doctest::Approx(std::pow(1.0 - std::exp(-1.0), 2)).epsilon(1e-14));
}

TEST_CASE("split masses are complete and satisfy the triangle inequality")
{
  const auto g = grid_n(32);
  const auto w = perturbation(g, 0.1);
  const auto s = split_masses(w);
  const double total = l2_norm_sq(w);
  CHECK(s.low >= 0.0);
  CHECK(s.high >= 0.0);
  CHECK(std::abs(s.low + s.high + 2.0 * s.cross - total) <= 1e-12 * total);
  CHECK(std::sqrt(s.low) + std::sqrt(s.high) >= std::sqrt(total) - 1e-10);
}

TEST_CASE("weight and cutoff annihilate the low-frequency term")
{
  CHECK(weight_E(3.0, 1.0) == 8.0);
  CHECK(weight_E_rate(3.0, 1.0) == doctest::Approx(12.0).epsilon(1e-15));
  CHECK(2.0 * weight_E(3.0, 1.0) * cutoff_G(3.0, 1.0) * cutoff_G(3.0, 1.0) == doctest::Approx(12.0).epsilon(1e-15));
  for (double alpha : {0.5, 1.0, 3.0, 5.5})
    for (double t : {0.0, 0.3, 7.0, 120.0}) {
      const double rate = weight_E_rate(alpha, t);
      const double G = cutoff_G(alpha, t);
      CHECK(std::abs(rate - 2.0 * weight_E(alpha, t) * G * G) <= 1e-12 * rate);
    }
}

TEST_CASE("low-frequency multiplier bound on every grid mode")
{
  const auto table = ModeTable::for_grid(grid_n(64));
  for (const auto& m : table->modes())
    CHECK(1.0 - std::exp(-m.xi_sq) <= m.xi_sq);
}

TEST_CASE("time-pair lattice")
{
  std::vector<double> coarse, fine;
  for (int i = 0; i <= 40; ++i)
    coarse.push_back(0.05 * i);
  for (int i = 0; i <= 80; ++i)
    fine.push_back(0.025 * i);
  const auto a = sample_time_pairs(coarse, 10, 4);
  const auto b = sample_time_pairs(fine, 10, 4);
  REQUIRE(a.size() == 10);
  REQUIRE(b.size() == 10);
  std::set<std::pair<double, double>> distinct(a.begin(), a.end());
  CHECK(distinct.size() == 10);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first < a[i].second);
    CHECK(a[i].first == doctest::Approx(b[i].first).epsilon(1e-12));
    CHECK(a[i].second == doctest::Approx(b[i].second).epsilon(1e-12));
  }
  CHECK(sample_time_pairs(coarse, 10, 4) == a);
  CHECK(sample_time_pairs({0.0, 1.0, 2.0}, 10, 1).size() == 3);
  CHECK(sample_time_pairs({0.0}, 10, 1).empty());
}

TEST_CASE("generalized energy inequality: zero trajectory")
{
  const auto g = grid_n(16);
  const auto V = small_background(g, 0.2);
  const auto r = run(SpectralVectorField(g), V, 1.0, 0.1);
  for (auto mode : {PsiMode::HeatKernelShifted, PsiMode::DeltaMinusPhi}) {
    const auto c = check_gen_energy(r.trajectory, V, 3.0, mode, 0.2, 1.0);
    CHECK(c.lhs == 0.0);
    CHECK(c.rhs == 0.0);
  }
}

TEST_CASE("generalized energy inequality holds and its slack converges at second order")
{
  const auto g = grid_n(16);
  const auto w0 = perturbation(g, 0.3);
  for (const auto& V : {zero_trajectory(g, linf), small_background(g, 0.2)}) {
    const auto coarse = run(w0, V, 2.0, 0.1);
    const auto fine = run(w0, V, 2.0, 0.05);
    const auto pairs = sample_time_pairs(coarse.trajectory.times, 10, 5);
    const double e0 = l2_norm_sq(w0);
    for (auto mode : {PsiMode::HeatKernelShifted, PsiMode::DeltaMinusPhi}) {
      CAPTURE(to_string(mode));
      const auto a = check_gen_energy(coarse.trajectory, V, 3.0, mode, pairs);
      const auto b = check_gen_energy(fine.trajectory, V, 3.0, mode, pairs);
      REQUIRE(a.size() == pairs.size());
      for (std::size_t p = 0; p < pairs.size(); ++p) {
        CHECK(a[p].slack >= -gen_energy_tolerance(e0, 3.0, mode, a[p].t));
        CHECK(b[p].slack >= -gen_energy_tolerance(e0, 3.0, mode, b[p].t));
        const double single = check_gen_energy(coarse.trajectory, V, 3.0, mode, pairs[p].first, pairs[p].second).slack;
        CHECK(single == doctest::Approx(a[p].slack).epsilon(1e-12));
        const double ratio = a[p].slack / b[p].slack;
        CHECK(ratio >= 3.0);
        CHECK(ratio <= 5.0);
      }
    }
  }
}

TEST_CASE("splitting analysis on a heat-only trajectory")
{
  const auto g = grid_n(32);
  const auto w0 = perturbation(g, 0.05, 3.0);
  const auto V = zero_trajectory(g, linf);
  const auto r = run(w0, V, 5.0, 0.05, false);
  const auto d = run_splitting_analysis(r.trajectory, V, r.state.ledger, 3.0);

  double xi_sq_min = std::numeric_limits<double>::infinity();
  const auto modes = w0.table().modes();
  for (std::size_t m = 0; m < modes.size(); ++m)
    if (std::abs(w0.at(m, 0)) + std::abs(w0.at(m, 1)) + std::abs(w0.at(m, 2)) > 0.0)
      xi_sq_min = std::min(xi_sq_min, modes[m].xi_sq);
  for (std::size_t i = 0; i < d.times.size(); ++i)
    CHECK(d.high_mass[i] / d.high_mass[0] <= std::exp(-2.0 * d.times[i] * xi_sq_min) * (1.0 + 1e-12));

  CHECK(d.annihilation_residual <= 1e-12);
  CHECK(d.completeness_residual <= 1e-12);
  CHECK(d.triangle_violation <= 1e-10);
  CHECK(d.multiplier_bounds);
  CHECK(d.high_dominance);
  CHECK(d.low_monotone);
  CHECK(d.high_monotone);
  CHECK(d.tail_monotone);
  CHECK(d.I_bounds_hold());
  CHECK(d.J_bounds_hold());
  CHECK(d.budget_trend());
  CHECK_THROWS_AS(run_splitting_analysis(r.trajectory, V, r.state.ledger, 0.0), std::invalid_argument);
}

TEST_CASE("splitting bounds with a small background")
{
  const auto g = grid_n(16);
  const auto V = small_background(g, 0.2);
  const auto r = run(perturbation(g, 0.05, 2.0), V, 4.0, 0.05);
  const auto d = run_splitting_analysis(r.trajectory, V, r.state.ledger, 3.0);
  CHECK(d.K * d.sup_V < 1.0);
  CHECK(d.I_bounds_hold());
  CHECK(d.J_bounds_hold());
  REQUIRE(d.J.size() == 4);
  for (std::size_t i = 0; i < d.times.size(); ++i)
    CHECK(d.gen_energy_slack[i] >= -gen_energy_tolerance(d.l2_sq0, 3.0, PsiMode::DeltaMinusPhi, d.times[i]));

  const auto path = std::filesystem::temp_directory_path() / "nsstab_test_diagnostics.csv";
  write_diagnostics_csv(path, d);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header.rfind("t,", 0) == 0);
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);)
    ++rows;
  CHECK(rows == d.times.size());
  std::filesystem::remove(path);
}

TEST_CASE("decay report")
{
  const auto g = grid_n(16);
  const auto V = zero_trajectory(g, linf);
  const auto zero = run(SpectralVectorField(g), V, 1.0, 0.1);
  const auto dz = run_splitting_analysis(zero.trajectory, V, zero.state.ledger, 3.0);
  const auto rz = decay_report(zero.trajectory, V, zero.state.ledger, dz);
  for (double x : rz.w_l2)
    CHECK(x == 0.0);

  const auto r = run(perturbation(g, 0.05, 2.0), V, 10.0, 0.1);
  const auto d = run_splitting_analysis(r.trajectory, V, r.state.ledger, 3.0);
  const auto rep = decay_report(r.trajectory, V, r.state.ledger, d, 0.9);
  CHECK(rep.w_nonincreasing);
  CHECK(rep.final_over_initial < 0.9);
  CHECK(rep.decay_threshold_met);
  CHECK(rep.exponential_rate > 0.0);
  CHECK(format_decay_report(rep).find("non-increasing") != std::string::npos);

  const auto tight = decay_report(r.trajectory, V, r.state.ledger, d, 1e-6);
  CHECK_FALSE(tight.decay_threshold_met);
  CHECK_FALSE(tight.pass());
}

TEST_CASE("L3 norm of a small mild background does not increase")
{
  const auto g = grid_n(16);
  auto V0 = random_divfree_field(g, 2.0, 5);
  V0 *= 1e-3 / max_velocity(V0);
  auto V = picard_iterate(V0, geometric_time_grid(4.0, 8), 20, 1e-12, SpaceNorm::of(SpaceNorm::Tag::Lebesgue3));
  verify_standing_assumptions(V, 0.05);
  const auto r = run(perturbation(g, 0.05), V, 4.0, 0.1);
  const auto d = run_splitting_analysis(r.trajectory, V, r.state.ledger, 3.0);
  const auto rep = decay_report(r.trajectory, V, r.state.ledger, d, 1.0);
  CHECK(rep.V_l3_nonincreasing);
  for (std::size_t i = 1; i < rep.V_l3.size(); ++i)
    CHECK(rep.V_l3[i] <= rep.V_l3[i - 1] * (1.0 + 1e-12));
}
