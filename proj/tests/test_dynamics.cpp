#include <doctest.h>

#include "nsstab/dynamics.hpp"
#include "nsstab/mild.hpp"
#include "nsstab/random_fields.hpp"
#include "nsstab/spectral_ops.hpp"
#include "nsstab/trilinear.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

using namespace nsstab;

namespace {

GridSpec grid_n(int n)
{
  GridSpec g;
  g.points_per_axis = n;
  return g;
}

SpectralVectorField perturbation(const GridSpec& g, double rms, std::uint64_t seed = 7)
{
  auto w = random_divfree_field(g, 2.0, seed);
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

double rel_diff(const SpectralVectorField& a, const SpectralVectorField& b)
{
  return l2_norm(a - b) / std::max(l2_norm(a), l2_norm(b));
}

const SpaceNorm linf = SpaceNorm::of(SpaceNorm::Tag::WeightedLinfty);

} // namespace

TEST_CASE("right-hand side: zero, rotational form and energy neutrality")
{
  const auto g = grid_n(16);
  CHECK(rhs(SpectralVectorField(g), nullptr).is_zero());

  const auto w = perturbation(g, 0.3);
  const auto flux = rhs(w, nullptr);
  CHECK(rel_diff(flux, rhs_rotational(w)) <= 1e-10);
  CHECK(rel_diff(flux, rhs_advective(w, nullptr)) <= 1e-10);
  CHECK(std::abs(l2_inner(flux, w)) <= 1e-10 * l2_norm(flux) * l2_norm(w));

  const auto V = perturbation(g, 0.1, 19);
  CHECK(rel_diff(rhs(w, V), rhs_advective(w, &V)) <= 1e-10);
  CHECK(rhs(w, V).divergence_residual() <= 1e-12);
  CHECK_THROWS_AS(rhs(w, perturbation(grid_n(32), 0.1)), std::invalid_argument);
}

TEST_CASE("single shear mode decays exactly like the heat flow")
{
  const auto g = grid_n(16);
  SpectralVectorField w(g);
  const auto m = w.table().find({0, 0, 2});
  REQUIRE(m.has_value());
  w.at(*m, 0) = cplx(0.3, 0.1);
  const double dt = 0.25;
  const auto next = step(w, nullptr, nullptr, dt);
  const double factor = std::exp(-dt * w.table().modes()[*m].xi_sq);
  CHECK(std::abs(next.at(*m, 0) - factor * w.at(*m, 0)) <= 1e-15);
  CHECK(rel_diff(next, heat_semigroup(w, dt)) <= 1e-14);
}

TEST_CASE("midpoint step converges at second order")
{
  const auto g = grid_n(16);
  const auto w0 = perturbation(g, 0.5);
  const auto V = small_background(g, 0.2);
  std::vector<SpectralVectorField> finals;
  for (double dt : {0.2, 0.1, 0.05}) {
    EvolveOptions o;
    o.t_max = 2.0;
    o.dt = dt;
    const auto r = evolve(w0, V, o);
    REQUIRE(r.completed());
    finals.push_back(r.state.w);
  }
  const double ratio = l2_norm(finals[0] - finals[1]) / l2_norm(finals[1] - finals[2]);
  CHECK(ratio >= 3.0);
  CHECK(ratio <= 5.0);
}

TEST_CASE("energy does not increase against an admissible background")
{
  const auto g = grid_n(16);
  const auto V = small_background(g, 0.2);
  REQUIRE(V.admissible());
  auto w = perturbation(g, 0.3);
  const double tol = energy_tolerance(l2_norm_sq(w), 0.05);
  const auto Vs = V.at(0.0);
  for (int i = 0; i < 40; ++i) {
    const auto next = step(w, &Vs, &Vs, 0.05);
    CHECK(l2_norm_sq(next) <= l2_norm_sq(w) + tol);
    w = next;
  }
}

TEST_CASE("CFL violation carries the admissible step")
{
  const auto g = grid_n(16);
  const auto w = perturbation(g, 1.0);
  const double limit = cfl_dt(w, nullptr);
  REQUIRE(limit > 0.0);
  try {
    step(w, nullptr, nullptr, 4.0 * limit);
    FAIL("expected CflViolation");
  } catch (const CflViolation& e) {
    CHECK(e.admissible_dt() == doctest::Approx(limit));
    CHECK(e.dt() == 4.0 * limit);
  }

  EvolveOptions o;
  o.dt = 4.0 * limit;
  o.t_max = 8.0 * limit;
  const auto r = evolve(w, zero_trajectory(g, linf), o);
  CHECK_FALSE(r.completed());
  CHECK(r.state.ledger.rows.size() == 1);
  CHECK(r.trajectory.snapshots.size() == 1);
}

TEST_CASE("Galerkin truncation")
{
  const auto g = grid_n(16);
  CHECK_THROWS_AS((GalerkinTruncation{0.5}).validate(g), std::invalid_argument);
  CHECK_THROWS_AS((GalerkinTruncation{6.0}).validate(g), std::invalid_argument);
  CHECK_NOTHROW((GalerkinTruncation{5.0}).validate(g));

  const auto w0 = perturbation(g, 0.3);
  const auto V = small_background(g, 0.2);
  const double e0 = l2_norm_sq(w0);
  const double tol = energy_tolerance(e0, 0.05);
  EvolveOptions o;
  o.t_max = 2.0;
  o.dt = 0.05;
  const auto full = evolve(w0, V, o);
  double previous = std::numeric_limits<double>::infinity();
  for (double m : {2.0, 3.0, 4.0}) {
    o.truncation = GalerkinTruncation{m};
    const auto r = evolve(w0, V, o);
    REQUIRE(r.completed());
    for (const auto& row : r.state.ledger.rows)
      CHECK(row.l2_sq + (1.0 - r.state.ledger.K_sup_V) * row.dissipation_cum <= e0 + tol);
    const auto modes = r.state.w.table().modes();
    for (std::size_t k = 0; k < modes.size(); ++k)
      if (modes[k].k_norm > m)
        for (int c = 0; c < 3; ++c)
          CHECK(r.state.w.at(k, c) == cplx(0.0));
    const double dist = l2_norm(r.state.w - full.state.w);
    CHECK(dist < previous);
    previous = dist;
  }
}

TEST_CASE("ledger slack and dissipation bound")
{
  const auto g = grid_n(16);
  const auto w0 = perturbation(g, 0.3);
  EvolveOptions o;
  o.t_max = 5.0;
  o.dt = 0.05;
  for (auto q : {DissipationQuadrature::Exponential, DissipationQuadrature::Trapezoid}) {
    o.quadrature = q;
    for (const auto& V : {zero_trajectory(g, linf), small_background(g, 0.2)}) {
      const auto r = evolve(w0, V, o);
      REQUIRE(r.completed());
      const auto& L = r.state.ledger;
      const double tol = energy_tolerance(L.rows.front().l2_sq, o.dt);
      CHECK(L.min_pair_slack().value >= -tol);
      CHECK(L.dissipation_bound_ratio() <= 1.0 + tol / L.rows.front().l2_sq);
      double brute = std::numeric_limits<double>::infinity();
      for (std::size_t t = 1; t < L.rows.size(); ++t)
        for (std::size_t s = 0; s < t; ++s)
          brute = std::min(brute, L.slack(s, t));
      CHECK(L.min_pair_slack().value == doctest::Approx(brute).epsilon(1e-12));
    }
  }
  CHECK(parse_quadrature(to_string(DissipationQuadrature::Trapezoid)) == DissipationQuadrature::Trapezoid);
  CHECK_THROWS_AS(parse_quadrature("simpson"), std::invalid_argument);
}

TEST_CASE("exponential dissipation quadrature is exact for heat decay")
{
  const auto g = grid_n(16);
  const auto w0 = perturbation(g, 0.3);
  EvolveOptions o;
  o.t_max = 3.0;
  o.dt = 0.1;
  o.nonlinear = false;
  const auto r = evolve(w0, zero_trajectory(g, linf), o);
  const auto& L = r.state.ledger;
  const double e0 = L.rows.front().l2_sq;
  for (std::size_t t = 0; t < L.rows.size(); ++t)
    CHECK(std::abs(L.slack_vs_t0(t)) <= 1e-12 * e0);
}

TEST_CASE("energy identity by finite differences")
{
  const auto g = grid_n(16);
  EvolveOptions o;
  o.t_max = 1.0;
  o.dt = 0.01;
  const auto r = evolve(perturbation(g, 0.3), zero_trajectory(g, linf), o);
  const auto& rows = r.state.ledger.rows;
  for (std::size_t i = 10; i + 10 < rows.size(); i += 10) {
    const double rate = (rows[i + 1].l2_sq - rows[i - 1].l2_sq) / (2.0 * o.dt);
    CHECK(rate == doctest::Approx(-2.0 * rows[i].grad_l2_sq).epsilon(1e-3));
  }
}

TEST_CASE("divergence stays at roundoff during evolution")
{
  const auto g = grid_n(16);
  EvolveOptions o;
  o.t_max = 2.0;
  o.dt = 0.05;
  const auto r = evolve(perturbation(g, 0.3), small_background(g, 0.2), o);
  for (const auto& w : r.trajectory.snapshots)
    CHECK(w.divergence_residual() <= 1e-9);
}

TEST_CASE("resume continues bitwise and checkpoints fire on schedule")
{
  const auto g = grid_n(16);
  const auto w0 = perturbation(g, 0.3);
  const auto V = small_background(g, 0.2);
  EvolveOptions o;
  o.t_max = 2.0;
  o.dt = 0.05;
  o.checkpoint_every = 10;
  std::vector<std::int64_t> seen;
  o.on_checkpoint = [&](const EvolveState& s) { seen.push_back(s.step); };
  const auto full = evolve(w0, V, o);
  CHECK(seen == std::vector<std::int64_t>{10, 20, 30, 40});

  EvolveOptions half = o;
  half.t_max = 1.0;
  half.on_checkpoint = nullptr;
  const auto first = evolve(w0, V, half);
  const auto second = resume(first.state, V, o);
  CHECK(second.state.ledger == full.state.ledger);
  CHECK(second.state.w.bitwise_equal(full.state.w));

  const auto same = resume(full.state, V, o);
  CHECK(same.state.ledger.rows.size() == full.state.ledger.rows.size());
  CHECK(full.trajectory.times.back() == doctest::Approx(2.0));
  CHECK_THROWS_AS(full.trajectory.index_of(2.5), std::out_of_range);
}

TEST_CASE("ledger serialization")
{
  const auto g = grid_n(16);
  EvolveOptions o;
  o.t_max = 0.5;
  o.dt = 0.05;
  const auto r = evolve(perturbation(g, 0.3), small_background(g, 0.2), o);
  const auto& L = r.state.ledger;
  CHECK(ledger_from_json(ledger_to_json(L)) == L);

  const auto path = std::filesystem::temp_directory_path() / "nsstab_test_ledger.csv";
  write_ledger_csv(path, L);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,l2_sq,grad_l2_sq,dissipation_cum,slack_vs_t0,K_sup_V");
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);)
    ++lines;
  CHECK(lines == L.rows.size());
  std::filesystem::remove(path);
}

TEST_CASE("weak formulation residual")
{
  const auto g = grid_n(16);
  const auto V = small_background(g, 0.2);
  const auto psi = random_divfree_field(g, 3.0, 99);

  EvolveOptions o;
  o.t_max = 2.0;
  o.dt = 0.1;
  const auto zero = evolve(SpectralVectorField(g), V, o);
  CHECK(weak_residual(zero.trajectory, V, psi, 0.5, 2.0).residual == 0.0);

  const auto w0 = perturbation(g, 0.3);
  double coarse[2], fine[2];
  for (int r = 0; r < 2; ++r) {
    o.dt = 0.1 / (1 << r);
    const auto run = evolve(w0, V, o);
    const auto a = weak_residual(run.trajectory, V, psi, 0.5, 2.0, TestProfile::Exponential, WeakForm::AsDisplayed);
    const auto b = weak_residual(run.trajectory, V, psi, 0.5, 2.0, TestProfile::Exponential, WeakForm::Rearranged);
    const auto c = weak_residual(run.trajectory, V, psi, 0.5, 2.0, TestProfile::Constant, WeakForm::AsDisplayed);
    CHECK(a.rhs == doctest::Approx(b.rhs).epsilon(1e-10));
    CHECK(std::abs(a.residual) <= 1e-2 * std::abs(a.lhs));
    (r == 0 ? coarse : fine)[0] = std::abs(a.residual);
    (r == 0 ? coarse : fine)[1] = std::abs(c.residual);
  }
  for (int k = 0; k < 2; ++k) {
    CHECK(coarse[k] / fine[k] >= 3.0);
    CHECK(coarse[k] / fine[k] <= 5.0);
  }
  CHECK_THROWS_AS(weak_residual(zero.trajectory, V, psi, 0.5, 3.0), std::out_of_range);
}
