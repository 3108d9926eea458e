#include <doctest.h>

#include "nsstab/random_fields.hpp"
#include "nsstab/spectral_ops.hpp"
#include "nsstab/trilinear.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

using namespace nsstab;

namespace {

using Vec3c = std::array<cplx, 3>;

GridSpec grid_n(int n)
{
  GridSpec g;
  g.points_per_axis = n;
  return g;
}

void set_mode(SpectralVectorField& f, std::array<int, 3> k, Vec3c c)
{
  const auto m = f.table().find(k);
  REQUIRE(m.has_value());
  for (int j = 0; j < 3; ++j)
    f.at(*m, j) = c[j];
  const auto p = f.table().partner(*m);
  if (p != ModeTable::npos)
    for (int j = 0; j < 3; ++j)
      f.at(p, j) = std::conj(c[j]);
}

/// a e^{i xi.x} + c.c. at one point.
std::array<double, 3> plane_wave(const Vec3c& a, const std::array<double, 3>& xi, const std::array<double, 3>& x)
{
  const cplx e = std::exp(cplx(0.0, xi[0] * x[0] + xi[1] * x[1] + xi[2] * x[2]));
  return {2.0 * (a[0] * e).real(), 2.0 * (a[1] * e).real(), 2.0 * (a[2] * e).real()};
}

/// Gradient d_i of a e^{i xi.x} + c.c.: component j of the returned row i.
std::array<std::array<double, 3>, 3> plane_wave_gradient(const Vec3c& a, const std::array<double, 3>& xi,
                                                         const std::array<double, 3>& x)
{
  const cplx e = std::exp(cplx(0.0, xi[0] * x[0] + xi[1] * x[1] + xi[2] * x[2]));
  std::array<std::array<double, 3>, 3> d{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      d[i][j] = 2.0 * (cplx(0.0, xi[i]) * a[j] * e).real();
  return d;
}

} // namespace

TEST_CASE("trilinear identities on random divergence-free triples")
{
  const auto g = grid_n(32);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto f = random_divfree_field(g, 2.0, 3 * s + 1);
    const auto u = random_divfree_field(g, 2.0, 3 * s + 2);
    const auto h = random_divfree_field(g, 2.0, 3 * s + 3);
    const double scale = l2_norm(f) * std::sqrt(gradient_norm_sq(u) * gradient_norm_sq(h));
    CHECK(std::abs(b_value(f, h, h)) <= 1e-10 * l2_norm(f) * gradient_norm_sq(h));
    const auto r = b_form(f, u, h);
    CHECK(r.divergence_free_input);
    CHECK(r.antisymmetry_residual <= 1e-10);
    CHECK(std::abs(r.value + b_value(f, h, u)) <= 1e-10 * scale);
  }
}

TEST_CASE("physical and Fourier evaluations agree")
{
  const auto g = grid_n(16);
  const auto f = random_divfree_field(g, 2.0, 11);
  const auto u = random_divfree_field(g, 2.0, 12);
  const auto h = random_divfree_field(g, 2.0, 13);
  const double a = b_value(f, u, h);
  CHECK(b_value_fourier(f, u, h) == doctest::Approx(a).epsilon(1e-10));
}

TEST_CASE("single-mode triad matches closed form and direct quadrature")
{
  const auto g = grid_n(16);
  const double L = g.box_length;
  const double unit = g.wavenumber_unit();
  const std::array<int, 3> k1{1, 0, 0}, k2{0, 1, 0}, k3{-1, -1, 0};
  const Vec3c a{0.0, cplx(1.0, 0.0), cplx(0.0, 0.5)};
  const Vec3c b{cplx(1.0, 0.0), 0.0, cplx(0.0, 1.0)};
  const Vec3c c{cplx(1.0, 0.0), cplx(-1.0, 0.0), cplx(0.3, 0.2)};
  SpectralVectorField f(g), u(g), h(g);
  set_mode(f, k1, a);
  set_mode(u, k2, b);
  set_mode(h, k3, c);
  REQUIRE(f.divergence_residual() < 1e-14);
  REQUIRE(u.divergence_residual() < 1e-14);
  REQUIRE(h.divergence_residual() < 1e-14);

  auto xi = [&](const std::array<int, 3>& k) { return std::array<double, 3>{unit * k[0], unit * k[1], unit * k[2]}; };

  // Only k1 + k2 + k3 = 0 and its conjugate survive the box integral.
  const auto x2 = xi(k2);
  const cplx adotxi = a[0] * x2[0] + a[1] * x2[1] + a[2] * x2[2];
  const cplx bdotc = b[0] * c[0] + b[1] * c[1] + b[2] * c[2];
  const double closed = 2.0 * L * L * L * (cplx(0.0, 1.0) * adotxi * bdotc).real();

  // Direct quadrature of the analytic integrand on a 16^3 grid (exact for these trigonometric polynomials).
  const int n = 16;
  const double hq = L / n;
  double direct = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) {
        const std::array<double, 3> x{i * hq, j * hq, l * hq};
        const auto fv = plane_wave(a, xi(k1), x);
        const auto du = plane_wave_gradient(b, xi(k2), x);
        const auto hv = plane_wave(c, xi(k3), x);
        for (int p = 0; p < 3; ++p)
          for (int q = 0; q < 3; ++q)
            direct += fv[p] * du[p][q] * hv[q];
      }
  direct *= hq * hq * hq;

  REQUIRE(std::abs(closed) > 1.0);
  CHECK(direct == doctest::Approx(closed).epsilon(1e-12));
  CHECK(b_value(f, u, h) == doctest::Approx(closed).epsilon(1e-12));
  CHECK(b_value_fourier(f, u, h) == doctest::Approx(closed).epsilon(1e-12));
}

TEST_CASE("multiplier ratio: coincident slots, no triad interaction, homogeneity")
{
  const auto g = grid_n(16);
  const auto space = SpaceNorm::of(SpaceNorm::Tag::WeightedLinfty);
  const auto f = random_divfree_field(g, 2.0, 21);
  const auto W = random_divfree_field(g, 2.0, 22);
  CHECK(b_against_multiplier(f, W, W, space) <= 1e-10);

  // Low modes |k| <= 1 cannot reach k = (5,0,0) in a triad.
  SpectralVectorField lo1(g), lo2(g), hi(g);
  set_mode(lo1, {1, 0, 0}, {0.0, 1.0, 0.0});
  set_mode(lo2, {0, 1, 0}, {0.0, 0.0, 1.0});
  set_mode(hi, {5, 0, 0}, {0.0, 1.0, 1.0});
  CHECK(b_against_multiplier(lo1, lo2, hi, space) <= 1e-14);

  const auto u = random_divfree_field(g, 2.0, 23);
  const double r1 = b_against_multiplier(f, u, W, space);
  CHECK(r1 > 0.0);
  CHECK(b_against_multiplier(f, u, 2.0 * W, space) == doctest::Approx(r1).epsilon(1e-12));
}

TEST_CASE("non-solenoidal input is reported")
{
  const auto g = grid_n(16);
  SpectralVectorField f(g);
  set_mode(f, {1, 0, 0}, {1.0, 0.0, 0.0});
  const auto u = random_divfree_field(g, 2.0, 31);
  const auto r = b_form(f, u, u);
  CHECK_FALSE(r.divergence_free_input);
  CHECK(std::isfinite(r.value));
}

TEST_CASE("grid mismatch is rejected")
{
  const auto a = random_divfree_field(grid_n(16), 2.0, 1);
  const auto b = random_divfree_field(grid_n(32), 2.0, 2);
  CHECK_THROWS_AS(b_value(a, b, b), std::invalid_argument);
}
