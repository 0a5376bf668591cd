#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "modheat/baselines.hpp"
#include "modheat/torus.hpp"
#include "oracles.hpp"

using namespace modheat;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Complex> random_samples(const TorusGrid& g, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Complex> v(g.size());
  for (auto& z : v) z = Complex(n(rng), n(rng));
  return v;
}

std::vector<Complex> plane_wave(const TorusGrid& g, int xi) {
  std::vector<Complex> v(g.size());
  for (std::size_t j = 0; j < g.size(); ++j) v[j] = std::polar(1.0, xi * 2 * kPi * static_cast<double>(j) / g.modes_per_axis());
  return v;
}

}  // namespace

TEST_CASE("toroidal transform") {
  std::mt19937_64 rng(51);
  for (int d : {1, 2, 3}) {
    TorusGrid g(d, d == 3 ? 8 : 32);
    auto f = random_samples(g, rng);
    auto back = torus_inverse(g, torus_forward(g, f));
    CHECK(oracle::max_abs_diff(back, f) <= 1e-12 * oracle::max_abs(f));
  }
  // Direct sum oracle for the forward transform, d = 1.
  TorusGrid g(1, 16);
  auto f = random_samples(g, rng);
  auto F = torus_forward(g, f);
  for (int q = 0; q < 16; ++q) {
    Complex acc{};
    for (int j = 0; j < 16; ++j) acc += f[j] * std::polar(1.0, -g.mode(q) * 2 * kPi * j / 16);
    CHECK(std::abs(F[q] - acc * (2 * kPi / 16)) <= 1e-12 * oracle::max_abs(F));
  }
  CHECK_THROWS_AS(TorusGrid(1, 7), std::invalid_argument);
}

TEST_CASE("multiplier application") {
  std::mt19937_64 rng(52);
  TorusGrid g(1, 32);
  auto f = random_samples(g, rng);
  // Drop the Nyquist content first so identity is exact on what remains.
  f = torus_apply(g, f, MultiplierSpec::identity());
  CHECK(oracle::max_abs_diff(torus_apply(g, f, MultiplierSpec::identity()), f) <= 1e-12 * oracle::max_abs(f));

  auto mean = torus_apply(g, f, MultiplierSpec::single_mode({0}));
  Complex avg{};
  for (const auto& v : f) avg += v;
  avg /= 32.0;
  for (const auto& v : mean) CHECK(std::abs(v - avg) <= 1e-12 * oracle::max_abs(f));

  for (double beta : {0.5, 1.0, 2.0}) {
    const double t = 0.3;
    auto out = torus_apply(g, plane_wave(g, 1), MultiplierSpec::hermite_heat(t, beta));
    auto expect = plane_wave(g, 1);
    for (auto& v : expect) v *= std::exp(-t * std::pow(3.0, beta));
    CHECK(oracle::max_abs_diff(out, expect) <= 1e-12);
    // Negative modes sit outside N^d.
    CHECK(oracle::max_abs(torus_apply(g, plane_wave(g, -2), MultiplierSpec::hermite_heat(t, beta))) <= 1e-13);
  }

  MultiplierSpec bad;
  bad.symbol = [](std::span<const int>) { return Complex(INFINITY); };
  CHECK_THROWS_AS(torus_apply(g, f, bad), std::invalid_argument);
}

TEST_CASE("kernel L1 norms") {
  for (int d : {1, 2}) {
    auto k0 = kernel_l1_norm(MultiplierSpec::single_mode(std::vector<int>(d, 0)), d);
    CHECK(k0.value == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(k0.remainder == 0.0);
  }
  auto k = kernel_l1_norm(MultiplierSpec::hermite_heat(1.0, 1.0), 1);
  CHECK(k.value >= std::exp(-1.0));
  CHECK(k.remainder < 1e-12);
  CHECK_THROWS_AS(kernel_l1_norm(MultiplierSpec::identity(), 1), std::invalid_argument);
  CHECK_THROWS_AS(kernel_l1_norm(MultiplierSpec::hermite_heat(0.01, 0.5), TorusGrid(1, 16)), std::runtime_error);

  // Cauchy-Schwarz / Parseval step: ||m^vee||_1 <= (2pi)^{d/2} (sum |m|^2)^{1/2}.
  for (int d : {1, 2})
    for (double beta : {1.0, 2.0})
      for (double t : {0.5, 1.0}) {
        auto kn = kernel_l1_norm(MultiplierSpec::hermite_heat(t, beta), d);
        const double parseval = std::pow(2 * kPi, 0.5 * d) * std::sqrt(eigen_sum(d, beta, t).value);
        CHECK(kn.upper() <= parseval + 1e-10);
      }
}

TEST_CASE("operator norm sandwich") {
  auto id = operator_norm_lower(MultiplierSpec::identity(), TorusGrid(1, 32), 3.0, 8, 1);
  CHECK(id.value == doctest::Approx(1.0).epsilon(1e-12));

  for (int d : {1, 2})
    for (double beta : {0.5, 1.0, 2.0})
      for (double t : {0.2, 1.0}) {
        const auto spec = MultiplierSpec::hermite_heat(t, beta);
        if (d == 2 && beta == 0.5) continue;  // tail needs M ~ 800, beyond the kernel grid cap
        auto up = kernel_l1_norm(spec, d);
        const TorusGrid g(d, d == 1 ? up.modes : 16);
        for (double p : {1.0, 1.5, 2.0, 4.0}) {
          auto lo = operator_norm_lower(spec, g, p, 8, 3);
          CHECK(lo.value <= up.upper() + 1e-8);
          if (p == 2.0) CHECK(lo.value == doctest::Approx(std::exp(-t * std::pow(d, beta))).epsilon(0.01));
        }
      }
  auto lo = operator_norm_lower(MultiplierSpec::hermite_heat(1.0, 1.0), TorusGrid(1, 32), 2.0, 4, 9);
  CHECK(lo.witness == "mode(0)");
  CHECK_THROWS_AS(operator_norm_lower(MultiplierSpec::identity(), TorusGrid(1, 8), 2.0, 0, 1), std::invalid_argument);
}

TEST_CASE("transference against modulation-norm ratios") {
  auto b = std::make_shared<const HermiteBasis>(1, 24);
  auto fam = hermite_family(b, 20, 8, 17);
  SpectralGrid g(1, 256, 16.0);

  auto r = transference_check(1.0, 1.0, 2.0, 1, fam, g, baselines::kTransferSlack);
  CHECK(r.pass);
  CHECK(r.rows.front().rho == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  for (const auto& row : r.rows) CHECK(row.rho <= std::exp(-1.0) * (1 + 1e-9));
  CHECK(r.young_upper > std::exp(-1.0));
  CHECK(r.lower <= r.young_upper + 1e-8);
  CHECK(r.young_upper <= r.parseval_upper);

  auto r4 = transference_check(0.5, 2.0, 4.0, 1, fam, g, baselines::kTransferSlack);
  CHECK(r4.rows.size() == 20);
  CHECK(r4.pass);
  CHECK(r4.csv_row().rfind("1,2,0.5,4,", 0) == 0);
  CHECK(TransferenceReport::csv_header() == "d,beta,t,p,lower,young_upper,parseval_upper,pass");

  HermiteCoeffs zero = fam[0];
  zero.c.assign(zero.c.size(), Complex{});
  CHECK_THROWS_AS(transference_check(1.0, 1.0, 2.0, 1, {zero}, g, 1.0), std::domain_error);
}
