#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "modheat/spectral_grid.hpp"
#include "oracles.hpp"

using namespace modheat;

TEST_CASE("grid geometry") {
  SpectralGrid g(1, 8, 2.0);
  CHECK(g.spacing() == doctest::Approx(0.5));
  CHECK(g.freq_spacing() == doctest::Approx(std::numbers::pi / 2.0));
  CHECK(g.coordinate(0) == -2.0);
  CHECK(g.mode(0) == -4);
  CHECK(g.mode(7) == 3);
  CHECK(g.max_frequency() == doctest::Approx(4 * std::numbers::pi / 2.0));
  CHECK_THROWS_AS(SpectralGrid(1, 7, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(SpectralGrid(1, 2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(SpectralGrid(4, 8, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(SpectralGrid(1, 8, -1.0), std::invalid_argument);
}

TEST_CASE("zero in, zero out") {
  SpectralGrid g(2, 8, 3.0);
  GridFunction f(g, Side::physical);
  CHECK(oracle::max_abs(forward_transform(f).values) == 0.0);
}

TEST_CASE("forward transform matches the quadrature-sum oracle") {
  std::mt19937_64 rng(11);
  for (int n : {4, 8, 16}) {
    SpectralGrid g(1, n, 2.5);
    auto f = oracle::random_function(g, rng);
    auto F = forward_transform(f);
    auto ref = oracle::forward_sum(f);
    CHECK(oracle::max_abs_diff(F.values, ref) <= 1e-12 * oracle::max_abs(ref));
  }
  SpectralGrid g2(2, 8, 1.5);
  auto f = oracle::random_function(g2, rng);
  auto ref = oracle::forward_sum(f);
  CHECK(oracle::max_abs_diff(forward_transform(f).values, ref) <= 1e-12 * oracle::max_abs(ref));
}

TEST_CASE("inverse transform matches the oracle and inverts forward") {
  std::mt19937_64 rng(12);
  SpectralGrid g(2, 8, 4.0);
  auto F = oracle::random_function(g, rng, Side::frequency);
  auto ref = oracle::inverse_sum(F);
  CHECK(oracle::max_abs_diff(inverse_transform(F).values, ref) <= 1e-12 * oracle::max_abs(ref));

  for (int d : {1, 2, 3}) {
    SpectralGrid gd(d, d == 3 ? 8 : 32, 5.0);
    auto f = oracle::random_function(gd, rng);
    auto back = inverse_transform(forward_transform(f));
    CHECK(oracle::max_abs_diff(back.values, f.values) <= 1e-12 * oracle::max_abs(f.values));
  }
}

TEST_CASE("Gaussian is self-dual") {
  SpectralGrid g(1, 256, 16.0);
  auto f = GridFunction::sample(g, [](std::span<const double> x) { return Complex(oracle::gaussian(x)); });
  auto F = forward_transform(f);
  double err = 0.0;
  for (int s = 0; s < 256; ++s)
    err = std::max(err, std::abs(F.values[s] - std::exp(-0.5 * g.frequency(s) * g.frequency(s))));
  CHECK(err <= 1e-10);
}

TEST_CASE("DC indicator gives a constant") {
  SpectralGrid g(1, 16, 3.0);
  GridFunction F(g, Side::frequency);
  F.values[8] = 1.0;
  auto f = inverse_transform(F);
  const double c = g.freq_spacing() / std::sqrt(2.0 * std::numbers::pi);
  for (const auto& v : f.values) CHECK(std::abs(v - c) <= 1e-14);
}

TEST_CASE("discrete Parseval") {
  std::mt19937_64 rng(13);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    SpectralGrid g(1 + i % 2, 16, 2.0 + i * 0.1);
    auto f = oracle::random_function(g, rng);
    const double a = lp_norm(f, 2.0), b = lp_norm(forward_transform(f), 2.0);
    worst = std::max(worst, std::abs(a - b) / a);
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("fractional symbol") {
  const double z[] = {0.0, 0.0};
  const double a[] = {3.0, 4.0};
  const double b[] = {1.0, 1.0};
  CHECK(fractional_symbol(z, 0.7) == 0.0);
  CHECK(fractional_symbol(a, 1.0) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(fractional_symbol(b, 0.5) == doctest::Approx(1.189207115002721).epsilon(1e-14));
}

TEST_CASE("multipliers") {
  std::mt19937_64 rng(14);
  SpectralGrid g(1, 64, 8.0);
  auto f = oracle::random_function(g, rng);

  auto id = apply_multiplier(f, [](std::span<const double>) { return Complex(1.0); });
  CHECK(oracle::max_abs_diff(id.values, f.values) <= 1e-12 * oracle::max_abs(f.values));

  auto heat = [](double t) {
    return [t](std::span<const double> xi) { return Complex(std::exp(-t * fractional_symbol(xi, 1.5))); };
  };
  auto two = apply_multiplier(apply_multiplier(f, heat(0.3)), heat(0.4));
  auto one = apply_multiplier(f, heat(0.7));
  CHECK(oracle::max_abs_diff(two.values, one.values) <= 1e-12 * oracle::max_abs(f.values));

  auto dc = [](std::span<const double> xi) { return Complex(xi[0] == 0.0 ? 1.0 : 0.0); };
  auto p1 = apply_multiplier(f, dc);
  auto p2 = apply_multiplier(p1, dc);
  CHECK(oracle::max_abs_diff(p1.values, p2.values) <= 1e-13 * oracle::max_abs(f.values));

  CHECK_THROWS_AS(apply_multiplier(f, [](std::span<const double>) { return Complex(NAN); }), std::invalid_argument);
}

TEST_CASE("heat multiplier on a Gaussian matches the closed form") {
  SpectralGrid g(1, 256, 16.0);
  auto f = GridFunction::sample(g, [](std::span<const double> x) { return Complex(oracle::gaussian(x)); });
  const double t = 0.5;
  auto u = apply_multiplier(f, [t](std::span<const double> xi) { return Complex(std::exp(-t * xi[0] * xi[0])); });
  double err = 0.0;
  for (int j = 0; j < 256; ++j) {
    const double x = g.coordinate(j);
    err = std::max(err, std::abs(u.values[j] - std::exp(-x * x / (2 * (1 + 2 * t))) / std::sqrt(1 + 2 * t)));
  }
  CHECK(err <= 1e-8);
}

TEST_CASE("dealiased power equals the direct spectral convolution") {
  std::mt19937_64 rng(15);
  SpectralGrid g(1, 16, std::numbers::pi);  // integer frequencies
  std::normal_distribution<double> n(0.0, 1.0);
  GridFunction F(g, Side::frequency);
  for (int s = 0; s < 16; ++s)
    if (std::abs(g.mode(s)) <= 5) F.values[s] = Complex(n(rng), n(rng));
  Dealiaser dl(g, 3);
  auto cube = dl.power(F, 3);
  // (2pi)^{-1} (F*F*F) on the integer lattice, cell 1.
  const double c = 1.0 / (2.0 * std::numbers::pi);
  for (int s = 0; s < 16; ++s) {
    if (s == 0) {
      CHECK(cube.values[s] == Complex{});
      continue;
    }
    Complex acc{};
    for (int a = 0; a < 16; ++a)
      for (int b = 0; b < 16; ++b) {
        const int m = g.mode(s) - g.mode(a) - g.mode(b);
        if (m >= -8 && m < 8) acc += F.values[a] * F.values[b] * F.values[m + 8];
      }
    CHECK(std::abs(cube.values[s] - c * acc) <= 1e-12 * (1 + std::abs(acc)));
  }
  CHECK_THROWS_AS(dl.power(F, 4), std::invalid_argument);
}

TEST_CASE("boundary diagnostic") {
  SpectralGrid g(1, 128, 10.0);
  auto f = GridFunction::sample(g, [](std::span<const double> x) { return Complex(oracle::gaussian(x)); });
  CHECK(boundary_magnitude(f) < 1e-14);
  auto wide = GridFunction::sample(g, [](std::span<const double> x) { return Complex(oracle::gaussian(x, 4.0)); });
  CHECK(boundary_magnitude(wide) > 1e-3);
}

TEST_CASE("serialization roundtrips") {
  std::mt19937_64 rng(16);
  SpectralGrid g(2, 8, 1.25);
  auto f = oracle::random_function(g, rng);
  std::stringstream csv, bin;
  write_csv(csv, f);
  auto f2 = read_csv(csv, g, Side::physical);
  CHECK(f2.values == f.values);
  write_binary(bin, f);
  auto f3 = read_binary(bin, g, Side::physical);
  CHECK(f3.values == f.values);
  auto g2 = grid_from_header_json(grid_header_json(g));
  CHECK(g2.same_as(g));
  CHECK_THROWS_AS(grid_from_header_json(R"({"dim":1,"points_per_axis":8,"half_width":1,"extra":2})"),
                  std::invalid_argument);
}

TEST_CASE("length and side checks") {
  SpectralGrid g(1, 8, 1.0);
  CHECK_THROWS_AS(GridFunction(g, std::vector<Complex>(7), Side::physical), std::invalid_argument);
  GridFunction F(g, Side::frequency);
  CHECK_THROWS_AS(forward_transform(F), std::invalid_argument);
  GridFunction f(g, Side::physical);
  CHECK_THROWS_AS(inverse_transform(f), std::invalid_argument);
}
