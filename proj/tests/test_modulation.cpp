#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "modheat/baselines.hpp"
#include "modheat/modulation.hpp"
#include "oracles.hpp"

using namespace modheat;

namespace {

GridFunction unit_gaussian(const SpectralGrid& g) {
  return GridFunction::sample(g, [](std::span<const double> x) { return Complex(oracle::gaussian(x)); });
}

std::vector<GridFunction> corpus(const SpectralGrid& g) { return envelope_corpus(g, 20, 4, 2.0, 7); }

}  // namespace

TEST_CASE("bump profile") {
  CHECK(bump_profile(0.0) == 1.0);
  CHECK(bump_profile(0.5) == 1.0);
  CHECK(bump_profile(-0.5) == 1.0);
  CHECK(bump_profile(1.0) == 0.0);
  CHECK(bump_profile(-1.3) == 0.0);
  CHECK(bump_profile(0.75) == doctest::Approx(0.5));
  for (double x = 0.5; x < 1.0; x += 0.01) CHECK(bump_profile(x + 0.01) <= bump_profile(x));
}

TEST_CASE("partition of unity, support, interior") {
  for (int d : {1, 2}) {
    SpectralGrid g(d, d == 1 ? 128 : 32, d == 1 ? 4.0 * std::numbers::pi : 2.0 * std::numbers::pi);
    auto part = UniformPartition::covering(g);
    std::vector<double> total(g.size(), 0.0);
    for (const auto& k : part.cells()) {
      std::span<const int> ks(k.data(), d);
      auto sym = part.symbol(ks);
      for (std::size_t i = 0; i < g.size(); ++i) {
        total[i] += sym[i];
        const auto xi = g.frequency_vector(i);
        double dist = 0.0, dist_inf = 0.0;
        for (int a = 0; a < d; ++a) dist_inf = std::max(dist_inf, std::abs(xi[a] - k[a]));
        dist = dist_inf;
        if (dist > 1.0) CHECK(sym[i] == 0.0);
        // Neighbouring bumps overlap the half cell, so only the centre is exact.
        if (dist == 0.0) CHECK(sym[i] == 1.0);
        if (dist <= 0.5) CHECK(sym[i] >= std::ldexp(1.0, -d));
      }
    }
    double worst = 0.0;
    for (double v : total) worst = std::max(worst, std::abs(v - 1.0));
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("partition must cover the lattice") {
  SpectralGrid g(1, 64, 4.0);  // max |xi| = 8 pi
  CHECK_THROWS_AS(UniformPartition::build(g, 10), std::invalid_argument);
  CHECK_NOTHROW(UniformPartition::build(g, 26));
}

TEST_CASE("blocks reconstruct and are almost orthogonal") {
  std::mt19937_64 rng(21);
  for (int d : {1, 2}) {
    SpectralGrid g(d, d == 1 ? 64 : 16, d == 1 ? 6.0 : 3.0);
    auto part = UniformPartition::covering(g);
    auto f = oracle::random_band_limited(g, rng, 3.0);
    GridFunction sum(g, Side::physical);
    double worst = 0.0;
    for (const auto& k : part.cells()) {
      std::span<const int> ks(k.data(), d);
      auto b = block_project(f, part, ks);
      sum += b;
      if (oracle::max_abs(b.values) == 0.0) continue;
      GridFunction around(g, Side::physical);
      for (const auto& l : part.cells()) {
        bool near = true;
        std::array<int, 3> kl{};
        for (int a = 0; a < d; ++a) {
          kl[a] = k[a] + l[a];
          near = near && std::abs(l[a]) <= 1 && std::abs(kl[a]) <= part.k_max();
        }
        if (near) around += block_project(b, part, std::span<const int>(kl.data(), d));
      }
      worst = std::max(worst, oracle::max_abs_diff(around.values, b.values));
    }
    CHECK(worst <= 1e-10 * oracle::max_abs(f.values));
    CHECK(oracle::max_abs_diff(sum.values, f.values) <= 1e-10 * oracle::max_abs(f.values));
    std::array<int, 3> bad{part.k_max() + 1, 0, 0};
    CHECK_THROWS_AS(block_project(f, part, std::span<const int>(bad.data(), d)), std::out_of_range);
  }
}

TEST_CASE("block of a single-cell function") {
  SpectralGrid g(1, 128, 8.0 * std::numbers::pi);  // lattice step 1/8
  auto part = UniformPartition::covering(g);
  GridFunction F(g, Side::frequency);
  for (int s = 0; s < 128; ++s)
    if (std::abs(g.frequency(s) - 2.0) <= 0.4) F.values[s] = 1.0 + 0.1 * s;
  auto f = inverse_transform(F);
  const int k1[] = {1}, k2[] = {2}, k3[] = {3}, k0[] = {0}, k4[] = {4};
  auto near = block_project(f, part, k1) + block_project(f, part, k2) + block_project(f, part, k3);
  CHECK(oracle::max_abs_diff(near.values, f.values) <= 1e-12 * oracle::max_abs(f.values));
  CHECK(lp_norm(block_project(f, part, k2), 2.0) >= 0.5 * lp_norm(f, 2.0));
  CHECK(oracle::max_abs(block_project(f, part, k0).values) <= 1e-14);
  CHECK(oracle::max_abs(block_project(f, part, k4).values) <= 1e-14);
}

TEST_CASE("decomposition norm basics") {
  SpectralGrid g(1, 256, 16.0);
  auto part = UniformPartition::covering(g);
  GridFunction zero(g, Side::physical);
  CHECK(mod_norm_decomp(zero, part, {2, 1, 0}) == 0.0);
  auto f = unit_gaussian(g);
  const double n1 = mod_norm_decomp(f, part, {1.5, 1, 0.5});
  CHECK(mod_norm_decomp(3.7 * f, part, {1.5, 1, 0.5}) == doctest::Approx(3.7 * n1).epsilon(1e-14));
  CHECK_THROWS_AS(mod_norm_decomp(f, part, {0.5, 1, 0}), std::invalid_argument);
  GridFunction bad = f;
  bad.values[3] = Complex(NAN, 0.0);
  CHECK_THROWS_AS(mod_norm_decomp(bad, part, {2, 1, 0}), std::invalid_argument);
}

TEST_CASE("M^{2,2} against L^2 on the Gaussian") {
  SpectralGrid g(1, 256, 16.0);
  auto part = UniformPartition::covering(g);
  auto f = unit_gaussian(g);
  const double ratio = mod_norm_decomp(f, part, {2, 2, 0}) / lp_norm(f, 2.0);
  CHECK(ratio == doctest::Approx(baselines::kDecompL2Gaussian).epsilon(1e-9));
  CHECK(ratio >= 1.0 / baselines::kDecompL2Bracket);
  CHECK(ratio <= baselines::kDecompL2Bracket);
}

TEST_CASE("nestedness in q") {
  SpectralGrid g(1, 256, 16.0);
  auto part = UniformPartition::covering(g);
  for (const auto& f : corpus(g)) {
    const double q1 = mod_norm_decomp(f, part, {2, 1, 0});
    const double q2 = mod_norm_decomp(f, part, {2, 2, 0});
    const double qi = mod_norm_decomp(f, part, {2, kInf, 0});
    CHECK(q1 * 1.01 >= q2);
    CHECK(q2 * 1.01 >= qi);
  }
}

TEST_CASE("STFT point values") {
  SpectralGrid g(1, 256, 16.0);
  auto plan = STFTPlan::gaussian(g, 1);
  auto f = GridFunction::sample(g, [](std::span<const double> x) { return Complex(std::exp(-0.5 * x[0] * x[0])); });
  const double zero[] = {0.0};
  // (2pi)^{-1/2} \int e^{-t^2/2} pi^{-1/4} e^{-t^2/2} dt
  const double expect = std::pow(std::numbers::pi, -0.25) * std::sqrt(std::numbers::pi) / std::sqrt(2 * std::numbers::pi);
  CHECK(std::abs(stft(f, plan, zero, zero) - expect) <= 1e-12);

  // Cauchy-Schwarz and agreement with the FFT path.
  auto samples = stft_samples(f, plan);
  const double cs = lp_norm(f, 2.0) * lp_norm(plan.window, 2.0) / std::sqrt(2 * std::numbers::pi);
  double peak = 0.0;
  for (double m : samples.magnitude) peak = std::max(peak, m);
  CHECK(peak <= cs * (1 + 1e-12));
  const double x[] = {g.coordinate(100)};
  const double y[] = {g.frequency(140)};
  CHECK(std::abs(stft(f, plan, x, y)) == doctest::Approx(samples.magnitude[100 * samples.y_count + 140]).epsilon(1e-10));

  GridFunction z(g, Side::physical);
  CHECK(std::abs(stft(z, plan, zero, zero)) == 0.0);
  const double off[] = {0.01};
  CHECK_THROWS_AS(stft(f, plan, off, zero), std::out_of_range);
  const double far[] = {100.0};
  CHECK_THROWS_AS(stft(f, plan, zero, far), std::out_of_range);
}

TEST_CASE("Moyal identity and zero") {
  SpectralGrid g(1, 256, 16.0);
  auto plan = STFTPlan::gaussian(g);
  for (const auto& f : corpus(g)) {
    auto n = mod_norm_stft(f, plan, {2, 2, 0});
    CHECK(n.value == doctest::Approx(lp_norm(f, 2.0)).epsilon(0.01));
    CHECK(n.resolution_ok);
    CHECK(mod_norm_stft(2.5 * f, plan, {2, 1, 0}, false).value ==
          doctest::Approx(2.5 * mod_norm_stft(f, plan, {2, 1, 0}, false).value).epsilon(1e-14));
  }
  GridFunction z(g, Side::physical);
  CHECK(mod_norm_stft(z, plan, {2, 1, 0}).value == 0.0);
}

TEST_CASE("estimator equivalence and embeddings") {
  SpectralGrid g(1, 256, 16.0);
  auto part = UniformPartition::covering(g);
  auto plan = STFTPlan::gaussian(g);
  for (const auto& f : corpus(g)) {
    const double dec = mod_norm_decomp(f, part, {2, 1, 0});
    const double st = mod_norm_stft(f, plan, {2, 1, 0}).value;
    CHECK(st / dec <= baselines::kStftDecompBracket);
    CHECK(st / dec >= 1.0 / baselines::kStftDecompBracket);
    CHECK(fourier_lebesgue_norm(f, 1.0) <= baselines::kFourierLebesgueEmbedding * dec);
  }
}

TEST_CASE("algebra defect") {
  SpectralGrid g(1, 256, 16.0);
  auto part = UniformPartition::covering(g);
  auto f = unit_gaussian(g);
  CHECK(algebra_defect(f, f, part, 2.0) == doctest::Approx(baselines::kAlgebraGaussian).epsilon(1e-9));
  auto flat = GridFunction::sample(g, [](std::span<const double> x) { return Complex(std::exp(-std::pow(x[0] / 10.0, 8))); });
  const double a = algebra_defect(f, flat, part, 2.0);
  CHECK(std::isfinite(a));
  CHECK(a > 0.0);
  GridFunction z(g, Side::physical);
  CHECK_THROWS_AS(algebra_defect(z, f, part, 2.0), std::domain_error);
}

TEST_CASE("Fourier-Lebesgue norm of the Gaussian") {
  SpectralGrid g(1, 256, 16.0);
  CHECK(fourier_lebesgue_norm(unit_gaussian(g), 1.0) == doctest::Approx(std::sqrt(2 * std::numbers::pi)).epsilon(1e-10));
  GridFunction z(g, Side::physical);
  CHECK(fourier_lebesgue_norm(z, 1.0) == 0.0);
}
