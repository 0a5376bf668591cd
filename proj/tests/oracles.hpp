#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the FFT path of the library.

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "modheat/spectral_grid.hpp"

namespace oracle {

using modheat::Complex;
using modheat::GridFunction;
using modheat::SpectralGrid;

// O(N^{2d}) quadrature sum (2pi)^{-d/2} h^d sum_j f(x_j) e^{-i x_j.xi}.
inline std::vector<Complex> forward_sum(const GridFunction& f) {
  const auto& g = f.grid;
  const int d = g.dim();
  std::vector<Complex> out(g.size());
  const double scale = g.cell_volume() * std::pow(2.0 * std::numbers::pi, -0.5 * d);
  for (std::size_t s = 0; s < g.size(); ++s) {
    const auto xi = g.frequency_vector(s);
    Complex acc{};
    for (std::size_t j = 0; j < g.size(); ++j) {
      const auto x = g.point(j);
      double ph = 0.0;
      for (int a = 0; a < d; ++a) ph += x[a] * xi[a];
      acc += f.values[j] * std::polar(1.0, -ph);
    }
    out[s] = scale * acc;
  }
  return out;
}

inline std::vector<Complex> inverse_sum(const GridFunction& F) {
  const auto& g = F.grid;
  const int d = g.dim();
  std::vector<Complex> out(g.size());
  const double scale = g.dual_cell_volume() * std::pow(2.0 * std::numbers::pi, -0.5 * d);
  for (std::size_t j = 0; j < g.size(); ++j) {
    const auto x = g.point(j);
    Complex acc{};
    for (std::size_t s = 0; s < g.size(); ++s) {
      const auto xi = g.frequency_vector(s);
      double ph = 0.0;
      for (int a = 0; a < d; ++a) ph += x[a] * xi[a];
      acc += F.values[s] * std::polar(1.0, ph);
    }
    out[j] = scale * acc;
  }
  return out;
}

inline double max_abs_diff(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double max_abs(const std::vector<Complex>& a) {
  double m = 0.0;
  for (const auto& v : a) m = std::max(m, std::abs(v));
  return m;
}

inline GridFunction random_function(const SpectralGrid& g, std::mt19937_64& rng,
                                    modheat::Side side = modheat::Side::physical) {
  std::normal_distribution<double> n(0.0, 1.0);
  GridFunction f(g, side);
  for (auto& v : f.values) v = Complex(n(rng), n(rng));
  return f;
}

// Random function whose spectrum lives in |xi|_inf <= band (zero elsewhere).
inline GridFunction random_band_limited(const SpectralGrid& g, std::mt19937_64& rng, double band) {
  std::normal_distribution<double> n(0.0, 1.0);
  GridFunction F(g, modheat::Side::frequency);
  for (std::size_t s = 0; s < g.size(); ++s) {
    const auto xi = g.frequency_vector(s);
    bool inside = true;
    for (int a = 0; a < g.dim(); ++a) inside = inside && std::abs(xi[a]) <= band;
    if (inside) F.values[s] = Complex(n(rng), n(rng));
  }
  return modheat::inverse_transform(F);
}

inline double gaussian(std::span<const double> x, double width = 1.0) {
  double r2 = 0.0;
  for (double v : x) r2 += v * v;
  return std::exp(-0.5 * r2 / (width * width));
}

}  // namespace oracle
