#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace modheat {

using Complex = std::complex<double>;

namespace detail {
struct FftPlans;
}

/// Periodized sampling box [-L, L)^d with N points per axis and its dual
/// frequency lattice (pi/L) * m, -N/2 <= m_j < N/2.
///
/// Physical samples sit at x_j = -L + j*h. Frequency samples are stored in
/// natural order: storage index s on an axis holds m = s - N/2. Any FFT
/// layout is internal. Grids are immutable and cheap to copy; copies share
/// their FFT plans.
class SpectralGrid {
 public:
  static constexpr int kMaxDim = 3;

  SpectralGrid(int dim, int points_per_axis, double half_width);

  int dim() const { return dim_; }
  int points_per_axis() const { return n_; }
  double half_width() const { return half_width_; }
  double spacing() const { return 2.0 * half_width_ / n_; }
  double freq_spacing() const;
  std::size_t size() const { return size_; }

  /// h^d, the physical quadrature cell.
  double cell_volume() const;
  /// (pi/L)^d, the frequency quadrature cell.
  double dual_cell_volume() const;

  double coordinate(int j) const { return -half_width_ + j * spacing(); }
  int mode(int s) const { return s - n_ / 2; }
  double frequency(int s) const { return mode(s) * freq_spacing(); }

  std::array<int, kMaxDim> unflatten(std::size_t flat) const;
  std::size_t flatten(std::span<const int> idx) const;

  /// Physical point of a flat index (first dim() entries valid).
  std::array<double, kMaxDim> point(std::size_t flat) const;
  /// Frequency vector of a flat index (first dim() entries valid).
  std::array<double, kMaxDim> frequency_vector(std::size_t flat) const;

  /// Largest |xi|_inf on the lattice, (N/2)*(pi/L).
  double max_frequency() const;

  bool same_as(const SpectralGrid& other) const;

  const detail::FftPlans& plans() const { return *plans_; }

 private:
  int dim_;
  int n_;
  double half_width_;
  std::size_t size_;
  std::shared_ptr<const detail::FftPlans> plans_;
};

enum class Side { physical, frequency };

struct GridFunction {
  GridFunction(SpectralGrid g, Side s);
  GridFunction(SpectralGrid g, std::vector<Complex> v, Side s);

  /// Sample a callable at every physical point.
  static GridFunction sample(const SpectralGrid& g,
                             const std::function<Complex(std::span<const double>)>& fn);

  SpectralGrid grid;
  std::vector<Complex> values;
  Side side;

  GridFunction& operator*=(Complex c);
  GridFunction& operator+=(const GridFunction& other);
};

GridFunction operator*(Complex c, GridFunction f);
GridFunction operator+(GridFunction a, const GridFunction& b);
GridFunction operator-(GridFunction a, const GridFunction& b);

/// (2 pi)^{-d/2} \int f(x) e^{-i x.xi} dx by the trapezoid rule on the box.
GridFunction forward_transform(const GridFunction& f);
/// (2 pi)^{-d/2} \int F(xi) e^{i x.xi} dxi on the lattice; exact inverse of
/// forward_transform.
GridFunction inverse_transform(const GridFunction& F);

/// |xi|^beta, with 0^beta = 0.
double fractional_symbol(std::span<const double> xi, double beta);

using Multiplier = std::function<Complex(std::span<const double>)>;

/// Sample m on the frequency lattice in natural order. Throws if any value is
/// not finite.
std::vector<Complex> sample_symbol(const SpectralGrid& grid, const Multiplier& m);

/// F^{-1}(m . F f). The result lives on the same side as f.
GridFunction apply_multiplier(const GridFunction& f, const Multiplier& m);
GridFunction apply_symbol(const GridFunction& f, std::span<const Complex> symbol);

/// Quadrature L^p norm of the samples (p = inf gives the max).
double lp_norm(const GridFunction& f, double p);
double lp_norm(std::span<const Complex> values, double cell, double p);

/// Max |f| over samples within `layer` (fraction of L) of the box boundary.
double boundary_magnitude(const GridFunction& f, double layer = 0.05);

/// Band-limited products. Values are zero-padded to a grid with factor
/// (k+1)/2 so the k-fold convolution is alias-free, multiplied pointwise, and
/// truncated back; the Nyquist mode of the result is zeroed.
class Dealiaser {
 public:
  Dealiaser(const SpectralGrid& grid, int order);

  const SpectralGrid& grid() const { return grid_; }
  const SpectralGrid& padded() const { return padded_; }

  /// Frequency-side input, physical samples on the padded grid.
  GridFunction to_padded_physical(const GridFunction& spectrum) const;
  /// Physical samples on the padded grid, frequency-side output on the base grid.
  GridFunction from_padded_physical(const GridFunction& padded) const;

  /// Spectrum of u^k for frequency-side u.
  GridFunction power(const GridFunction& spectrum, int k) const;

 private:
  SpectralGrid grid_;
  SpectralGrid padded_;
  int order_;
};

// Serialization: CSV rows "index,re,im" and a JSON grid header.
std::string grid_header_json(const SpectralGrid& g);
SpectralGrid grid_from_header_json(const std::string& text);
void write_csv(std::ostream& os, const GridFunction& f);
GridFunction read_csv(std::istream& is, const SpectralGrid& g, Side side);
void write_binary(std::ostream& os, const GridFunction& f);
GridFunction read_binary(std::istream& is, const SpectralGrid& g, Side side);

}  // namespace modheat
