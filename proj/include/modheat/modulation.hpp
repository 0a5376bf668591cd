#pragma once

#include <array>
#include <limits>
#include <span>
#include <vector>

#include "modheat/spectral_grid.hpp"

namespace modheat {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Exponents of M^{p,q}_s. p or q may be infinite.
struct ModNormSpec {
  double p = 2.0;
  double q = 1.0;
  double s = 0.0;

  void validate() const;
};

/// C^infty transition: 1 on [-1/2, 1/2], 0 outside (-1, 1), built from
/// e^{-1/x} mollifiers.
double bump_profile(double x);

/// Frequency-uniform partition {sigma_k}, |k|_inf <= k_max, sampled on the
/// frequency lattice of a grid. The bump rho is a tensor product of
/// bump_profile, so sigma_k factors per axis as well and only 1-d tables are
/// stored.
class UniformPartition {
 public:
  /// Rejects k_max below max |xi|_inf of the lattice (some lattice point would
  /// then be uncovered by the retained cells).
  static UniformPartition build(const SpectralGrid& grid, int k_max);
  /// Smallest admissible k_max for the grid.
  static UniformPartition covering(const SpectralGrid& grid);

  const SpectralGrid& grid() const { return grid_; }
  int k_max() const { return k_max_; }

  /// sigma_k at the lattice point with natural (per-axis) indices idx.
  double value(std::span<const int> k, std::span<const int> idx) const;
  /// sigma_k sampled on the whole lattice in natural order.
  std::vector<double> symbol(std::span<const int> k) const;

  /// Every retained cell centre, in a fixed lexicographic order.
  std::vector<std::array<int, SpectralGrid::kMaxDim>> cells() const;

  /// Lattice indices on one axis where sigma_{k_axis} is non-zero.
  std::span<const int> axis_support(int k_axis) const;

 private:
  UniformPartition(SpectralGrid g, int k_max);

  double axis_value(int k_axis, int s) const {
    return table_[static_cast<std::size_t>(k_axis + k_max_) * grid_.points_per_axis() + s];
  }

  SpectralGrid grid_;
  int k_max_;
  std::vector<double> table_;               // (2 k_max + 1) x N
  std::vector<std::vector<int>> support_;   // per k_axis
};

/// box_k f = F^{-1} sigma_k F f. Throws std::out_of_range if |k|_inf > k_max.
GridFunction block_project(const GridFunction& f, const UniformPartition& part,
                           std::span<const int> k);

/// l^q over k of (1+|k|)^s ||box_k f||_{L^p}.
double mod_norm_decomp(const GridFunction& f, const UniformPartition& part,
                       const ModNormSpec& spec);

/// Sampling plan for V_g f: x on every x_stride-th grid point, y on the dual
/// lattice refined by zero padding (y_oversample, power of two).
struct STFTPlan {
  GridFunction window;
  int x_stride = 2;
  int y_oversample = 1;

  /// L^2-normalized Gaussian pi^{-d/4} e^{-|x|^2/2} (the Hermite function
  /// Phi_0), renormalized to unit discrete norm.
  static STFTPlan gaussian(const SpectralGrid& grid, int x_stride = 2, int y_oversample = 1);
  /// Arbitrary window; rescaled to unit discrete L^2 norm.
  static STFTPlan with_window(GridFunction window, int x_stride = 2, int y_oversample = 1);

  /// Plan with halved lattice steps.
  STFTPlan refined() const;
};

/// V_g f(x, y) = (2pi)^{-d/2} \int f(t) conj(g(t - x)) e^{-i y.t} dt by direct
/// quadrature. x must be a grid point and y inside [-pi/h, pi/h)^d;
/// std::out_of_range otherwise.
Complex stft(const GridFunction& f, const STFTPlan& plan, std::span<const double> x,
             std::span<const double> y);

/// All sampled values |V_g f| laid out [x index][y index].
struct StftSamples {
  std::size_t x_count = 0;
  std::size_t y_count = 0;
  double x_cell = 0.0;  // a^d
  double y_cell = 0.0;  // b^d
  std::vector<double> magnitude;
  std::vector<double> y_weight_norm;  // |y| per y sample
};
StftSamples stft_samples(const GridFunction& f, const STFTPlan& plan);

struct StftNorm {
  double value = 0.0;
  double refined_value = 0.0;
  bool resolution_ok = true;  // refined plan changes the value by < 1%
};

/// Mixed L^p_x L^q_y norm of V_g f with weight <y>^s.
StftNorm mod_norm_stft(const GridFunction& f, const STFTPlan& plan, const ModNormSpec& spec,
                       bool check_resolution = true);
double mod_norm_stft_value(const StftSamples& v, const ModNormSpec& spec);

/// ||fg||_{M^{p,1}} / (||f||_{M^{p,1}} ||g||_{M^{p,1}}) with the decomposition
/// estimator. Throws std::domain_error on a zero-norm input.
double algebra_defect(const GridFunction& f, const GridFunction& g,
                      const UniformPartition& part, double p);

/// Random test functions e^{-|x|^2 / (2 w^2)} sum_{|m|_inf <= max_mode} c_m e^{i m.x}
/// with standard complex normal c_m drawn from a seeded mt19937_64.
std::vector<GridFunction> envelope_corpus(const SpectralGrid& grid, int count, int max_mode,
                                          double width, unsigned long long seed);

/// ||F f||_{L^p} on the frequency lattice.
double fourier_lebesgue_norm(const GridFunction& f, double p);

}  // namespace modheat
