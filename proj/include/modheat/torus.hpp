#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "modheat/hermite.hpp"
#include "modheat/spectral_grid.hpp"

namespace modheat {

namespace detail {
struct FftPlans;
}

/// Samples theta_j = 2 pi j / M on [0, 2pi)^d and the retained modes
/// |xi_j| < M/2 (the Nyquist bin is dropped).
///
/// Toroidal transform: f_hat(xi) = \int f(theta) e^{-i xi.theta} dtheta,
/// inverse f(theta) = (2pi)^{-d} sum_xi f_hat(xi) e^{i xi.theta}. Coefficient
/// vectors use FFT layout: storage q holds xi = q for q < M/2 and q - M above.
class TorusGrid {
 public:
  TorusGrid(int dim, int modes_per_axis);

  int dim() const { return dim_; }
  int modes_per_axis() const { return m_; }
  std::size_t size() const { return size_; }
  double cell_volume() const;  // (2 pi / M)^d

  int mode(int q) const { return q < m_ / 2 ? q : q - m_; }
  bool retained(int q) const { return q != m_ / 2; }
  std::array<int, SpectralGrid::kMaxDim> unflatten(std::size_t flat) const;

  const detail::FftPlans& plans() const { return *plans_; }

 private:
  int dim_;
  int m_;
  std::size_t size_;
  std::shared_ptr<const detail::FftPlans> plans_;
};

std::vector<Complex> torus_forward(const TorusGrid& g, std::span<const Complex> samples);
std::vector<Complex> torus_inverse(const TorusGrid& g, std::span<const Complex> coeffs);

/// m: Z^d -> C, optionally with an analytic bound on sum |m| over modes
/// outside a truncation box.
struct MultiplierSpec {
  std::string name;
  std::function<Complex(std::span<const int>)> symbol;
  /// Bound on sum |m(xi)| over xi with some |xi_j| >= M/2; empty if unknown.
  std::function<double(int d, int M)> dropped_mass;

  /// e^{-t (2|alpha| + d)^beta} on N^d, zero elsewhere.
  static MultiplierSpec hermite_heat(double t, double beta);
  static MultiplierSpec identity();
  /// Indicator of a single mode.
  static MultiplierSpec single_mode(std::vector<int> xi);
};

/// F_T^{-1}(m F_T f). Throws if m is not finite on a retained mode.
std::vector<Complex> torus_apply(const TorusGrid& g, std::span<const Complex> samples,
                                 const MultiplierSpec& spec);

/// ||L^p(T^d)|| of samples by the rectangle rule.
double torus_lp_norm(const TorusGrid& g, std::span<const Complex> samples, double p);

struct KernelNorm {
  double value = 0.0;      // L^1 norm of the truncated kernel
  double remainder = 0.0;  // bound on the L^1 norm of the dropped part
  int modes = 0;           // M used
  double upper() const { return value + remainder; }
};
/// ||m^vee||_{L^1(T^d)} with kernel (2pi)^{-d} sum m(xi) e^{i xi.theta}, so the
/// indicator of xi = 0 has norm exactly 1. The kernel is sampled on an 8x
/// oversampled grid. Throws std::runtime_error when the remainder exceeds 1e-10.
KernelNorm kernel_l1_norm(const MultiplierSpec& spec, const TorusGrid& grid);
/// Doubles M from 16 until the dropped mass is below 1e-12.
KernelNorm kernel_l1_norm(const MultiplierSpec& spec, int dim);

struct OperatorLower {
  double value = 0.0;
  std::string witness;  // description of the best trial function
};
/// max over single modes and `trials` seeded random trigonometric polynomials
/// of ||T_m f||_p / ||f||_p, norms on a 4x oversampled grid.
OperatorLower operator_norm_lower(const MultiplierSpec& spec, const TorusGrid& grid, double p,
                                  int trials, unsigned long long seed);

struct TransferenceRow {
  std::size_t index = 0;
  double rho = 0.0;     // ||e^{-tH^beta} f||_{M^{p,p}} / ||f||_{M^{p,p}}
  double bound = 0.0;   // kernel_l1 * s_transfer
  bool resolution_ok = true;
  bool pass = false;
};

struct TransferenceReport {
  int d = 1;
  double beta = 0.0;
  double t = 0.0;
  double p = 2.0;
  double lower = 0.0;           // operator_norm_lower
  double young_upper = 0.0;     // kernel_l1_norm
  double parseval_upper = 0.0;  // (2pi)^{d/2} eigen_sum^{1/2}
  double s_transfer = 1.0;
  double max_rho = 0.0;
  std::vector<TransferenceRow> rows;
  bool pass = false;

  static std::string csv_header();
  std::string csv_row() const;
};

/// Compares modulation-norm ratios of e^{-tH^beta} over the family with the
/// torus Young bound times s_transfer. Throws std::domain_error on a zero-norm
/// member.
TransferenceReport transference_check(double t, double beta, double p, int d,
                                      const std::vector<HermiteCoeffs>& family,
                                      const SpectralGrid& grid, double s_transfer, int trials = 16,
                                      unsigned long long seed = 1);

}  // namespace modheat
