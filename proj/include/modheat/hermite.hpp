#pragma once

#include <array>
#include <complex>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "modheat/modulation.hpp"
#include "modheat/spectral_grid.hpp"

namespace modheat {

/// Normalized Hermite function h_k(x) by the three-term recurrence with
/// rescaling, safe for k <= 500 and |x| <= 40.
double hermite_eval(int k, double x);
/// h_0(x) .. h_kmax(x).
std::vector<double> hermite_values(int kmax, double x);

/// n-point Gauss-Hermite rule for the weight e^{-x^2}, nodes ascending.
/// function_weights are w_i e^{x_i^2}, the weights for plain \int f dx.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<double> function_weights;
};
GaussHermiteRule gauss_hermite(int n);

using MultiIndex = std::array<int, SpectralGrid::kMaxDim>;

/// C(n+d-1, d-1): number of multi-indices with |alpha| = n.
std::size_t level_dimension(int d, int n);

/// Tensor Hermite functions Phi_alpha, |alpha| <= K, on a tensor
/// Gauss-Hermite rule with K + 8 nodes per axis. Multi-indices are stored by
/// shells |alpha| = 0, 1, ..., K, lexicographic within a shell.
class HermiteBasis {
 public:
  HermiteBasis(int dim, int degree_cap);

  /// Load from cache_dir if a matching file exists, else build and save.
  static std::shared_ptr<const HermiteBasis> cached(int dim, int degree_cap,
                                                    const std::filesystem::path& cache_dir);
  void save(const std::filesystem::path& file) const;
  static HermiteBasis load(const std::filesystem::path& file);

  int dim() const { return dim_; }
  int degree_cap() const { return degree_cap_; }
  int node_count() const { return static_cast<int>(rule_.nodes.size()); }
  const GaussHermiteRule& rule() const { return rule_; }

  const std::vector<MultiIndex>& indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  std::size_t level_offset(int n) const { return offsets_.at(n); }

  /// h_k at 1-d node i.
  double table(int k, int i) const { return table_[static_cast<std::size_t>(k) * node_count() + i]; }

  /// Number of tensor nodes and their coordinates / weights.
  std::size_t tensor_size() const;
  std::array<double, SpectralGrid::kMaxDim> tensor_point(std::size_t flat) const;
  double tensor_weight(std::size_t flat) const;
  /// Phi_alpha at a tensor node.
  double phi_at_node(const MultiIndex& alpha, std::size_t flat) const;

 private:
  HermiteBasis() = default;
  void build_indices();

  int dim_ = 1;
  int degree_cap_ = 0;
  GaussHermiteRule rule_;
  std::vector<double> table_;  // (K+1) x nodes
  std::vector<MultiIndex> indices_;
  std::vector<std::size_t> offsets_;  // shell starts, size K+2
};

struct HermiteCoeffs {
  std::shared_ptr<const HermiteBasis> basis;
  std::vector<Complex> c;   // aligned with basis->indices()
  double l2_norm = 0.0;     // quadrature ||f||_2 of the analyzed samples
  bool tail_flag = false;   // relative Bessel defect above 1e-8
};

/// c_alpha = <f, Phi_alpha> from samples at the tensor nodes.
HermiteCoeffs analyze(std::shared_ptr<const HermiteBasis> basis, std::span<const Complex> samples);
HermiteCoeffs analyze(std::shared_ptr<const HermiteBasis> basis,
                      const std::function<Complex(std::span<const double>)>& f);
/// Samples of sum c_alpha Phi_alpha at the tensor nodes.
std::vector<Complex> synthesize(const HermiteCoeffs& coeffs);
/// Evaluation at an arbitrary point / on a spectral grid.
Complex evaluate(const HermiteCoeffs& coeffs, std::span<const double> x);
GridFunction to_grid(const HermiteCoeffs& coeffs, const SpectralGrid& grid);

/// Coefficients built directly from (alpha, value) pairs.
HermiteCoeffs from_coefficients(std::shared_ptr<const HermiteBasis> basis,
                                std::span<const std::pair<MultiIndex, Complex>> entries);

/// P_k f, as coefficients. Throws std::out_of_range for k > K.
HermiteCoeffs project_eigenspace(const HermiteCoeffs& f, int level);

struct OscillatorHeat {
  HermiteCoeffs result;
  double truncation_bound = 0.0;  // e^{-t (2K+d)^beta} ||f||_2
};
/// e^{-t H^beta} f = sum_k e^{-t (2k+d)^beta} P_k f on the retained levels.
OscillatorHeat oscillator_heat(const HermiteCoeffs& f, double t, double beta);

struct EigenSum {
  double value = 0.0;
  double remainder = 0.0;  // rigorous bound on the dropped shells
  int shells = 0;
};
/// sum over alpha in N^d of e^{-2t (2|alpha| + d)^beta}.
EigenSum eigen_sum(int d, double beta, double t);
/// Rigorous upper bound for sum_{n >= N} C(n+d-1, d-1) e^{-c (2n+d)^beta};
/// negative when N is too small for the integral comparison to apply.
double shell_tail_bound(int d, double beta, double c, long N);

/// e^{-t d^beta} d^{d/beta} / (2^d t^{d/beta}) Gamma(1 + 1/beta)^d.
double eigen_sum_bound(int d, double beta, double t);

/// The intermediate quantities of the bound's derivation.
struct EigenSumChain {
  double sum = 0.0;           // eigen_sum
  double step_a = 0.0;        // e^{-t d^beta} sum_alpha e^{-t 2^beta |alpha|^beta}
  double step_b = 0.0;        // e^{-t d^beta} prod_i sum_{n >= 0} e^{-t 2^beta n^beta / d}
  double axis_tail = 0.0;     // sum_{n >= 1} e^{-t 2^beta n^beta / d}
  double axis_tail_bound = 0.0;  // d^{1/beta} Gamma(1+1/beta) / (2 t^{1/beta})
  double bound = 0.0;         // eigen_sum_bound
};
EigenSumChain eigen_sum_chain(int d, double beta, double t);

/// Deterministic test family: Phi_0 first, then random combinations of
/// Phi_alpha with |alpha| <= max_level and coefficients decaying in the level.
std::vector<HermiteCoeffs> hermite_family(std::shared_ptr<const HermiteBasis> basis, int count,
                                          int max_level, unsigned long long seed);

struct DecayRow {
  double t = 0.0;
  double norm = 0.0;
  double ratio = 0.0;
  bool resolution_ok = true;
};
struct DecayProfile {
  double initial_norm = 0.0;
  std::vector<DecayRow> rows;
  double empirical_constant = 0.0;  // max ratio
};

/// ||e^{-t H^beta} f||_{M^{p,p}} on t_grid with the STFT estimator on grid.
DecayProfile decay_profile(const HermiteCoeffs& f, double beta, double p,
                           std::span<const double> t_grid, const SpectralGrid& grid,
                           int x_stride = 2);

/// Slope of log(norm) against t between the first rows with t >= t0 and the
/// last row with t <= t1.
double log_slope(const DecayProfile& profile, double t0, double t1);

}  // namespace modheat
