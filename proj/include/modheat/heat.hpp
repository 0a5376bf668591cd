#pragma once

#include <array>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "modheat/modulation.hpp"
#include "modheat/spectral_grid.hpp"

namespace modheat {

/// U_beta(t) f: the multiplier e^{-t |xi|^beta}. Throws for t < 0.
GridFunction linear_propagate(const GridFunction& f, double t, double beta);

/// d_t u + (-Delta)^{beta/2} u = sign * u^k.
struct HeatProblem {
  double beta = 2.0;
  int k = 2;
  GridFunction u0;
  ModNormSpec norm_spec{1.0, 1.0, 0.0};  // the recorded M^{p,1} norm
  double source_sign = 1.0;

  void validate() const;
  /// The blow-up analysis covers 1 <= p <= 2; larger p is still computed.
  bool outside_proven_range() const { return norm_spec.p > 2.0; }
};

enum class Scheme { etd1, etd2 };

struct SolverConfig {
  double dt = 1e-3;
  double t_max = 1.0;
  /// Absolute threshold; when <= 0, threshold_factor * initial norm is used.
  double blowup_threshold = 0.0;
  double threshold_factor = 1e6;
  Scheme scheme = Scheme::etd1;
  int record_every = 1;

  void validate() const;
};

struct SolutionTrace {
  std::vector<double> times;
  std::vector<double> norms;     // M^{p,1}
  std::vector<double> fl1;       // ||u_hat||_{L^1}
  std::vector<double> linf;      // max |u|
  double step = 0.0;             // dt actually used (t_max / steps)
  double threshold = 0.0;
  bool blowup_detected = false;
  bool overflow = false;         // non-finite values appeared
  std::optional<double> t_detect;
  bool outside_proven_range = false;
  std::optional<GridFunction> final_spectrum;

  void write_csv(std::ostream& os) const;
};

SolutionTrace solve(const HeatProblem& problem, const SolverConfig& config);

/// phi_1(z) = (1 - e^{-z}) / z and phi_2(z) = (e^{-z} - 1 + z) / z^2 with their
/// z -> 0 limits.
double etd_phi1(double z);
double etd_phi2(double z);

// Blow-up hypothesis ------------------------------------------------------

struct BlowupHypothesis {
  double gamma = 0.0;
  double r = 1.0;
  double beta = 2.0;
  int k = 2;
  int d = 1;
};

/// Volume of the unit ball in R^d.
double unit_ball_volume(int d);

struct Verdict {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  double margin = 0.0;  // signed slack toward passing; pass iff margin >= 0
  bool pass = false;
};

struct Certificate {
  std::vector<Verdict> conditions;
  double horizon = 0.0;  // 1 / (4 r^beta (k - 1))
  bool passed() const;
};

/// Evaluates every hypothesis condition on the lattice spectrum of u0.
Certificate certify_hypothesis(const BlowupHypothesis& h, const GridFunction& u0);

/// C e^{-2 pi |x|^2}.
GridFunction gaussian_datum(const SpectralGrid& grid, double amplitude);
/// Smallest amplitude C of the Gaussian datum admitted by the closed-form
/// rule (4 e r^beta (k-1))^{1/(k-1)} e^{2 pi r^beta}.
double gaussian_datum_threshold(int k, double beta, double r);
/// d = 1 sinc datum with spectrum amp * chi_{[-1,1]} built on the lattice.
/// corrected: amp = (4e(k-1))^{1/(k-1)}; otherwise the amplitude produced by
/// C = (1/pi)(4e(k-1))^{1/(k-1)} in front of sin(x)/x.
GridFunction sinc_datum(const SpectralGrid& grid, int k, bool corrected, double scale = 1.0);

// Picard series -----------------------------------------------------------

/// Iterate-index tuples (i_1..i_k), i_m = t_m (k-1) + 1, t_m >= 0, sum t_m = j-1.
/// Sorted lexicographically.
std::vector<std::vector<int>> lambda_index_set(int j, int k);

/// Positive quadrature weights for \int_0^{t_n} on a uniform grid with step h:
/// trapezoid (n=1), Simpson (n even), Simpson 3/8 + Simpson (n odd >= 3).
std::vector<double> duhamel_weights(int n, double h);

struct PicardResult {
  std::vector<double> times;
  /// terms[j][n]: spectrum of level j+1 at times[n]. For k = 2 level j is u_j;
  /// in general level j is the iterate u_{(j-1)(k-1)+1}.
  std::vector<std::vector<GridFunction>> terms;
  std::vector<int> iterate_index;
  std::vector<double> sup_norms;  // sup_t ||term||_{M^{p,1}}
  std::vector<double> ratios;     // sup_norms[j+1] / sup_norms[j]
  bool unstable = false;          // last ratio >= 1

  /// Spectrum of the partial sum of the first `levels` levels at times[n].
  GridFunction partial_sum(std::size_t levels, std::size_t n) const;
};

/// t_grid must be uniform, start at 0, and have at least 2 points.
PicardResult picard_terms(const HeatProblem& problem, int depth, std::span<const double> t_grid);

/// Closed-form envelope a(t, xi) for level i (constant 1 in place of the
/// hidden constants). Zero outside the ball |xi| <= r.
double lower_bound_sequence(const BlowupHypothesis& h, int level, double t,
                            std::span<const double> xi);

struct WitnessResult {
  std::vector<double> terms;
  std::vector<double> partial_sums;
  double ratio = 0.0;
  bool preconditions_met = false;
  bool divergent = false;
  std::string label;
};

/// Partial sums of sum_i ||a_i(T)||_{FL^1} with the ratio of consecutive terms.
WitnessResult divergence_witness(const BlowupHypothesis& h, double T, int i_max);

struct ConvolutionCheck {
  double min_value = 0.0;  // min over lattice points in the ball of chi*chi
  bool pass = false;
};

/// (chi_B * chi_B)(xi) >= chi_B(xi) at every lattice point, B = B_0(r).
ConvolutionCheck convolution_inequality(const SpectralGrid& grid, double r);

}  // namespace modheat
