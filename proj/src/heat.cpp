#include "modheat/heat.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace modheat {

namespace {

constexpr double kE = std::numbers::e;
constexpr double kPi = std::numbers::pi;

bool all_finite(const std::vector<Complex>& v) {
  for (const auto& z : v)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

std::vector<double> symbol_table(const SpectralGrid& g, double beta) {
  std::vector<double> out(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto xi = g.frequency_vector(i);
    out[i] = fractional_symbol(std::span<const double>(xi.data(), g.dim()), beta);
  }
  return out;
}

GridFunction spectrum_of(const GridFunction& f) {
  return f.side == Side::physical ? forward_transform(f) : f;
}

}  // namespace

GridFunction linear_propagate(const GridFunction& f, double t, double beta) {
  if (!(t >= 0.0)) throw std::invalid_argument("linear_propagate: negative time");
  if (!(beta > 0.0)) throw std::invalid_argument("linear_propagate: beta must be positive");
  if (t == 0.0) return f;
  return apply_multiplier(f, [t, beta](std::span<const double> xi) {
    return Complex(std::exp(-t * fractional_symbol(xi, beta)));
  });
}

void HeatProblem::validate() const {
  if (!(beta > 0.0)) throw std::invalid_argument("HeatProblem: beta must be positive");
  if (k < 2) throw std::invalid_argument("HeatProblem: k must be >= 2");
  if (!all_finite(u0.values)) throw std::invalid_argument("HeatProblem: u0 is not finite");
  if (source_sign != 1.0 && source_sign != -1.0)
    throw std::invalid_argument("HeatProblem: source_sign must be +1 or -1");
  norm_spec.validate();
}

void SolverConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("SolverConfig: dt must be positive");
  if (!(t_max > 0.0)) throw std::invalid_argument("SolverConfig: t_max must be positive");
  if (!(dt < t_max)) throw std::invalid_argument("SolverConfig: dt must be below t_max");
  if (!(threshold_factor > 1.0)) throw std::invalid_argument("SolverConfig: threshold_factor must exceed 1");
  if (record_every < 1) throw std::invalid_argument("SolverConfig: record_every must be >= 1");
}

double etd_phi1(double z) {
  if (z == 0.0) return 1.0;
  return -std::expm1(-z) / z;
}

double etd_phi2(double z) {
  if (z < 0.1) {
    // Taylor series of (e^{-z} - 1 + z) / z^2.
    return 0.5 + z * (-1.0 / 6 + z * (1.0 / 24 + z * (-1.0 / 120 + z * (1.0 / 720 - z / 5040))));
  }
  return (std::expm1(-z) + z) / (z * z);
}

void SolutionTrace::write_csv(std::ostream& os) const {
  char buf[160];
  os << "t,norm_Mp1,norm_FL1,linf,blowup_flag\n";
  for (std::size_t i = 0; i < times.size(); ++i) {
    const bool flag = blowup_detected && i + 1 == times.size();
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%d\n", times[i], norms[i], fl1[i], linf[i],
                  flag ? 1 : 0);
    os << buf;
  }
}

SolutionTrace solve(const HeatProblem& problem, const SolverConfig& config) {
  problem.validate();
  config.validate();
  const SpectralGrid& g = problem.u0.grid;
  const auto part = UniformPartition::covering(g);
  const Dealiaser dealias(g, problem.k);
  const ModNormSpec spec{problem.norm_spec.p, 1.0, problem.norm_spec.s};

  const long steps = static_cast<long>(std::ceil(config.t_max / config.dt - 1e-9));
  const double h = config.t_max / static_cast<double>(steps);

  const auto lam = symbol_table(g, problem.beta);
  std::vector<double> decay(g.size()), w1(g.size()), w2(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double z = h * lam[i];
    decay[i] = std::exp(-z);
    w1[i] = h * etd_phi1(z);
    w2[i] = h * etd_phi2(z);
  }

  SolutionTrace trace;
  trace.step = h;
  trace.outside_proven_range = problem.outside_proven_range();
  GridFunction u = spectrum_of(problem.u0);

  auto record = [&](double t) {
    trace.times.push_back(t);
    trace.norms.push_back(mod_norm_decomp(u, part, spec));
    trace.fl1.push_back(lp_norm(u, 1.0));
    trace.linf.push_back(lp_norm(inverse_transform(u), kInf));
  };
  record(0.0);
  trace.threshold = config.blowup_threshold > 0.0 ? config.blowup_threshold
                                                  : config.threshold_factor * trace.norms.front();

  auto nonlinear = [&](const GridFunction& spectrum) {
    GridFunction n = dealias.power(spectrum, problem.k);
    if (problem.source_sign < 0.0) n *= -1.0;
    return n;
  };

  GridFunction n_prev(g, Side::frequency);
  double last_finite = 0.0;
  for (long step = 0; step < steps; ++step) {
    GridFunction n_cur = nonlinear(u);
    const bool second_order = config.scheme == Scheme::etd2 && step > 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      Complex v = decay[i] * u.values[i] + w1[i] * n_cur.values[i];
      if (second_order) v += w2[i] * (n_cur.values[i] - n_prev.values[i]);
      u.values[i] = v;
    }
    n_prev = std::move(n_cur);
    const double t = static_cast<double>(step + 1) * h;

    if (!all_finite(u.values)) {
      trace.blowup_detected = true;
      trace.overflow = true;
      trace.t_detect = last_finite;
      break;
    }
    last_finite = t;
    const bool last = step + 1 == steps;
    if ((step + 1) % config.record_every == 0 || last) {
      record(t);
      const double nrm = trace.norms.back();
      if (!std::isfinite(nrm) || nrm > trace.threshold) {
        trace.blowup_detected = true;
        trace.overflow = !std::isfinite(nrm);
        trace.t_detect = t;
        break;
      }
    }
  }
  trace.final_spectrum = u;
  return trace;
}

// Blow-up hypothesis ------------------------------------------------------

double unit_ball_volume(int d) {
  return std::pow(kPi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

bool Certificate::passed() const {
  return std::all_of(conditions.begin(), conditions.end(), [](const Verdict& v) { return v.pass; });
}

Certificate certify_hypothesis(const BlowupHypothesis& h, const GridFunction& u0) {
  Certificate cert;
  const double rb = std::pow(h.r, h.beta);
  cert.horizon = h.k >= 2 && rb > 0.0 ? 1.0 / (4.0 * rb * (h.k - 1)) : 0.0;

  // Bounds carry the relative tolerance, so pass iff value >= bound.
  auto add = [&cert](std::string name, double value, double bound) {
    cert.conditions.push_back({std::move(name), value, bound, value - bound, value >= bound});
  };

  const double vol = std::pow(h.r, h.d) * unit_ball_volume(h.d);
  const double two_d = std::ldexp(1.0, h.d);
  add("ball_volume", vol, two_d * (1.0 - 1e-12));

  const GridFunction F = spectrum_of(u0);
  const auto& g = F.grid;
  double scale = 0.0;
  for (const auto& v : F.values) scale = std::max(scale, std::abs(v));
  const double tol = 1e-10 * scale;
  double min_re = 0.0, max_im = 0.0, min_ball = kInf;
  for (std::size_t i = 0; i < g.size(); ++i) {
    min_re = std::min(min_re, F.values[i].real());
    max_im = std::max(max_im, std::abs(F.values[i].imag()));
    auto xi = g.frequency_vector(i);
    double r2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) r2 += xi[a] * xi[a];
    if (std::sqrt(r2) <= h.r * (1.0 + 1e-12)) min_ball = std::min(min_ball, F.values[i].real());
  }
  // A spectrum with imaginary part above tol counts as negative.
  add("fourier_nonnegative", max_im <= tol ? min_re : -max_im, -tol);
  if (!std::isfinite(min_ball)) min_ball = 0.0;  // no lattice point in the ball
  add("fourier_lower_bound", min_ball, h.gamma * (1.0 - 1e-12));

  const double lhs = h.k >= 2 ? std::pow(h.gamma, h.k - 1) : 0.0;
  const double rhs = 4.0 * rb * (h.k - 1) * kE;
  add("gamma_threshold", lhs, rhs * (1.0 - 1e-12));
  return cert;
}

GridFunction gaussian_datum(const SpectralGrid& grid, double amplitude) {
  return GridFunction::sample(grid, [amplitude](std::span<const double> x) {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    return Complex(amplitude * std::exp(-2.0 * kPi * r2));
  });
}

double gaussian_datum_threshold(int k, double beta, double r) {
  const double rb = std::pow(r, beta);
  return std::pow(4.0 * kE * rb * (k - 1), 1.0 / (k - 1)) * std::exp(2.0 * kPi * rb);
}

GridFunction sinc_datum(const SpectralGrid& grid, int k, bool corrected, double scale) {
  if (grid.dim() != 1) throw std::invalid_argument("sinc_datum: one-dimensional only");
  if (k < 2) throw std::invalid_argument("sinc_datum: k must be >= 2");
  double amp = std::pow(4.0 * kE * (k - 1), 1.0 / (k - 1));
  // F[sin x / x] = sqrt(pi/2) chi_[-1,1] under the (2 pi)^{-1/2} convention.
  if (!corrected) amp *= std::sqrt(kPi / 2.0) / kPi;
  GridFunction F(grid, Side::frequency);
  for (int s = 0; s < grid.points_per_axis(); ++s)
    if (std::abs(grid.frequency(s)) <= 1.0 + 1e-12) F.values[s] = scale * amp;
  return inverse_transform(F);
}

// Picard series -----------------------------------------------------------

namespace {

// All k-tuples of non-negative levels summing to total, lexicographic.
void compositions(int total, int k, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == k - 1) {
    cur.push_back(total);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int t = 0; t <= total; ++t) {
    cur.push_back(t);
    compositions(total - t, k, cur, out);
    cur.pop_back();
  }
}

std::vector<std::vector<int>> level_tuples(int total, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  compositions(total, k, cur, out);
  return out;
}

}  // namespace

std::vector<std::vector<int>> lambda_index_set(int j, int k) {
  if (j < 1 || k < 2) throw std::invalid_argument("lambda_index_set: need j >= 1, k >= 2");
  auto tuples = level_tuples(j - 1, k);
  for (auto& tup : tuples)
    for (auto& t : tup) t = t * (k - 1) + 1;
  return tuples;
}

std::vector<double> duhamel_weights(int n, double h) {
  if (n < 0) throw std::invalid_argument("duhamel_weights: negative n");
  std::vector<double> w(static_cast<std::size_t>(n) + 1, 0.0);
  if (n == 0) return w;
  if (n == 1) {
    w[0] = w[1] = 0.5 * h;
    return w;
  }
  int start = 0;
  if (n % 2 == 1) {
    const double c = 3.0 * h / 8.0;
    w[0] += c;
    w[1] += 3 * c;
    w[2] += 3 * c;
    w[3] += c;
    start = 3;
  }
  for (int i = start; i < n; i += 2) {
    w[i] += h / 3.0;
    w[i + 1] += 4.0 * h / 3.0;
    w[i + 2] += h / 3.0;
  }
  return w;
}

GridFunction PicardResult::partial_sum(std::size_t levels, std::size_t n) const {
  GridFunction out = terms.at(0).at(n);
  for (std::size_t j = 1; j < std::min(levels, terms.size()); ++j) out += terms[j][n];
  return out;
}

PicardResult picard_terms(const HeatProblem& problem, int depth, std::span<const double> t_grid) {
  problem.validate();
  if (depth < 1) throw std::invalid_argument("picard_terms: depth must be >= 1");
  if (t_grid.size() < 2 || t_grid[0] != 0.0)
    throw std::invalid_argument("picard_terms: t_grid must start at 0 with >= 2 points");
  const std::size_t nt = t_grid.size();
  const double h = t_grid[1] - t_grid[0];
  if (!(h > 0.0)) throw std::invalid_argument("picard_terms: t_grid must be increasing");
  for (std::size_t n = 1; n < nt; ++n)
    if (std::abs(t_grid[n] - n * h) > 1e-9 * std::max(1.0, t_grid[n]))
      throw std::invalid_argument("picard_terms: t_grid must be uniform");

  const SpectralGrid& g = problem.u0.grid;
  const int k = problem.k;
  const Dealiaser dealias(g, k);
  const auto part = UniformPartition::covering(g);
  const ModNormSpec spec{problem.norm_spec.p, 1.0, problem.norm_spec.s};
  const auto lam = symbol_table(g, problem.beta);

  // e^{-m h |xi|^beta} for m = 0..nt-1.
  std::vector<std::vector<double>> decay(nt, std::vector<double>(g.size()));
  for (std::size_t m = 0; m < nt; ++m)
    for (std::size_t i = 0; i < g.size(); ++i) decay[m][i] = std::exp(-static_cast<double>(m) * h * lam[i]);

  PicardResult res;
  res.times.assign(t_grid.begin(), t_grid.end());
  const GridFunction u0hat = spectrum_of(problem.u0);

  // padded[j][n]: level j+1 on the padded physical grid at time n.
  std::vector<std::vector<GridFunction>> padded;
  for (int level = 1; level <= depth; ++level) {
    std::vector<GridFunction> traj;
    traj.reserve(nt);
    if (level == 1) {
      for (std::size_t n = 0; n < nt; ++n) {
        GridFunction v(g, Side::frequency);
        for (std::size_t i = 0; i < g.size(); ++i) v.values[i] = decay[n][i] * u0hat.values[i];
        traj.push_back(std::move(v));
      }
    } else {
      const auto tuples = level_tuples(level - 2, k);
      std::vector<GridFunction> source;
      source.reserve(nt);
      for (std::size_t n = 0; n < nt; ++n) {
        GridFunction prod(dealias.padded(), Side::physical);
        for (const auto& tup : tuples) {
          for (std::size_t i = 0; i < prod.values.size(); ++i) {
            Complex v = problem.source_sign;
            for (int t : tup) v *= padded[t][n].values[i];
            prod.values[i] += v;
          }
        }
        source.push_back(dealias.from_padded_physical(prod));
      }
      for (std::size_t n = 0; n < nt; ++n) {
        const auto w = duhamel_weights(static_cast<int>(n), h);
        GridFunction v(g, Side::frequency);
        for (std::size_t s = 0; s < n + 1 && n > 0; ++s)
          for (std::size_t i = 0; i < g.size(); ++i) v.values[i] += w[s] * decay[n - s][i] * source[s].values[i];
        traj.push_back(std::move(v));
      }
    }
    if (level < depth) {
      std::vector<GridFunction> pad;
      pad.reserve(nt);
      for (const auto& v : traj) pad.push_back(dealias.to_padded_physical(v));
      padded.push_back(std::move(pad));
    }
    double sup = 0.0;
    for (const auto& v : traj) sup = std::max(sup, mod_norm_decomp(v, part, spec));
    res.sup_norms.push_back(sup);
    res.iterate_index.push_back((level - 1) * (k - 1) + 1);
    res.terms.push_back(std::move(traj));
  }
  for (std::size_t j = 0; j + 1 < res.sup_norms.size(); ++j)
    res.ratios.push_back(res.sup_norms[j] > 0.0 ? res.sup_norms[j + 1] / res.sup_norms[j] : 0.0);
  res.unstable = !res.ratios.empty() && res.ratios.back() >= 1.0;
  return res;
}

double lower_bound_sequence(const BlowupHypothesis& h, int level, double t, std::span<const double> xi) {
  if (level < 1) throw std::invalid_argument("lower_bound_sequence: level must be >= 1");
  double r2 = 0.0;
  for (double v : xi) r2 += v * v;
  if (std::sqrt(r2) > h.r * (1.0 + 1e-12)) return 0.0;
  const double heat = std::exp(-t * std::pow(std::sqrt(r2), h.beta));
  const int m = level - 1;
  if (m == 0) return h.gamma * heat;
  const double c = 4.0 * std::pow(h.r, h.beta) * (h.k - 1);
  const double log_a = (m * (h.k - 1) + 1) * std::log(h.gamma) - c * m * t + m * std::log(t);
  return std::exp(log_a) * heat;
}

WitnessResult divergence_witness(const BlowupHypothesis& h, double T, int i_max) {
  if (i_max < 1) throw std::invalid_argument("divergence_witness: i_max must be >= 1");
  WitnessResult out;
  const double c = 4.0 * std::pow(h.r, h.beta) * (h.k - 1);
  const double ball = unit_ball_volume(h.d) * std::pow(h.r, h.d);
  const double log_ratio = (h.k - 1) * std::log(h.gamma) + std::log(T) - c * T;
  out.ratio = std::exp(log_ratio);
  double sum = 0.0;
  for (int m = 0; m < i_max; ++m) {
    const double term = std::exp(std::log(h.gamma) + m * log_ratio) * ball;
    sum += term;
    out.terms.push_back(term);
    out.partial_sums.push_back(sum);
  }
  out.preconditions_met = std::pow(h.gamma, h.k - 1) >= c * std::numbers::e * (1.0 - 1e-12) &&
                          T >= (1.0 / c) * (1.0 - 1e-12);
  out.divergent = out.preconditions_met && out.ratio >= 1.0 - 1e-12;
  if (!out.preconditions_met)
    out.label = "no divergence guarantee";
  else
    out.label = out.divergent ? "divergent" : "inconclusive";
  return out;
}

ConvolutionCheck convolution_inequality(const SpectralGrid& grid, double r) {
  const int d = grid.dim();
  const double dx = grid.freq_spacing();
  const int mr = static_cast<int>(std::floor(r / dx * (1.0 + 1e-12)));
  std::vector<std::array<int, SpectralGrid::kMaxDim>> ball;
  std::array<int, SpectralGrid::kMaxDim> m{};
  const double lim = (r / dx) * (r / dx) * (1.0 + 1e-12);
  auto in_ball = [&](const std::array<int, SpectralGrid::kMaxDim>& v) {
    double s = 0.0;
    for (int a = 0; a < d; ++a) s += static_cast<double>(v[a]) * v[a];
    return s <= lim;
  };
  std::size_t side = 2 * mr + 1, total = 1;
  for (int a = 0; a < d; ++a) total *= side;
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t rr = i;
    for (int a = 0; a < d; ++a) {
      m[a] = static_cast<int>(rr % side) - mr;
      rr /= side;
    }
    if (in_ball(m)) ball.push_back(m);
  }
  ConvolutionCheck out;
  out.min_value = kInf;
  const double cell = grid.dual_cell_volume();
  for (const auto& xi : ball) {
    std::size_t count = 0;
    for (const auto& eta : ball) {
      std::array<int, SpectralGrid::kMaxDim> diff{};
      for (int a = 0; a < d; ++a) diff[a] = xi[a] - eta[a];
      if (in_ball(diff)) ++count;
    }
    out.min_value = std::min(out.min_value, count * cell);
  }
  out.pass = !ball.empty() && out.min_value >= 1.0;
  return out;
}

}  // namespace modheat
