#include "modheat/torus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <stdexcept>

#include "fft.hpp"

namespace modheat {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t cube(int n, int d) {
  std::size_t s = 1;
  for (int a = 0; a < d; ++a) s *= static_cast<std::size_t>(n);
  return s;
}

// Coefficients on an M grid moved into an F*M grid (FFT layout on both),
// dropping the Nyquist bin, then evaluated as (2pi)^{-d} sum c e^{i xi.theta}.
std::vector<Complex> evaluate_oversampled(const TorusGrid& g, std::span<const Complex> coeffs, int factor) {
  const int d = g.dim();
  const int m = g.modes_per_axis();
  const int big = m * factor;
  const TorusGrid fine(d, big);
  std::vector<Complex> padded(fine.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto q = g.unflatten(i);
    bool keep = true;
    std::size_t flat = 0;
    for (int a = 0; a < d; ++a) {
      keep = keep && g.retained(q[a]);
      const int xi = g.mode(q[a]);
      flat = flat * big + static_cast<std::size_t>(xi >= 0 ? xi : xi + big);
    }
    if (keep) padded[flat] = coeffs[i];
  }
  return torus_inverse(fine, padded);
}

}  // namespace

TorusGrid::TorusGrid(int dim, int modes_per_axis) : dim_(dim), m_(modes_per_axis) {
  if (dim < 1 || dim > SpectralGrid::kMaxDim) throw std::invalid_argument("TorusGrid: dim must be 1..3");
  if (modes_per_axis < 2 || modes_per_axis % 2 != 0)
    throw std::invalid_argument("TorusGrid: modes_per_axis must be even and >= 2");
  size_ = cube(m_, dim_);
  plans_ = std::make_shared<const detail::FftPlans>(dim_, m_);
}

double TorusGrid::cell_volume() const { return std::pow(kTwoPi / m_, dim_); }

std::array<int, SpectralGrid::kMaxDim> TorusGrid::unflatten(std::size_t flat) const {
  std::array<int, SpectralGrid::kMaxDim> idx{};
  for (int a = dim_ - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % m_);
    flat /= m_;
  }
  return idx;
}

std::vector<Complex> torus_forward(const TorusGrid& g, std::span<const Complex> samples) {
  if (samples.size() != g.size()) throw std::invalid_argument("torus_forward: size mismatch");
  std::vector<Complex> out(g.size());
  g.plans().forward.execute(samples, out);
  const double c = g.cell_volume();
  for (auto& v : out) v *= c;
  return out;
}

std::vector<Complex> torus_inverse(const TorusGrid& g, std::span<const Complex> coeffs) {
  if (coeffs.size() != g.size()) throw std::invalid_argument("torus_inverse: size mismatch");
  std::vector<Complex> out(g.size());
  g.plans().backward.execute(coeffs, out);
  const double c = std::pow(kTwoPi, -g.dim());
  for (auto& v : out) v *= c;
  return out;
}

MultiplierSpec MultiplierSpec::hermite_heat(double t, double beta) {
  if (!(t >= 0.0) || !(beta > 0.0)) throw std::invalid_argument("hermite_heat: need t >= 0, beta > 0");
  MultiplierSpec s;
  char buf[96];
  std::snprintf(buf, sizeof buf, "hermite_heat(t=%g,beta=%g)", t, beta);
  s.name = buf;
  s.symbol = [t, beta](std::span<const int> xi) {
    int level = 0;
    for (int v : xi) {
      if (v < 0) return Complex{};
      level += v;
    }
    return Complex(std::exp(-t * std::pow(2.0 * level + static_cast<double>(xi.size()), beta)));
  };
  s.dropped_mass = [t, beta](int d, int M) {
    if (t == 0.0) return kInf;
    const double tail = shell_tail_bound(d, beta, t, M / 2);
    return tail < 0.0 ? kInf : tail;
  };
  return s;
}

MultiplierSpec MultiplierSpec::identity() {
  MultiplierSpec s;
  s.name = "identity";
  s.symbol = [](std::span<const int>) { return Complex(1.0); };
  return s;
}

MultiplierSpec MultiplierSpec::single_mode(std::vector<int> xi0) {
  MultiplierSpec s;
  s.name = "single_mode";
  s.symbol = [xi0](std::span<const int> xi) {
    for (std::size_t a = 0; a < xi.size(); ++a)
      if (xi[a] != xi0.at(a)) return Complex{};
    return Complex(1.0);
  };
  s.dropped_mass = [xi0](int, int M) {
    for (int v : xi0)
      if (std::abs(v) >= M / 2) return 1.0;
    return 0.0;
  };
  return s;
}

namespace {
std::vector<Complex> sample_torus_symbol(const TorusGrid& g, const MultiplierSpec& spec) {
  std::vector<Complex> m(g.size());
  std::array<int, SpectralGrid::kMaxDim> xi{};
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto q = g.unflatten(i);
    bool keep = true;
    for (int a = 0; a < g.dim(); ++a) {
      keep = keep && g.retained(q[a]);
      xi[a] = g.mode(q[a]);
    }
    if (!keep) continue;
    const Complex v = spec.symbol(std::span<const int>(xi.data(), g.dim()));
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::invalid_argument("multiplier is not finite on a retained mode");
    m[i] = v;
  }
  return m;
}
}  // namespace

std::vector<Complex> torus_apply(const TorusGrid& g, std::span<const Complex> samples, const MultiplierSpec& spec) {
  auto c = torus_forward(g, samples);
  const auto m = sample_torus_symbol(g, spec);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= m[i];
  return torus_inverse(g, c);
}

double torus_lp_norm(const TorusGrid& g, std::span<const Complex> samples, double p) {
  return lp_norm(samples, g.cell_volume(), p);
}

KernelNorm kernel_l1_norm(const MultiplierSpec& spec, const TorusGrid& grid) {
  constexpr int kOversample = 8;
  KernelNorm out;
  out.modes = grid.modes_per_axis();
  out.remainder = spec.dropped_mass ? spec.dropped_mass(grid.dim(), grid.modes_per_axis()) : 0.0;
  if (!(out.remainder <= 1e-10))
    throw std::runtime_error("kernel_l1_norm: truncation remainder too large, enlarge M");
  const auto m = sample_torus_symbol(grid, spec);
  const auto kernel = evaluate_oversampled(grid, m, kOversample);
  const TorusGrid fine(grid.dim(), grid.modes_per_axis() * kOversample);
  out.value = torus_lp_norm(fine, kernel, 1.0);
  return out;
}

KernelNorm kernel_l1_norm(const MultiplierSpec& spec, int dim) {
  if (!spec.dropped_mass) throw std::invalid_argument("kernel_l1_norm: spec has no truncation bound");
  for (int M = 16;; M *= 2) {
    if (cube(8 * M, dim) > (std::size_t{1} << 22))
      throw std::runtime_error("kernel_l1_norm: truncation target unreachable");
    if (spec.dropped_mass(dim, M) < 1e-12) return kernel_l1_norm(spec, TorusGrid(dim, M));
  }
}

OperatorLower operator_norm_lower(const MultiplierSpec& spec, const TorusGrid& grid, double p, int trials,
                                  unsigned long long seed) {
  if (trials < 1) throw std::invalid_argument("operator_norm_lower: trials must be >= 1");
  constexpr int kOversample = 4;
  const auto m = sample_torus_symbol(grid, spec);
  const TorusGrid fine(grid.dim(), grid.modes_per_axis() * kOversample);
  OperatorLower out;
  // A single mode has constant modulus, so its ratio is |m(xi)| for every p.
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (std::abs(m[i]) > out.value) {
      out.value = std::abs(m[i]);
      const auto q = grid.unflatten(i);
      std::string w = "mode(";
      for (int a = 0; a < grid.dim(); ++a) w += (a ? "," : "") + std::to_string(grid.mode(q[a]));
      out.witness = w + ")";
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<int> cap_dist(1, grid.modes_per_axis() / 2 - 1);
  for (int trial = 0; trial < trials; ++trial) {
    const int cap = cap_dist(rng);
    std::vector<Complex> c(grid.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto q = grid.unflatten(i);
      bool keep = true;
      for (int a = 0; a < grid.dim(); ++a) keep = keep && grid.retained(q[a]) && std::abs(grid.mode(q[a])) <= cap;
      const Complex v(unit(rng), unit(rng));
      if (keep) c[i] = v;
    }
    std::vector<Complex> tc(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) tc[i] = m[i] * c[i];
    const auto f = evaluate_oversampled(grid, c, kOversample);
    const auto tf = evaluate_oversampled(grid, tc, kOversample);
    const double nf = torus_lp_norm(fine, f, p);
    if (!(nf > 0.0)) continue;
    const double ratio = torus_lp_norm(fine, tf, p) / nf;
    if (ratio > out.value) {
      out.value = ratio;
      out.witness = "random_trig_poly(trial=" + std::to_string(trial) + ",cap=" + std::to_string(cap) + ")";
    }
  }
  return out;
}

std::string TransferenceReport::csv_header() { return "d,beta,t,p,lower,young_upper,parseval_upper,pass"; }

std::string TransferenceReport::csv_row() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d", d, beta, t, p, lower, young_upper,
                parseval_upper, pass ? 1 : 0);
  return buf;
}

TransferenceReport transference_check(double t, double beta, double p, int d, const std::vector<HermiteCoeffs>& family,
                                      const SpectralGrid& grid, double s_transfer, int trials,
                                      unsigned long long seed) {
  if (!(p >= 1.0) || std::isinf(p)) throw std::invalid_argument("transference_check: need 1 <= p < inf");
  if (grid.dim() != d) throw std::invalid_argument("transference_check: grid dimension mismatch");
  TransferenceReport rep;
  rep.d = d;
  rep.beta = beta;
  rep.t = t;
  rep.p = p;
  rep.s_transfer = s_transfer;
  const auto spec = MultiplierSpec::hermite_heat(t, beta);
  const auto young = kernel_l1_norm(spec, d);
  rep.young_upper = young.upper();
  rep.parseval_upper = std::pow(kTwoPi, 0.5 * d) * std::sqrt(eigen_sum(d, beta, t).value);
  rep.lower = operator_norm_lower(spec, TorusGrid(d, young.modes), p, trials, seed).value;

  const ModNormSpec norm{p, p, 0.0};
  const auto plan = STFTPlan::gaussian(grid);
  bool all = rep.lower <= rep.young_upper + 1e-8;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const auto before = mod_norm_stft(to_grid(family[i], grid), plan, norm, false);
    if (!(before.value > 0.0)) throw std::domain_error("transference_check: zero-norm test function");
    const auto after = mod_norm_stft(to_grid(oscillator_heat(family[i], t, beta).result, grid), plan, norm, true);
    TransferenceRow row;
    row.index = i;
    row.rho = after.value / before.value;
    row.bound = rep.young_upper * s_transfer;
    row.resolution_ok = after.resolution_ok;
    row.pass = row.rho <= row.bound;
    rep.max_rho = std::max(rep.max_rho, row.rho);
    all = all && row.pass;
    rep.rows.push_back(row);
  }
  rep.pass = all;
  return rep;
}

}  // namespace modheat
