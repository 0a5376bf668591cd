#include "modheat/hermite.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace modheat {

namespace {

constexpr double kRescale = 1e100;
const double kLogRescale = std::log(kRescale);

double binomial(int n, int k) {
  double r = 1.0;
  for (int j = 1; j <= k; ++j) r = r * (n - k + j) / j;
  return r;
}

}  // namespace

std::vector<double> hermite_values(int kmax, double x) {
  if (kmax < 0) throw std::invalid_argument("hermite_values: negative degree");
  std::vector<double> out(static_cast<std::size_t>(kmax) + 1);
  const double base = -0.5 * x * x;
  double prev = 0.0;
  double cur = std::pow(std::numbers::pi, -0.25);
  int scale = 0;
  auto emit = [&](int k) {
    if (cur == 0.0) {
      out[k] = 0.0;
      return;
    }
    out[k] = std::copysign(std::exp(std::log(std::abs(cur)) + base + scale * kLogRescale), cur);
  };
  emit(0);
  for (int k = 0; k < kmax; ++k) {
    const double next = x * std::sqrt(2.0 / (k + 1)) * cur - std::sqrt(static_cast<double>(k) / (k + 1)) * prev;
    prev = cur;
    cur = next;
    if (std::abs(cur) > kRescale) {
      cur /= kRescale;
      prev /= kRescale;
      ++scale;
    }
    emit(k + 1);
  }
  return out;
}

double hermite_eval(int k, double x) { return hermite_values(k, x).back(); }

GaussHermiteRule gauss_hermite(int n) {
  if (n < 1) throw std::invalid_argument("gauss_hermite: need at least one node");
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  std::vector<double> x(n), w(n);
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0)
      z = std::sqrt(2.0 * n + 1) - 1.85575 * std::pow(2.0 * n + 1, -0.16667);
    else if (i == 1)
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * x[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * x[1];
    else
      z = 2.0 * z - x[i - 2];
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 3e-15 * std::max(1.0, std::abs(z))) break;
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = w[n - 1 - i] = 2.0 / (pp * pp);
  }
  if (n % 2 == 1) x[n / 2] = 0.0;
  GaussHermiteRule rule;
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return x[a] < x[b]; });
  for (int i : order) {
    rule.nodes.push_back(x[i]);
    rule.weights.push_back(w[i]);
    const double h = hermite_eval(n - 1, x[i]);
    rule.function_weights.push_back(1.0 / (n * h * h));
  }
  return rule;
}

std::size_t level_dimension(int d, int n) {
  if (d < 1 || n < 0) throw std::invalid_argument("level_dimension: bad arguments");
  return static_cast<std::size_t>(std::llround(binomial(n + d - 1, d - 1)));
}

HermiteBasis::HermiteBasis(int dim, int degree_cap) : dim_(dim), degree_cap_(degree_cap) {
  if (dim < 1 || dim > SpectralGrid::kMaxDim) throw std::invalid_argument("HermiteBasis: dim must be 1..3");
  if (degree_cap < 0) throw std::invalid_argument("HermiteBasis: negative degree cap");
  rule_ = gauss_hermite(degree_cap + 8);
  const int n = node_count();
  table_.resize(static_cast<std::size_t>(degree_cap + 1) * n);
  for (int i = 0; i < n; ++i) {
    const auto h = hermite_values(degree_cap, rule_.nodes[i]);
    for (int k = 0; k <= degree_cap; ++k) table_[static_cast<std::size_t>(k) * n + i] = h[k];
  }
  build_indices();
}

void HermiteBasis::build_indices() {
  indices_.clear();
  offsets_.clear();
  for (int level = 0; level <= degree_cap_; ++level) {
    offsets_.push_back(indices_.size());
    // Lexicographic enumeration of alpha with |alpha| = level.
    MultiIndex a{};
    std::function<void(int, int)> rec = [&](int axis, int left) {
      if (axis == dim_ - 1) {
        a[axis] = left;
        indices_.push_back(a);
        return;
      }
      for (int v = 0; v <= left; ++v) {
        a[axis] = v;
        rec(axis + 1, left - v);
      }
    };
    rec(0, level);
  }
  offsets_.push_back(indices_.size());
}

std::size_t HermiteBasis::tensor_size() const {
  std::size_t s = 1;
  for (int a = 0; a < dim_; ++a) s *= static_cast<std::size_t>(node_count());
  return s;
}

namespace {
std::array<int, SpectralGrid::kMaxDim> node_multi(std::size_t flat, int dim, int n) {
  std::array<int, SpectralGrid::kMaxDim> idx{};
  for (int a = dim - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % n);
    flat /= n;
  }
  return idx;
}
}  // namespace

std::array<double, SpectralGrid::kMaxDim> HermiteBasis::tensor_point(std::size_t flat) const {
  const auto idx = node_multi(flat, dim_, node_count());
  std::array<double, SpectralGrid::kMaxDim> x{};
  for (int a = 0; a < dim_; ++a) x[a] = rule_.nodes[idx[a]];
  return x;
}

double HermiteBasis::tensor_weight(std::size_t flat) const {
  const auto idx = node_multi(flat, dim_, node_count());
  double w = 1.0;
  for (int a = 0; a < dim_; ++a) w *= rule_.function_weights[idx[a]];
  return w;
}

double HermiteBasis::phi_at_node(const MultiIndex& alpha, std::size_t flat) const {
  const auto idx = node_multi(flat, dim_, node_count());
  double v = 1.0;
  for (int a = 0; a < dim_; ++a) v *= table(alpha[a], idx[a]);
  return v;
}

namespace {
constexpr char kMagic[8] = {'M', 'H', 'H', 'B', '0', '0', '1', '\0'};

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!is) throw std::runtime_error("basis cache: truncated file");
  return v;
}
void put_vec(std::ostream& os, const std::vector<double>& v) {
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}
void get_vec(std::istream& is, std::vector<double>& v, std::size_t n) {
  v.resize(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) throw std::runtime_error("basis cache: truncated file");
}
}  // namespace

void HermiteBasis::save(const std::filesystem::path& file) const {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw std::runtime_error("basis cache: cannot write " + file.string());
  os.write(kMagic, sizeof kMagic);
  put<std::int32_t>(os, dim_);
  put<std::int32_t>(os, degree_cap_);
  put<std::int32_t>(os, node_count());
  put_vec(os, rule_.nodes);
  put_vec(os, rule_.weights);
  put_vec(os, rule_.function_weights);
  put_vec(os, table_);
}

HermiteBasis HermiteBasis::load(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw std::runtime_error("basis cache: cannot read " + file.string());
  char magic[8];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw std::runtime_error("basis cache: bad header in " + file.string());
  HermiteBasis b;
  b.dim_ = get<std::int32_t>(is);
  b.degree_cap_ = get<std::int32_t>(is);
  const int n = get<std::int32_t>(is);
  if (b.dim_ < 1 || b.dim_ > SpectralGrid::kMaxDim || b.degree_cap_ < 0 || n != b.degree_cap_ + 8)
    throw std::runtime_error("basis cache: inconsistent header");
  get_vec(is, b.rule_.nodes, n);
  get_vec(is, b.rule_.weights, n);
  get_vec(is, b.rule_.function_weights, n);
  get_vec(is, b.table_, static_cast<std::size_t>(b.degree_cap_ + 1) * n);
  b.build_indices();
  return b;
}

std::shared_ptr<const HermiteBasis> HermiteBasis::cached(int dim, int degree_cap,
                                                         const std::filesystem::path& cache_dir) {
  const auto file = cache_dir / ("hermite_d" + std::to_string(dim) + "_K" + std::to_string(degree_cap) +
                                 "_n" + std::to_string(degree_cap + 8) + ".bin");
  if (std::filesystem::exists(file)) {
    try {
      auto b = std::make_shared<const HermiteBasis>(load(file));
      if (b->dim() == dim && b->degree_cap() == degree_cap) return b;
    } catch (const std::runtime_error&) {
      // Rebuild below.
    }
  }
  auto b = std::make_shared<const HermiteBasis>(dim, degree_cap);
  std::filesystem::create_directories(cache_dir);
  b->save(file);
  return b;
}

HermiteCoeffs analyze(std::shared_ptr<const HermiteBasis> basis, std::span<const Complex> samples) {
  if (!basis) throw std::invalid_argument("analyze: null basis");
  const std::size_t nt = basis->tensor_size();
  if (samples.size() != nt) throw std::invalid_argument("analyze: sample count mismatch");
  HermiteCoeffs out;
  out.c.assign(basis->size(), Complex{});
  double l2 = 0.0;
  for (std::size_t f = 0; f < nt; ++f) {
    const double w = basis->tensor_weight(f);
    l2 += w * std::norm(samples[f]);
    const Complex wf = w * samples[f];
    for (std::size_t j = 0; j < basis->size(); ++j) out.c[j] += wf * basis->phi_at_node(basis->indices()[j], f);
  }
  out.l2_norm = std::sqrt(l2);
  // Energy the retained levels do not capture (Bessel defect).
  double kept = 0.0;
  for (const auto& v : out.c) kept += std::norm(v);
  out.tail_flag = l2 - kept > 1e-8 * l2;
  out.basis = std::move(basis);
  return out;
}

HermiteCoeffs analyze(std::shared_ptr<const HermiteBasis> basis,
                      const std::function<Complex(std::span<const double>)>& f) {
  std::vector<Complex> samples(basis->tensor_size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto x = basis->tensor_point(i);
    samples[i] = f(std::span<const double>(x.data(), basis->dim()));
  }
  return analyze(std::move(basis), samples);
}

std::vector<Complex> synthesize(const HermiteCoeffs& coeffs) {
  const auto& b = *coeffs.basis;
  std::vector<Complex> out(b.tensor_size());
  for (std::size_t f = 0; f < out.size(); ++f) {
    Complex acc{};
    for (std::size_t j = 0; j < b.size(); ++j)
      if (coeffs.c[j] != Complex{}) acc += coeffs.c[j] * b.phi_at_node(b.indices()[j], f);
    out[f] = acc;
  }
  return out;
}

Complex evaluate(const HermiteCoeffs& coeffs, std::span<const double> x) {
  const auto& b = *coeffs.basis;
  std::array<std::vector<double>, SpectralGrid::kMaxDim> h;
  for (int a = 0; a < b.dim(); ++a) h[a] = hermite_values(b.degree_cap(), x[a]);
  Complex acc{};
  for (std::size_t j = 0; j < b.size(); ++j) {
    double v = 1.0;
    for (int a = 0; a < b.dim(); ++a) v *= h[a][b.indices()[j][a]];
    acc += coeffs.c[j] * v;
  }
  return acc;
}

GridFunction to_grid(const HermiteCoeffs& coeffs, const SpectralGrid& grid) {
  const auto& b = *coeffs.basis;
  if (grid.dim() != b.dim()) throw std::invalid_argument("to_grid: dimension mismatch");
  const int n = grid.points_per_axis();
  const int K = b.degree_cap();
  // h_k at every 1-d grid coordinate.
  std::vector<double> tab(static_cast<std::size_t>(n) * (K + 1));
  for (int j = 0; j < n; ++j) {
    const auto h = hermite_values(K, grid.coordinate(j));
    std::copy(h.begin(), h.end(), tab.begin() + static_cast<std::ptrdiff_t>(j) * (K + 1));
  }
  std::vector<std::size_t> live;
  for (std::size_t j = 0; j < b.size(); ++j)
    if (coeffs.c[j] != Complex{}) live.push_back(j);
  GridFunction out(grid, Side::physical);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto idx = grid.unflatten(i);
    Complex acc{};
    for (auto j : live) {
      double v = 1.0;
      for (int a = 0; a < b.dim(); ++a) v *= tab[static_cast<std::size_t>(idx[a]) * (K + 1) + b.indices()[j][a]];
      acc += coeffs.c[j] * v;
    }
    out.values[i] = acc;
  }
  return out;
}

HermiteCoeffs from_coefficients(std::shared_ptr<const HermiteBasis> basis,
                                std::span<const std::pair<MultiIndex, Complex>> entries) {
  HermiteCoeffs out;
  out.c.assign(basis->size(), Complex{});
  for (const auto& [alpha, v] : entries) {
    const auto it = std::find(basis->indices().begin(), basis->indices().end(), alpha);
    if (it == basis->indices().end()) throw std::out_of_range("from_coefficients: index beyond degree cap");
    out.c[static_cast<std::size_t>(it - basis->indices().begin())] += v;
  }
  double l2 = 0.0;
  for (const auto& v : out.c) l2 += std::norm(v);
  out.l2_norm = std::sqrt(l2);
  out.basis = std::move(basis);
  return out;
}

HermiteCoeffs project_eigenspace(const HermiteCoeffs& f, int level) {
  const auto& b = *f.basis;
  if (level < 0 || level > b.degree_cap()) throw std::out_of_range("project_eigenspace: level beyond K");
  HermiteCoeffs out = f;
  for (std::size_t j = 0; j < b.size(); ++j)
    if (j < b.level_offset(level) || j >= b.level_offset(level + 1)) out.c[j] = Complex{};
  double l2 = 0.0;
  for (const auto& v : out.c) l2 += std::norm(v);
  out.l2_norm = std::sqrt(l2);
  out.tail_flag = false;
  return out;
}

OscillatorHeat oscillator_heat(const HermiteCoeffs& f, double t, double beta) {
  if (!(t >= 0.0) || !(beta > 0.0)) throw std::invalid_argument("oscillator_heat: need t >= 0, beta > 0");
  const auto& b = *f.basis;
  OscillatorHeat out{f, 0.0};
  const int d = b.dim();
  for (int level = 0; level <= b.degree_cap(); ++level) {
    const double m = std::exp(-t * std::pow(2.0 * level + d, beta));
    for (std::size_t j = b.level_offset(level); j < b.level_offset(level + 1); ++j) out.result.c[j] *= m;
  }
  out.truncation_bound = std::exp(-t * std::pow(2.0 * b.degree_cap() + d, beta)) * f.l2_norm;
  return out;
}

double shell_tail_bound(int d, double beta, double c, long N) {
  const double y0 = 2.0 * N + d - 2.0;
  if (!(y0 > 0.0)) return -1.0;
  if (d > 1 && std::pow(y0, beta) < (d - 1) / (c * beta)) return -1.0;
  // C(n+d-1, d-1) <= (n + d/2)^{d-1} / (d-1)! = y^{d-1} / (2^{d-1} (d-1)!), y = 2n + d,
  // and each term is at most half the integral of y^{d-1} e^{-c y^beta} over [y-2, y].
  const double a = d / beta;
  const double upper = boost::math::tgamma(a, c * std::pow(y0, beta));
  return std::pow(c, -a) * upper / (beta * std::ldexp(1.0, d) * std::tgamma(static_cast<double>(d)));
}

namespace {

// Direct sum of a positive sequence until terms past the peak fall below
// 1e-18 of the running total.
template <class Term>
double sum_to_convergence(Term term, long first) {
  double sum = 0.0, prev = kInf;
  for (long n = first;; ++n) {
    const double v = term(n);
    sum += v;
    if (v <= prev && v <= 1e-18 * sum) break;
    if (n - first > 100000000) throw std::runtime_error("series did not converge");
    prev = v;
  }
  return sum;
}

}  // namespace

EigenSum eigen_sum(int d, double beta, double t) {
  if (d < 1 || !(beta > 0.0) || !(t > 0.0)) throw std::invalid_argument("eigen_sum: need d >= 1, beta, t > 0");
  EigenSum out;
  const double c = 2.0 * t;
  for (long n = 0;; ++n) {
    out.value += binomial(static_cast<int>(n) + d - 1, d - 1) * std::exp(-c * std::pow(2.0 * n + d, beta));
    out.shells = static_cast<int>(n + 1);
    const double tail = shell_tail_bound(d, beta, c, n + 1);
    if (tail >= 0.0 && tail < 1e-14 * out.value) {
      out.remainder = tail;
      break;
    }
    if (n > 50000000) throw std::runtime_error("eigen_sum: remainder target unreachable");
  }
  return out;
}

double eigen_sum_bound(int d, double beta, double t) {
  if (d < 1 || !(beta > 0.0) || !(t > 0.0)) throw std::invalid_argument("eigen_sum_bound: need d >= 1, beta, t > 0");
  const double log_b = -t * std::pow(d, beta) + (d / beta) * std::log(static_cast<double>(d)) -
                       d * std::log(2.0) - (d / beta) * std::log(t) + d * std::lgamma(1.0 + 1.0 / beta);
  return std::exp(log_b);
}

EigenSumChain eigen_sum_chain(int d, double beta, double t) {
  EigenSumChain ch;
  ch.sum = eigen_sum(d, beta, t).value;
  ch.bound = eigen_sum_bound(d, beta, t);
  const double pre = std::exp(-t * std::pow(d, beta));
  const double c = t * std::pow(2.0, beta);
  ch.step_a = pre * sum_to_convergence(
                        [&](long n) { return binomial(static_cast<int>(n) + d - 1, d - 1) * std::exp(-c * std::pow(n, beta)); },
                        0);
  ch.axis_tail = sum_to_convergence([&](long n) { return std::exp(-c / d * std::pow(n, beta)); }, 1);
  ch.axis_tail_bound = std::pow(d, 1.0 / beta) * std::tgamma(1.0 + 1.0 / beta) / (2.0 * std::pow(t, 1.0 / beta));
  ch.step_b = pre * std::pow(1.0 + ch.axis_tail, d);
  return ch;
}

std::vector<HermiteCoeffs> hermite_family(std::shared_ptr<const HermiteBasis> basis, int count,
                                          int max_level, unsigned long long seed) {
  if (count < 1) throw std::invalid_argument("hermite_family: count must be >= 1");
  if (max_level < 0 || max_level > basis->degree_cap())
    throw std::invalid_argument("hermite_family: max_level beyond degree cap");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<HermiteCoeffs> out;
  const MultiIndex zero{};
  const std::pair<MultiIndex, Complex> phi0{zero, Complex(1.0)};
  out.push_back(from_coefficients(basis, std::span(&phi0, 1)));
  const std::size_t live = basis->level_offset(max_level + 1);
  for (int f = 1; f < count; ++f) {
    std::vector<std::pair<MultiIndex, Complex>> entries;
    for (std::size_t j = 0; j < live; ++j) {
      const auto& alpha = basis->indices()[j];
      int level = 0;
      for (int a = 0; a < basis->dim(); ++a) level += alpha[a];
      const double damp = std::pow(0.7, level);
      entries.emplace_back(alpha, Complex(unit(rng) * damp, unit(rng) * damp));
    }
    out.push_back(from_coefficients(basis, entries));
  }
  return out;
}

DecayProfile decay_profile(const HermiteCoeffs& f, double beta, double p, std::span<const double> t_grid,
                           const SpectralGrid& grid, int x_stride) {
  if (!(p >= 1.0) || std::isinf(p)) throw std::invalid_argument("decay_profile: need 1 <= p < inf");
  const ModNormSpec spec{p, p, 0.0};
  const auto plan = STFTPlan::gaussian(grid, x_stride);
  const int d = f.basis->dim();
  DecayProfile out;
  out.initial_norm = mod_norm_stft(to_grid(f, grid), plan, spec, false).value;
  if (!(out.initial_norm > 0.0)) throw std::domain_error("decay_profile: zero-norm input");
  for (double t : t_grid) {
    const auto evolved = oscillator_heat(f, t, beta).result;
    const auto nrm = mod_norm_stft(to_grid(evolved, grid), plan, spec, true);
    DecayRow row;
    row.t = t;
    row.norm = nrm.value;
    row.resolution_ok = nrm.resolution_ok;
    row.ratio = nrm.value * std::exp(t * std::pow(d, beta)) * std::pow(t, d / beta) / out.initial_norm;
    out.empirical_constant = std::max(out.empirical_constant, row.ratio);
    out.rows.push_back(row);
  }
  return out;
}

double log_slope(const DecayProfile& profile, double t0, double t1) {
  const DecayRow* a = nullptr;
  const DecayRow* b = nullptr;
  for (const auto& r : profile.rows) {
    if (!a && r.t >= t0) a = &r;
    if (r.t <= t1) b = &r;
  }
  if (!a || !b || b->t <= a->t) throw std::invalid_argument("log_slope: need two rows in range");
  return (std::log(b->norm) - std::log(a->norm)) / (b->t - a->t);
}

}  // namespace modheat
