#include "modheat/modulation.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace modheat {

namespace {

double weight_of(std::span<const int> k, double s) {
  if (s == 0.0) return 1.0;
  double r2 = 0.0;
  for (int v : k) r2 += static_cast<double>(v) * v;
  return std::pow(1.0 + std::sqrt(r2), s);
}

// l^q accumulation with a fixed summation order.
struct LqAccumulator {
  double q;
  double acc = 0.0;
  void add(double v) {
    if (std::isinf(q))
      acc = std::max(acc, v);
    else if (q == 1.0)
      acc += v;
    else
      acc += std::pow(v, q);
  }
  double result() const {
    if (std::isinf(q) || q == 1.0) return acc;
    return std::pow(acc, 1.0 / q);
  }
};

}  // namespace

void ModNormSpec::validate() const {
  if (!(p >= 1.0)) throw std::invalid_argument("ModNormSpec: p must be >= 1");
  if (!(q >= 1.0)) throw std::invalid_argument("ModNormSpec: q must be >= 1");
  if (!std::isfinite(s)) throw std::invalid_argument("ModNormSpec: s must be finite");
}

double bump_profile(double x) {
  const double a = std::abs(x);
  if (a <= 0.5) return 1.0;
  if (a >= 1.0) return 0.0;
  const double up = std::exp(-1.0 / (1.0 - a));
  const double down = std::exp(-1.0 / (a - 0.5));
  return up / (up + down);
}

UniformPartition::UniformPartition(SpectralGrid g, int k_max) : grid_(std::move(g)), k_max_(k_max) {}

UniformPartition UniformPartition::build(const SpectralGrid& grid, int k_max) {
  if (k_max < 0 || static_cast<double>(k_max) < grid.max_frequency())
    throw std::invalid_argument("UniformPartition: k_max does not cover the frequency lattice");
  UniformPartition part(grid, k_max);
  const int n = grid.points_per_axis();
  const int cells = 2 * k_max + 1;
  std::vector<double> rho(static_cast<std::size_t>(cells) * n);
  std::vector<double> total(n, 0.0);
  for (int c = 0; c < cells; ++c) {
    for (int s = 0; s < n; ++s) {
      const double v = bump_profile(grid.frequency(s) - (c - k_max));
      rho[static_cast<std::size_t>(c) * n + s] = v;
      total[s] += v;
    }
  }
  for (int s = 0; s < n; ++s)
    if (!(total[s] > 0.0))
      throw std::invalid_argument("UniformPartition: lattice point not covered by any cell");
  part.table_.resize(rho.size());
  part.support_.resize(cells);
  for (int c = 0; c < cells; ++c) {
    for (int s = 0; s < n; ++s) {
      const std::size_t i = static_cast<std::size_t>(c) * n + s;
      part.table_[i] = rho[i] / total[s];
      if (part.table_[i] != 0.0) part.support_[c].push_back(s);
    }
  }
  return part;
}

UniformPartition UniformPartition::covering(const SpectralGrid& grid) {
  return build(grid, static_cast<int>(std::ceil(grid.max_frequency())));
}

double UniformPartition::value(std::span<const int> k, std::span<const int> idx) const {
  double v = 1.0;
  for (int a = 0; a < grid_.dim(); ++a) {
    if (std::abs(k[a]) > k_max_) return 0.0;
    v *= axis_value(k[a], idx[a]);
  }
  return v;
}

std::vector<double> UniformPartition::symbol(std::span<const int> k) const {
  std::vector<double> out(grid_.size());
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    auto idx = grid_.unflatten(i);
    out[i] = value(k, std::span<const int>(idx.data(), grid_.dim()));
  }
  return out;
}

std::vector<std::array<int, SpectralGrid::kMaxDim>> UniformPartition::cells() const {
  std::vector<std::array<int, SpectralGrid::kMaxDim>> out;
  const int d = grid_.dim();
  const int side = 2 * k_max_ + 1;
  std::size_t total = 1;
  for (int a = 0; a < d; ++a) total *= static_cast<std::size_t>(side);
  out.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    std::array<int, SpectralGrid::kMaxDim> k{};
    std::size_t r = i;
    for (int a = d - 1; a >= 0; --a) {
      k[a] = static_cast<int>(r % side) - k_max_;
      r /= side;
    }
    out.push_back(k);
  }
  return out;
}

std::span<const int> UniformPartition::axis_support(int k_axis) const {
  if (std::abs(k_axis) > k_max_) return {};
  return support_[static_cast<std::size_t>(k_axis + k_max_)];
}

namespace {

void check_cell(const UniformPartition& part, std::span<const int> k) {
  for (int a = 0; a < part.grid().dim(); ++a)
    if (std::abs(k[a]) > part.k_max()) throw std::out_of_range("block index outside k_max");
}

// Writes sigma_k * F into block (zero elsewhere is assumed) and returns
// whether any entry is non-zero. Entries written are appended to touched.
bool fill_block(const UniformPartition& part, const GridFunction& F, std::span<const int> k,
                GridFunction& block, std::vector<std::size_t>& touched) {
  const auto& g = part.grid();
  const int d = g.dim();
  std::array<std::span<const int>, SpectralGrid::kMaxDim> sup{};
  for (int a = 0; a < d; ++a) {
    sup[a] = part.axis_support(k[a]);
    if (sup[a].empty()) return false;
  }
  bool any = false;
  std::array<std::size_t, SpectralGrid::kMaxDim> pos{};
  while (true) {
    std::array<int, SpectralGrid::kMaxDim> idx{};
    for (int a = 0; a < d; ++a) idx[a] = sup[a][pos[a]];
    const std::size_t flat = g.flatten(std::span<const int>(idx.data(), d));
    const Complex v = part.value(k, std::span<const int>(idx.data(), d)) * F.values[flat];
    block.values[flat] = v;
    touched.push_back(flat);
    any = any || v != Complex{};
    int a = d - 1;
    while (a >= 0 && ++pos[a] == sup[a].size()) pos[a--] = 0;
    if (a < 0) break;
  }
  return any;
}

}  // namespace

GridFunction block_project(const GridFunction& f, const UniformPartition& part,
                           std::span<const int> k) {
  check_cell(part, k);
  if (!f.grid.same_as(part.grid())) throw std::invalid_argument("block_project: grid mismatch");
  const GridFunction F = f.side == Side::physical ? forward_transform(f) : f;
  GridFunction block(F.grid, Side::frequency);
  std::vector<std::size_t> touched;
  fill_block(part, F, k, block, touched);
  return inverse_transform(block);
}

double mod_norm_decomp(const GridFunction& f, const UniformPartition& part,
                       const ModNormSpec& spec) {
  spec.validate();
  if (f.values.empty()) throw std::invalid_argument("mod_norm_decomp: empty grid");
  if (!f.grid.same_as(part.grid())) throw std::invalid_argument("mod_norm_decomp: grid mismatch");
  for (const auto& v : f.values)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::invalid_argument("mod_norm_decomp: non-finite values");
  const GridFunction F = f.side == Side::physical ? forward_transform(f) : f;
  const int d = f.grid.dim();
  GridFunction block(F.grid, Side::frequency);
  std::vector<std::size_t> touched;
  LqAccumulator acc{spec.q};
  for (const auto& k : part.cells()) {
    std::span<const int> ks(k.data(), d);
    touched.clear();
    const bool any = fill_block(part, F, ks, block, touched);
    if (any) {
      const auto phys = inverse_transform(block);
      acc.add(weight_of(ks, spec.s) * lp_norm(phys, spec.p));
    }
    for (auto i : touched) block.values[i] = Complex{};
  }
  return acc.result();
}

STFTPlan STFTPlan::gaussian(const SpectralGrid& grid, int x_stride, int y_oversample) {
  const double c = std::pow(std::numbers::pi, -0.25 * grid.dim());
  auto g = GridFunction::sample(grid, [c](std::span<const double> x) {
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    return Complex(c * std::exp(-0.5 * r2));
  });
  return with_window(std::move(g), x_stride, y_oversample);
}

STFTPlan STFTPlan::with_window(GridFunction window, int x_stride, int y_oversample) {
  if (window.side != Side::physical) throw std::invalid_argument("STFTPlan: window must be physical");
  const int n = window.grid.points_per_axis();
  if (x_stride < 1 || n % x_stride != 0)
    throw std::invalid_argument("STFTPlan: x_stride must divide points_per_axis");
  if (y_oversample < 1 || (y_oversample & (y_oversample - 1)) != 0)
    throw std::invalid_argument("STFTPlan: y_oversample must be a power of two");
  const double norm = lp_norm(window, 2.0);
  if (!(norm > 0.0)) throw std::invalid_argument("STFTPlan: zero window");
  window *= 1.0 / norm;
  return STFTPlan{std::move(window), x_stride, y_oversample};
}

STFTPlan STFTPlan::refined() const {
  STFTPlan p = *this;
  if (p.x_stride > 1) p.x_stride /= 2;
  p.y_oversample *= 2;
  return p;
}

Complex stft(const GridFunction& f, const STFTPlan& plan, std::span<const double> x,
             std::span<const double> y) {
  const auto& g = f.grid;
  if (f.side != Side::physical || !g.same_as(plan.window.grid))
    throw std::invalid_argument("stft: f must be physical and share the window grid");
  const int d = g.dim();
  const int n = g.points_per_axis();
  const double h = g.spacing();
  const double ymax = std::numbers::pi / h;
  if (static_cast<int>(x.size()) != d || static_cast<int>(y.size()) != d)
    throw std::invalid_argument("stft: point dimension mismatch");
  std::array<int, SpectralGrid::kMaxDim> x0{};
  for (int a = 0; a < d; ++a) {
    const double pos = (x[a] + g.half_width()) / h;
    const double r = std::round(pos);
    if (std::abs(pos - r) > 1e-9 || r < 0 || r >= n) throw std::out_of_range("stft: x not a sampled grid point");
    x0[a] = static_cast<int>(r);
    if (y[a] < -ymax || y[a] >= ymax) throw std::out_of_range("stft: y outside the sampled band");
  }
  Complex acc{};
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto t = g.unflatten(i);
    std::array<int, SpectralGrid::kMaxDim> w{};
    double phase = 0.0;
    for (int a = 0; a < d; ++a) {
      w[a] = ((t[a] - x0[a] + n / 2) % n + n) % n;
      phase += y[a] * g.coordinate(t[a]);
    }
    const Complex gw = plan.window.values[g.flatten(std::span<const int>(w.data(), d))];
    acc += f.values[i] * std::conj(gw) * std::polar(1.0, -phase);
  }
  return acc * g.cell_volume() * std::pow(2.0 * std::numbers::pi, -0.5 * d);
}

StftSamples stft_samples(const GridFunction& f, const STFTPlan& plan) {
  const auto& g = f.grid;
  if (f.side != Side::physical || !g.same_as(plan.window.grid))
    throw std::invalid_argument("stft: f must be physical and share the window grid");
  const int d = g.dim();
  const int n = g.points_per_axis();
  const int pad = plan.y_oversample;
  const SpectralGrid big(d, n * pad, g.half_width() * pad);
  const int nx = n / plan.x_stride;

  StftSamples out;
  out.x_count = 1;
  for (int a = 0; a < d; ++a) out.x_count *= static_cast<std::size_t>(nx);
  out.y_count = big.size();
  out.x_cell = std::pow(plan.x_stride * g.spacing(), d);
  out.y_cell = big.dual_cell_volume();
  out.magnitude.resize(out.x_count * out.y_count);
  out.y_weight_norm.resize(out.y_count);
  for (std::size_t j = 0; j < big.size(); ++j) {
    auto xi = big.frequency_vector(j);
    double r2 = 0.0;
    for (int a = 0; a < d; ++a) r2 += xi[a] * xi[a];
    out.y_weight_norm[j] = std::sqrt(r2);
  }

  const int offset = (n * pad - n) / 2;
  GridFunction prod(big, Side::physical);
  for (std::size_t xi = 0; xi < out.x_count; ++xi) {
    std::array<int, SpectralGrid::kMaxDim> x0{};
    std::size_t r = xi;
    for (int a = d - 1; a >= 0; --a) {
      x0[a] = static_cast<int>(r % nx) * plan.x_stride;
      r /= nx;
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      auto t = g.unflatten(i);
      std::array<int, SpectralGrid::kMaxDim> w{}, e{};
      for (int a = 0; a < d; ++a) {
        w[a] = ((t[a] - x0[a] + n / 2) % n + n) % n;
        e[a] = t[a] + offset;
      }
      const Complex gw = plan.window.values[g.flatten(std::span<const int>(w.data(), d))];
      prod.values[big.flatten(std::span<const int>(e.data(), d))] = f.values[i] * std::conj(gw);
    }
    const auto V = forward_transform(prod);
    double* row = out.magnitude.data() + xi * out.y_count;
    for (std::size_t j = 0; j < out.y_count; ++j) row[j] = std::abs(V.values[j]);
  }
  return out;
}

double mod_norm_stft_value(const StftSamples& v, const ModNormSpec& spec) {
  spec.validate();
  LqAccumulator outer{spec.q};
  for (std::size_t j = 0; j < v.y_count; ++j) {
    double inner;
    if (std::isinf(spec.p)) {
      inner = 0.0;
      for (std::size_t i = 0; i < v.x_count; ++i) inner = std::max(inner, v.magnitude[i * v.y_count + j]);
    } else {
      double s = 0.0;
      for (std::size_t i = 0; i < v.x_count; ++i) {
        const double m = v.magnitude[i * v.y_count + j];
        s += spec.p == 2.0 ? m * m : (spec.p == 1.0 ? m : std::pow(m, spec.p));
      }
      inner = spec.p == 1.0 ? s * v.x_cell : std::pow(s * v.x_cell, 1.0 / spec.p);
    }
    double w = 1.0;
    if (spec.s != 0.0) w = std::pow(1.0 + v.y_weight_norm[j] * v.y_weight_norm[j], 0.5 * spec.s);
    const double cell = std::isinf(spec.q) ? 1.0 : std::pow(v.y_cell, 1.0 / spec.q);
    outer.add(inner * w * cell);
  }
  return outer.result();
}

StftNorm mod_norm_stft(const GridFunction& f, const STFTPlan& plan, const ModNormSpec& spec,
                       bool check_resolution) {
  StftNorm out;
  out.value = mod_norm_stft_value(stft_samples(f, plan), spec);
  out.refined_value = out.value;
  if (check_resolution) {
    out.refined_value = mod_norm_stft_value(stft_samples(f, plan.refined()), spec);
    const double scale = std::max(std::abs(out.value), std::abs(out.refined_value));
    out.resolution_ok = scale == 0.0 || std::abs(out.value - out.refined_value) < 0.01 * scale;
  }
  return out;
}

double algebra_defect(const GridFunction& f, const GridFunction& g, const UniformPartition& part,
                      double p) {
  if (f.side != Side::physical || g.side != Side::physical || !f.grid.same_as(g.grid))
    throw std::invalid_argument("algebra_defect: inputs must be physical on one grid");
  const ModNormSpec spec{p, 1.0, 0.0};
  const double nf = mod_norm_decomp(f, part, spec);
  const double ng = mod_norm_decomp(g, part, spec);
  if (!(nf > 0.0) || !(ng > 0.0)) throw std::domain_error("algebra_defect: zero-norm input");
  GridFunction fg(f.grid, Side::physical);
  for (std::size_t i = 0; i < fg.values.size(); ++i) fg.values[i] = f.values[i] * g.values[i];
  return mod_norm_decomp(fg, part, spec) / (nf * ng);
}

std::vector<GridFunction> envelope_corpus(const SpectralGrid& grid, int count, int max_mode,
                                          double width, unsigned long long seed) {
  if (count < 1) throw std::invalid_argument("envelope_corpus: count must be >= 1");
  if (max_mode < 0 || !(width > 0.0)) throw std::invalid_argument("envelope_corpus: bad mode range or width");
  const int d = grid.dim();
  const int side = 2 * max_mode + 1;
  std::size_t modes = 1;
  for (int a = 0; a < d; ++a) modes *= static_cast<std::size_t>(side);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<GridFunction> out;
  for (int f = 0; f < count; ++f) {
    std::vector<Complex> c(modes);
    for (auto& v : c) {
      const double re = normal(rng);
      v = Complex(re, normal(rng));
    }
    out.push_back(GridFunction::sample(grid, [&](std::span<const double> x) {
      double r2 = 0.0;
      for (double v : x) r2 += v * v;
      Complex acc{};
      for (std::size_t i = 0; i < modes; ++i) {
        std::size_t rem = i;
        double phase = 0.0;
        for (int a = d - 1; a >= 0; --a) {
          phase += (static_cast<int>(rem % side) - max_mode) * x[a];
          rem /= side;
        }
        acc += c[i] * std::polar(1.0, phase);
      }
      return acc * std::exp(-0.5 * r2 / (width * width));
    }));
  }
  return out;
}

double fourier_lebesgue_norm(const GridFunction& f, double p) {
  const GridFunction F = f.side == Side::physical ? forward_transform(f) : f;
  return lp_norm(F, p);
}

}  // namespace modheat
