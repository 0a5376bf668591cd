#include "modheat/spectral_grid.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "fft.hpp"

namespace modheat {

namespace {

constexpr double kPi = std::numbers::pi;

// Parity of the sum of per-axis indices of a flat index.
bool odd_index_sum(const SpectralGrid& g, std::size_t flat) {
  auto idx = g.unflatten(flat);
  int s = 0;
  for (int a = 0; a < g.dim(); ++a) s += idx[a];
  return (s & 1) != 0;
}

void require_side(const GridFunction& f, Side s, const char* what) {
  if (f.side != s) throw std::invalid_argument(std::string(what) + ": wrong side");
  if (f.values.size() != f.grid.size())
    throw std::invalid_argument(std::string(what) + ": value array length does not match grid");
}

}  // namespace

SpectralGrid::SpectralGrid(int dim, int points_per_axis, double half_width)
    : dim_(dim), n_(points_per_axis), half_width_(half_width) {
  if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("SpectralGrid: dim must be 1..3");
  if (points_per_axis < 4 || points_per_axis % 2 != 0)
    throw std::invalid_argument("SpectralGrid: points_per_axis must be even and >= 4");
  if (!(half_width > 0.0) || !std::isfinite(half_width))
    throw std::invalid_argument("SpectralGrid: half_width must be positive");
  size_ = 1;
  for (int a = 0; a < dim; ++a) size_ *= static_cast<std::size_t>(n_);
  plans_ = std::make_shared<const detail::FftPlans>(dim, n_);
}

double SpectralGrid::freq_spacing() const { return kPi / half_width_; }

double SpectralGrid::cell_volume() const { return std::pow(spacing(), dim_); }

double SpectralGrid::dual_cell_volume() const { return std::pow(freq_spacing(), dim_); }

std::array<int, SpectralGrid::kMaxDim> SpectralGrid::unflatten(std::size_t flat) const {
  std::array<int, kMaxDim> idx{};
  for (int a = dim_ - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % static_cast<std::size_t>(n_));
    flat /= static_cast<std::size_t>(n_);
  }
  return idx;
}

std::size_t SpectralGrid::flatten(std::span<const int> idx) const {
  std::size_t flat = 0;
  for (int a = 0; a < dim_; ++a) flat = flat * static_cast<std::size_t>(n_) + idx[a];
  return flat;
}

std::array<double, SpectralGrid::kMaxDim> SpectralGrid::point(std::size_t flat) const {
  auto idx = unflatten(flat);
  std::array<double, kMaxDim> x{};
  for (int a = 0; a < dim_; ++a) x[a] = coordinate(idx[a]);
  return x;
}

std::array<double, SpectralGrid::kMaxDim> SpectralGrid::frequency_vector(std::size_t flat) const {
  auto idx = unflatten(flat);
  std::array<double, kMaxDim> xi{};
  for (int a = 0; a < dim_; ++a) xi[a] = frequency(idx[a]);
  return xi;
}

double SpectralGrid::max_frequency() const { return (n_ / 2) * freq_spacing(); }

bool SpectralGrid::same_as(const SpectralGrid& o) const {
  return dim_ == o.dim_ && n_ == o.n_ && half_width_ == o.half_width_;
}

GridFunction::GridFunction(SpectralGrid g, Side s)
    : grid(std::move(g)), values(grid.size()), side(s) {}

GridFunction::GridFunction(SpectralGrid g, std::vector<Complex> v, Side s)
    : grid(std::move(g)), values(std::move(v)), side(s) {
  if (values.size() != grid.size())
    throw std::invalid_argument("GridFunction: value array length does not match grid");
}

GridFunction GridFunction::sample(const SpectralGrid& g,
                                  const std::function<Complex(std::span<const double>)>& fn) {
  GridFunction f(g, Side::physical);
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto x = g.point(i);
    f.values[i] = fn(std::span<const double>(x.data(), g.dim()));
  }
  return f;
}

GridFunction& GridFunction::operator*=(Complex c) {
  for (auto& v : values) v *= c;
  return *this;
}

GridFunction& GridFunction::operator+=(const GridFunction& other) {
  if (!grid.same_as(other.grid) || side != other.side || values.size() != other.values.size())
    throw std::invalid_argument("GridFunction: mismatched operands");
  for (std::size_t i = 0; i < values.size(); ++i) values[i] += other.values[i];
  return *this;
}

GridFunction operator*(Complex c, GridFunction f) {
  f *= c;
  return f;
}

GridFunction operator+(GridFunction a, const GridFunction& b) {
  a += b;
  return a;
}

GridFunction operator-(GridFunction a, const GridFunction& b) {
  a += Complex(-1.0) * b;
  return a;
}

// With x_j = -L + j h and xi = (pi/L)(s - N/2), e^{-i x_j xi} factors into
// (-1)^{s - N/2} * (-1)^j * e^{-2 pi i s j / N}, so the natural ordering falls
// out of a plain DFT with alternating signs on both sides.
GridFunction forward_transform(const GridFunction& f) {
  require_side(f, Side::physical, "forward_transform");
  const auto& g = f.grid;
  std::vector<Complex> in(f.values);
  for (std::size_t i = 0; i < in.size(); ++i)
    if (odd_index_sum(g, i)) in[i] = -in[i];
  GridFunction out(g, Side::frequency);
  g.plans().forward.execute(in, out.values);
  const double scale = g.cell_volume() * std::pow(2.0 * kPi, -0.5 * g.dim());
  const bool global_flip = ((g.dim() * (g.points_per_axis() / 2)) & 1) != 0;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    const bool flip = odd_index_sum(g, i) != global_flip;
    out.values[i] *= flip ? -scale : scale;
  }
  return out;
}

GridFunction inverse_transform(const GridFunction& F) {
  require_side(F, Side::frequency, "inverse_transform");
  const auto& g = F.grid;
  const bool global_flip = ((g.dim() * (g.points_per_axis() / 2)) & 1) != 0;
  std::vector<Complex> in(F.values);
  for (std::size_t i = 0; i < in.size(); ++i)
    if (odd_index_sum(g, i) != global_flip) in[i] = -in[i];
  GridFunction out(g, Side::physical);
  g.plans().backward.execute(in, out.values);
  const double scale = g.dual_cell_volume() * std::pow(2.0 * kPi, -0.5 * g.dim());
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] *= odd_index_sum(g, i) ? -scale : scale;
  return out;
}

double fractional_symbol(std::span<const double> xi, double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("fractional_symbol: beta must be positive");
  double r2 = 0.0;
  for (double v : xi) r2 += v * v;
  if (r2 == 0.0) return 0.0;
  return std::pow(r2, 0.5 * beta);
}

std::vector<Complex> sample_symbol(const SpectralGrid& grid, const Multiplier& m) {
  std::vector<Complex> sym(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    auto xi = grid.frequency_vector(i);
    sym[i] = m(std::span<const double>(xi.data(), grid.dim()));
    if (!std::isfinite(sym[i].real()) || !std::isfinite(sym[i].imag()))
      throw std::invalid_argument("multiplier is not finite at a lattice point");
  }
  return sym;
}

GridFunction apply_symbol(const GridFunction& f, std::span<const Complex> symbol) {
  if (symbol.size() != f.grid.size())
    throw std::invalid_argument("apply_symbol: symbol length does not match grid");
  for (const auto& v : symbol)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
      throw std::invalid_argument("multiplier is not finite at a lattice point");
  GridFunction F = f.side == Side::physical ? forward_transform(f) : f;
  for (std::size_t i = 0; i < F.values.size(); ++i) F.values[i] *= symbol[i];
  return f.side == Side::physical ? inverse_transform(F) : F;
}

GridFunction apply_multiplier(const GridFunction& f, const Multiplier& m) {
  return apply_symbol(f, sample_symbol(f.grid, m));
}

double lp_norm(std::span<const Complex> values, double cell, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (const auto& v : values) m = std::max(m, std::abs(v));
    return m;
  }
  double s = 0.0;
  if (p == 2.0) {
    for (const auto& v : values) s += std::norm(v);
    return std::sqrt(s * cell);
  }
  if (p == 1.0) {
    for (const auto& v : values) s += std::abs(v);
    return s * cell;
  }
  for (const auto& v : values) s += std::pow(std::abs(v), p);
  return std::pow(s * cell, 1.0 / p);
}

double lp_norm(const GridFunction& f, double p) {
  const double cell =
      f.side == Side::physical ? f.grid.cell_volume() : f.grid.dual_cell_volume();
  return lp_norm(f.values, cell, p);
}

double boundary_magnitude(const GridFunction& f, double layer) {
  const auto& g = f.grid;
  const double edge = g.half_width() * (1.0 - layer);
  double m = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto x = g.point(i);
    bool outer = false;
    for (int a = 0; a < g.dim(); ++a) outer = outer || std::abs(x[a]) >= edge;
    if (outer) m = std::max(m, std::abs(f.values[i]));
  }
  return m;
}

namespace {
int padded_points(int n, int order) {
  int m = ((order + 1) * n + 1) / 2;
  if (m % 2) ++m;
  return std::max(m, n);
}
}  // namespace

Dealiaser::Dealiaser(const SpectralGrid& grid, int order)
    : grid_(grid),
      padded_(grid.dim(), padded_points(grid.points_per_axis(), order), grid.half_width()),
      order_(order) {
  if (order < 1) throw std::invalid_argument("Dealiaser: order must be >= 1");
}

GridFunction Dealiaser::to_padded_physical(const GridFunction& spectrum) const {
  require_side(spectrum, Side::frequency, "Dealiaser");
  const int n = grid_.points_per_axis();
  const int m = padded_.points_per_axis();
  const int d = grid_.dim();
  GridFunction big(padded_, Side::frequency);
  std::array<int, SpectralGrid::kMaxDim> dst{};
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    auto src = grid_.unflatten(i);
    int nyquist_axes = 0;
    for (int a = 0; a < d; ++a) {
      dst[a] = src[a] + (m - n) / 2;
      if (src[a] == 0) ++nyquist_axes;
    }
    const Complex v = spectrum.values[i];
    if (nyquist_axes == 0) {
      big.values[padded_.flatten(std::span<const int>(dst.data(), d))] += v;
      continue;
    }
    // Split each Nyquist component evenly between -N/2 and +N/2.
    const double w = std::ldexp(1.0, -nyquist_axes);
    for (int mask = 0; mask < (1 << d); ++mask) {
      auto t = dst;
      bool ok = true;
      for (int a = 0; a < d; ++a) {
        if (mask & (1 << a)) {
          if (src[a] != 0) { ok = false; break; }
          t[a] += n;
        }
      }
      if (ok) big.values[padded_.flatten(std::span<const int>(t.data(), d))] += w * v;
    }
  }
  return inverse_transform(big);
}

GridFunction Dealiaser::from_padded_physical(const GridFunction& padded) const {
  require_side(padded, Side::physical, "Dealiaser");
  if (!padded.grid.same_as(padded_)) throw std::invalid_argument("Dealiaser: not on padded grid");
  const int n = grid_.points_per_axis();
  const int m = padded_.points_per_axis();
  const int d = grid_.dim();
  auto big = forward_transform(padded);
  GridFunction out(grid_, Side::frequency);
  std::array<int, SpectralGrid::kMaxDim> src{};
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    auto dst = grid_.unflatten(i);
    bool nyquist = false;
    for (int a = 0; a < d; ++a) {
      src[a] = dst[a] + (m - n) / 2;
      nyquist = nyquist || dst[a] == 0;
    }
    out.values[i] = nyquist ? Complex{} : big.values[padded_.flatten(std::span<const int>(src.data(), d))];
  }
  return out;
}

GridFunction Dealiaser::power(const GridFunction& spectrum, int k) const {
  if (k > order_) throw std::invalid_argument("Dealiaser: power exceeds dealiasing order");
  auto u = to_padded_physical(spectrum);
  GridFunction prod(padded_, Side::physical);
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    Complex acc = u.values[i];
    for (int j = 1; j < k; ++j) acc *= u.values[i];
    prod.values[i] = acc;
  }
  return from_padded_physical(prod);
}

std::string grid_header_json(const SpectralGrid& g) {
  nlohmann::ordered_json j;
  j["dim"] = g.dim();
  j["points_per_axis"] = g.points_per_axis();
  j["half_width"] = g.half_width();
  return j.dump();
}

SpectralGrid grid_from_header_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "dim" && it.key() != "points_per_axis" && it.key() != "half_width")
      throw std::invalid_argument("grid header: unknown key '" + it.key() + "'");
  return SpectralGrid(j.at("dim").get<int>(), j.at("points_per_axis").get<int>(),
                      j.at("half_width").get<double>());
}

void write_csv(std::ostream& os, const GridFunction& f) {
  char buf[96];
  os << "index,re,im\n";
  for (std::size_t i = 0; i < f.values.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, f.values[i].real(), f.values[i].imag());
    os << buf;
  }
}

GridFunction read_csv(std::istream& is, const SpectralGrid& g, Side side) {
  std::string line;
  if (!std::getline(is, line) || line != "index,re,im")
    throw std::invalid_argument("read_csv: missing header row");
  GridFunction f(g, side);
  std::size_t count = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::size_t idx;
    double re, im;
    char c1, c2;
    if (!(row >> idx >> c1 >> re >> c2 >> im) || c1 != ',' || c2 != ',')
      throw std::invalid_argument("read_csv: malformed row '" + line + "'");
    if (idx >= g.size()) throw std::invalid_argument("read_csv: index out of range");
    f.values[idx] = {re, im};
    ++count;
  }
  if (count != g.size()) throw std::invalid_argument("read_csv: value array length does not match grid");
  return f;
}

void write_binary(std::ostream& os, const GridFunction& f) {
  const std::uint64_t n = f.values.size();
  os.write(reinterpret_cast<const char*>(&n), sizeof n);
  os.write(reinterpret_cast<const char*>(f.values.data()),
           static_cast<std::streamsize>(n * sizeof(Complex)));
}

GridFunction read_binary(std::istream& is, const SpectralGrid& g, Side side) {
  std::uint64_t n = 0;
  is.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!is || n != g.size()) throw std::invalid_argument("read_binary: value array length does not match grid");
  GridFunction f(g, side);
  is.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(n * sizeof(Complex)));
  if (!is) throw std::invalid_argument("read_binary: truncated stream");
  return f;
}

}  // namespace modheat
