#include "modheat/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include "modheat/baselines.hpp"
#include "modheat/hermite.hpp"
#include "modheat/modulation.hpp"
#include "modheat/torus.hpp"

#ifndef MODHEAT_VERSION
#define MODHEAT_VERSION "unknown"
#endif

namespace modheat::experiments {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

// Reads one JSON object, remembering which keys were consumed so that
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(where() + "expected an object");
  }

  bool has(const std::string& key) const { return j_->contains(key); }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const json* v = take(key);
    if (!v) return require(key, fallback);
    if (!v->is_number()) throw ConfigError(field(key) + ": expected a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) throw ConfigError(field(key) + ": must be finite");
    return x;
  }

  // A number or the string "inf".
  double exponent(const std::string& key, double fallback) {
    const json* v = j_->contains(key) ? &j_->at(key) : nullptr;
    if (v && v->is_string()) {
      take(key);
      if (v->get<std::string>() != "inf") throw ConfigError(field(key) + ": expected a number or \"inf\"");
      return kInf;
    }
    return number(key, fallback);
  }

  double positive(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const double x = number(key, fallback);
    if (!(x > 0.0)) throw ConfigError(field(key) + ": must be positive");
    return x;
  }

  long integer(const std::string& key, std::optional<long> fallback, long min_value) {
    const json* v = take(key);
    long x = 0;
    if (!v) {
      if (!fallback) throw ConfigError(field(key) + ": required");
      x = *fallback;
    } else {
      if (!v->is_number_integer()) throw ConfigError(field(key) + ": expected an integer");
      x = v->get<long>();
    }
    if (x < min_value) throw ConfigError(field(key) + ": must be >= " + std::to_string(min_value));
    return x;
  }

  std::string text(const std::string& key, const std::string& fallback, const std::vector<std::string>& allowed) {
    const json* v = take(key);
    std::string s = fallback;
    if (v) {
      if (!v->is_string()) throw ConfigError(field(key) + ": expected a string");
      s = v->get<std::string>();
    }
    if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
      std::string msg = field(key) + ": must be one of";
      for (const auto& a : allowed) msg += " '" + a + "'";
      throw ConfigError(msg);
    }
    return s;
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback, bool positive_only = true) {
    const json* v = take(key);
    if (!v) return fallback;
    if (!v->is_array() || v->empty()) throw ConfigError(field(key) + ": expected a non-empty array of numbers");
    std::vector<double> out;
    for (const auto& e : *v) {
      if (!e.is_number()) throw ConfigError(field(key) + ": expected a non-empty array of numbers");
      const double x = e.get<double>();
      if (!std::isfinite(x) || (positive_only && !(x > 0.0)))
        throw ConfigError(field(key) + ": entries must be " + (positive_only ? "positive" : "finite"));
      out.push_back(x);
    }
    return out;
  }

  Section child(const std::string& key) {
    static const json empty = json::object();
    const json* v = take(key);
    return Section(v ? *v : empty, field(key));
  }

  std::vector<Section> children(const std::string& key) {
    const json* v = take(key);
    std::vector<Section> out;
    if (!v) return out;
    if (!v->is_array()) throw ConfigError(field(key) + ": expected an array of objects");
    for (std::size_t i = 0; i < v->size(); ++i) out.emplace_back((*v)[i], field(key) + "[" + std::to_string(i) + "]");
    return out;
  }

  void finish() const {
    for (const auto& [key, value] : j_->items())
      if (!used_.count(key)) throw ConfigError("unknown key '" + field(key) + "'");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json* take(const std::string& key) {
    used_.insert(key);
    const auto it = j_->find(key);
    return it == j_->end() ? nullptr : &*it;
  }
  double require(const std::string& key, std::optional<double> fallback) const {
    if (!fallback) throw ConfigError(field(key) + ": required");
    return *fallback;
  }
  std::string where() const { return path_.empty() ? "config: " : path_ + ": "; }

  const json* j_;
  std::string path_;
  std::set<std::string> used_;
};

SpectralGrid read_grid(Section s, int dim, int points, double half_width) {
  const int d = static_cast<int>(s.integer("dim", dim, 1));
  const int n = static_cast<int>(s.integer("points", points, 4));
  if (s.has("half_width") && s.has("half_width_pi"))
    throw ConfigError(s.field("half_width") + ": give either half_width or half_width_pi");
  const double L = s.has("half_width_pi") ? kPi * s.positive("half_width_pi") : s.positive("half_width", half_width);
  s.finish();
  try {
    return SpectralGrid(d, n, L);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(s.field("points") + ": " + e.what());
  }
}

ModNormSpec read_norm(Section s, ModNormSpec fallback) {
  ModNormSpec spec;
  spec.p = s.exponent("p", fallback.p);
  spec.q = s.exponent("q", fallback.q);
  spec.s = s.number("s", fallback.s);
  s.finish();
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(s.field("p") + ": " + e.what());
  }
  return spec;
}

GridFunction read_datum(Section s, const SpectralGrid& g, int k, double beta, double r, json& summary) {
  const auto kind = s.text("kind", "sinc", {"sinc", "gaussian", "unit_gaussian"});
  GridFunction u0(g, Side::physical);
  if (kind == "sinc") {
    const auto variant = s.text("variant", "corrected", {"corrected", "literal"});
    const double scale = s.positive("scale", 1.0);
    if (g.dim() != 1) throw ConfigError(s.field("kind") + ": the sinc datum is one-dimensional");
    u0 = sinc_datum(g, k, variant == "corrected", scale);
    summary["datum"] = {{"kind", kind}, {"variant", variant}, {"scale", scale}};
  } else if (kind == "gaussian") {
    double amp = 0.0;
    if (s.has("amplitude")) {
      amp = s.positive("amplitude");
    } else {
      amp = s.positive("threshold_factor", 1.001) * gaussian_datum_threshold(k, beta, r);
    }
    u0 = gaussian_datum(g, amp);
    summary["datum"] = {{"kind", kind}, {"amplitude", amp}};
  } else {
    const double amp = s.positive("amplitude", 1.0);
    const double width = s.positive("width", 1.0);
    u0 = GridFunction::sample(g, [amp, width](std::span<const double> x) {
      double r2 = 0.0;
      for (double v : x) r2 += v * v;
      return Complex(amp * std::exp(-0.5 * r2 / (width * width)));
    });
    summary["datum"] = {{"kind", kind}, {"amplitude", amp}, {"width", width}};
  }
  s.finish();
  return u0;
}

Verdict upper(std::string name, double value, double bound) {
  return {std::move(name), value, bound, bound - value, value <= bound};
}

Verdict lower(std::string name, double value, double bound) {
  return {std::move(name), value, bound, value - bound, value >= bound};
}

std::string join(std::initializer_list<std::string> parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : ",") + p;
  return out;
}

std::string label(const char* fmt, double a, double b, double c = 0.0) {
  char buf[128];
  std::snprintf(buf, sizeof buf, fmt, a, b, c);
  return buf;
}

std::vector<double> uniform_times(double t_max, long steps) {
  std::vector<double> t(static_cast<std::size_t>(steps) + 1);
  for (long i = 0; i <= steps; ++i) t[i] = t_max * static_cast<double>(i) / static_cast<double>(steps);
  return t;
}

// propagate ---------------------------------------------------------------

void cmd_propagate(Section& cfg, RunRecord& rec) {
  const auto grid = read_grid(cfg.child("grid"), 1, 512, 32.0);
  const double beta = cfg.positive("beta", 2.0);
  const auto times = cfg.numbers("times", {0.01, 0.1, 1.0, 10.0});
  const auto spec = read_norm(cfg.child("norm"), {2.0, 1.0, 0.0});
  auto corpus_cfg = cfg.child("corpus");
  const int count = static_cast<int>(corpus_cfg.integer("count", 10, 1));
  const int max_mode = static_cast<int>(corpus_cfg.integer("max_mode", 4, 0));
  const double width = corpus_cfg.positive("width", 2.0);
  corpus_cfg.finish();
  const double tol = cfg.positive("tolerance", 0.05);
  cfg.finish();

  const auto part = UniformPartition::covering(grid);
  const auto corpus = envelope_corpus(grid, count, max_mode, width, rec.seed);
  std::vector<double> base(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) { base[i] = mod_norm_decomp(corpus[i], part, spec); });
  for (std::size_t i = 0; i < base.size(); ++i)
    if (!(base[i] > 0.0)) throw ConfigError("corpus: member " + std::to_string(i) + " has zero norm");

  std::vector<std::vector<double>> ratio(times.size(), std::vector<double>(corpus.size()));
  parallel_for(times.size() * corpus.size(), [&](std::size_t job) {
    const std::size_t ti = job / corpus.size(), fi = job % corpus.size();
    ratio[ti][fi] = mod_norm_decomp(linear_propagate(corpus[fi], times[ti], beta), part, spec) / base[fi];
  });

  CsvTable rows{"propagate", "t,index,ratio", {}, 1, 3, true};
  CsvTable consts{"constants", "t,constant", {}, 1, 2, true};
  std::vector<double> c(times.size(), 0.0);
  for (std::size_t ti = 0; ti < times.size(); ++ti) {
    for (std::size_t fi = 0; fi < corpus.size(); ++fi) {
      rows.rows.push_back(join({format_double(times[ti]), std::to_string(fi), format_double(ratio[ti][fi])}));
      c[ti] = std::max(c[ti], ratio[ti][fi]);
    }
    consts.rows.push_back(join({format_double(times[ti]), format_double(c[ti])}));
  }
  const std::size_t first = static_cast<std::size_t>(std::min_element(times.begin(), times.end()) - times.begin());
  rec.verdicts.push_back(upper("uniform_bound", *std::max_element(c.begin(), c.end()), (1.0 + tol) * c[first]));

  // Semigroup on consecutive pairs of the sweep, first corpus member.
  double worst = 0.0;
  const double scale = lp_norm(corpus[0], kInf);
  for (std::size_t ti = 0; ti + 1 < times.size(); ++ti) {
    const auto two = linear_propagate(linear_propagate(corpus[0], times[ti], beta), times[ti + 1], beta);
    const auto one = linear_propagate(corpus[0], times[ti] + times[ti + 1], beta);
    worst = std::max(worst, lp_norm(two - one, kInf) / scale);
  }
  rec.verdicts.push_back(upper("semigroup", worst, 1e-12));

  rec.summary["constants"] = c;
  rec.summary["times"] = times;
  rec.tables = {std::move(rows), std::move(consts)};
}

// blowup ------------------------------------------------------------------

SolverConfig read_solver(Section s, double dt, double t_max) {
  SolverConfig c;
  c.dt = s.positive("dt", dt);
  c.t_max = s.positive("t_max", t_max);
  c.scheme = s.text("scheme", "etd1", {"etd1", "etd2"}) == "etd1" ? Scheme::etd1 : Scheme::etd2;
  c.threshold_factor = s.positive("threshold_factor", 1e6);
  c.blowup_threshold = s.has("blowup_threshold") ? s.positive("blowup_threshold") : 0.0;
  c.record_every = static_cast<int>(s.integer("record_every", 1, 1));
  s.finish();
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(s.field("dt") + ": " + e.what());
  }
  return c;
}

BlowupHypothesis read_hypothesis(Section s, double beta, int k, int d) {
  BlowupHypothesis h;
  h.beta = beta;
  h.k = k;
  h.d = d;
  h.r = s.positive("r", 1.0);
  const double threshold = std::pow(4.0 * std::pow(h.r, beta) * (k - 1) * std::numbers::e, 1.0 / (k - 1));
  h.gamma = s.positive("gamma", threshold);
  s.finish();
  return h;
}

void cmd_blowup(Section& cfg, RunRecord& rec) {
  const auto grid = read_grid(cfg.child("grid"), 1, 1024, 16.0 * kPi);
  const double beta = cfg.positive("beta", 2.0);
  const int k = static_cast<int>(cfg.integer("k", 2, 2));
  const auto h = read_hypothesis(cfg.child("hypothesis"), beta, k, grid.dim());
  HeatProblem problem{beta, k, read_datum(cfg.child("datum"), grid, k, beta, h.r, rec.summary)};
  problem.norm_spec = read_norm(cfg.child("norm"), {1.0, 1.0, 0.0});
  problem.source_sign = cfg.text("source_sign", "plus", {"plus", "minus"}) == "plus" ? 1.0 : -1.0;
  const auto solver = read_solver(cfg.child("solver"), 5e-4, 0.5);
  const auto expect = cfg.text("expect", "auto", {"auto", "blowup", "bounded"});
  const double slack = cfg.positive("horizon_slack", 2.0);
  const double bounded_factor = cfg.positive("bounded_factor", 2.0);
  auto wcfg = cfg.child("witness");
  const Certificate cert = certify_hypothesis(h, problem.u0);
  const double T = wcfg.positive("T", cert.horizon);
  const int i_max = static_cast<int>(wcfg.integer("i_max", 20, 1));
  wcfg.finish();
  cfg.finish();

  const auto trace = solve(problem, solver);
  const auto witness = divergence_witness(h, T, i_max);
  const bool want_blowup = expect == "blowup" || (expect == "auto" && cert.passed());

  json conds = json::array();
  for (const auto& v : cert.conditions)
    conds.push_back({{"name", v.name}, {"value", v.value}, {"bound", v.bound}, {"margin", v.margin}, {"pass", v.pass}});
  rec.summary["certificate"] = {{"passed", cert.passed()}, {"horizon", cert.horizon}, {"conditions", conds}};
  rec.summary["blowup_detected"] = trace.blowup_detected;
  rec.summary["overflow"] = trace.overflow;
  rec.summary["t_detect"] = trace.t_detect ? json(*trace.t_detect) : json(nullptr);
  rec.summary["step"] = trace.step;
  rec.summary["threshold"] = trace.threshold;
  rec.summary["outside_proven_range"] = trace.outside_proven_range;
  rec.summary["witness"] = {{"ratio", witness.ratio}, {"label", witness.label}, {"T", T}};

  if (want_blowup) {
    for (const auto& v : cert.conditions) rec.verdicts.push_back(v);
    const double bound = slack * cert.horizon;
    Verdict det = upper("detection_before_slack_horizon", trace.t_detect.value_or(solver.t_max), bound);
    det.pass = det.pass && trace.blowup_detected && *trace.t_detect < bound;
    rec.verdicts.push_back(det);
    rec.verdicts.push_back(lower("witness_ratio", witness.ratio, 1.0 - 1e-12));
  } else {
    const double peak = *std::max_element(trace.norms.begin(), trace.norms.end());
    rec.verdicts.push_back(upper("bounded_growth", peak / trace.norms.front(), bounded_factor));
    Verdict none = upper("no_detection", trace.blowup_detected ? 1.0 : 0.0, 0.0);
    rec.verdicts.push_back(none);
  }

  CsvTable tr{"trace", "t,norm_Mp1,norm_FL1,linf,blowup_flag", {}, 1, 2, true};
  std::ostringstream os;
  trace.write_csv(os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) tr.rows.push_back(line);
  CsvTable wt{"witness", "i,term,partial_sum", {}, 1, 3, true};
  for (std::size_t i = 0; i < witness.terms.size(); ++i)
    wt.rows.push_back(join({std::to_string(i + 1), format_double(witness.terms[i]), format_double(witness.partial_sums[i])}));
  rec.tables = {std::move(tr), std::move(wt)};
}

// picard ------------------------------------------------------------------

void cmd_picard(Section& cfg, RunRecord& rec) {
  const auto grid = read_grid(cfg.child("grid"), 1, 512, 16.0 * kPi);
  const double beta = cfg.positive("beta", 2.0);
  const int k = static_cast<int>(cfg.integer("k", 2, 2));
  const bool has_h = cfg.has("hypothesis");
  const auto h = read_hypothesis(cfg.child("hypothesis"), beta, k, grid.dim());
  HeatProblem problem{beta, k, read_datum(cfg.child("datum"), grid, k, beta, h.r, rec.summary)};
  problem.norm_spec = read_norm(cfg.child("norm"), {1.0, 1.0, 0.0});
  const double t_max = cfg.positive("t_max", 0.25);
  const long steps = cfg.integer("steps", 100, 2);
  const int depth = static_cast<int>(cfg.integer("depth", 6, 1));
  const double slack = cfg.positive("slack", baselines::kPicardSlack);
  const double window = cfg.positive("window_start", t_max / 10.0);
  const auto expect = cfg.text("expect", "none", {"none", "summable", "divergent"});
  const int ratio_from = static_cast<int>(cfg.integer("ratio_from_level", 3, 1));
  cfg.finish();

  const auto t = uniform_times(t_max, steps);
  const auto res = picard_terms(problem, depth, t);

  CsvTable tab{"picard", "level,iterate_index,sup_norm,ratio", {}, 1, 3, true};
  for (std::size_t j = 0; j < res.sup_norms.size(); ++j)
    tab.rows.push_back(join({std::to_string(j + 1), std::to_string(res.iterate_index[j]), format_double(res.sup_norms[j]),
                             j < res.ratios.size() ? format_double(res.ratios[j]) : std::string()}));
  rec.tables.push_back(std::move(tab));
  rec.summary["unstable"] = res.unstable;
  rec.summary["ratios"] = res.ratios;

  double tail_ratio = 0.0;
  for (std::size_t j = static_cast<std::size_t>(ratio_from - 1); j < res.ratios.size(); ++j)
    tail_ratio = std::max(tail_ratio, res.ratios[j]);
  if (expect == "summable") rec.verdicts.push_back(upper("series_ratio", tail_ratio, 1.0 - 1e-12));
  if (expect == "divergent") rec.verdicts.push_back(lower("series_ratio", tail_ratio, 1.0));

  if (has_h) {
    CsvTable dom{"domination", "level,iterate_index,max_envelope_ratio", {}, 1, 3, false};
    double worst = 0.0;
    bool negative = false;
    for (std::size_t j = 0; j < res.terms.size(); ++j) {
      double wl = 0.0;
      for (std::size_t n = 0; n < t.size(); ++n) {
        if (t[n] < window * (1.0 - 1e-12)) continue;
        for (std::size_t i = 0; i < grid.size(); ++i) {
          const auto xi = grid.frequency_vector(i);
          const double a = lower_bound_sequence(h, static_cast<int>(j) + 1, t[n],
                                                std::span<const double>(xi.data(), grid.dim()));
          if (a == 0.0) continue;
          const double u = res.terms[j][n].values[i].real();
          if (!(u > 0.0)) {
            negative = true;
            continue;
          }
          wl = std::max(wl, a / u);
        }
      }
      worst = std::max(worst, wl);
      dom.rows.push_back(join({std::to_string(j + 1), std::to_string(res.iterate_index[j]), format_double(wl)}));
    }
    rec.tables.push_back(std::move(dom));
    Verdict v = upper("lower_bound_domination", worst, slack);
    v.pass = v.pass && !negative;
    rec.verdicts.push_back(v);
    rec.summary["measured_slack"] = worst;
  }
}

// modnorm -----------------------------------------------------------------

void cmd_modnorm(Section& cfg, RunRecord& rec) {
  const auto grid = read_grid(cfg.child("grid"), 1, 256, 16.0);
  auto corpus_cfg = cfg.child("corpus");
  const long count = corpus_cfg.integer("count", 20, 0);
  if (count < 1) throw ConfigError(corpus_cfg.field("count") + ": corpus is empty");
  const int max_mode = static_cast<int>(corpus_cfg.integer("max_mode", 4, 0));
  const double width = corpus_cfg.positive("width", 2.0);
  corpus_cfg.finish();
  std::vector<ModNormSpec> specs;
  for (auto& s : cfg.children("specs")) specs.push_back(read_norm(std::move(s), {2.0, 1.0, 0.0}));
  if (specs.empty()) specs = {{2.0, 1.0, 0.0}, {2.0, 2.0, 0.0}};
  const double bracket = cfg.positive("equivalence_bracket", baselines::kStftDecompBracket);
  const double algebra_p = cfg.positive("algebra_p", 2.0);
  const int x_stride = static_cast<int>(cfg.integer("x_stride", 2, 1));
  cfg.finish();

  const auto part = UniformPartition::covering(grid);
  const STFTPlan plan = [&] {
    try {
      return STFTPlan::gaussian(grid, x_stride);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("x_stride: ") + e.what());
    }
  }();
  const auto corpus = envelope_corpus(grid, static_cast<int>(count), max_mode, width, rec.seed);

  struct Row {
    std::vector<double> dec, st, ref;
    std::vector<bool> ok;
    double l2 = 0.0, moyal = 0.0, defect = 0.0;
  };
  std::vector<Row> rows(corpus.size());
  parallel_for(corpus.size(), [&](std::size_t i) {
    Row& r = rows[i];
    for (const auto& s : specs) {
      r.dec.push_back(mod_norm_decomp(corpus[i], part, s));
      const auto n = mod_norm_stft(corpus[i], plan, s);
      r.st.push_back(n.value);
      r.ref.push_back(n.refined_value);
      r.ok.push_back(n.resolution_ok);
    }
    r.l2 = lp_norm(corpus[i], 2.0);
    r.moyal = mod_norm_stft(corpus[i], plan, {2.0, 2.0, 0.0}, false).value;
    r.defect = algebra_defect(corpus[i], corpus[i], part, algebra_p);
  });

  CsvTable tab{"modnorm", "index,p,q,s,decomp,stft,stft_refined,resolution_ok,ratio", {}, 1, 9, false};
  CsvTable alg{"algebra", "index,defect", {}, 1, 2, false};
  double worst_moyal = 0.0;
  bool resolution = true;
  std::vector<double> lo(specs.size(), kInf), hi(specs.size(), 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    for (std::size_t s = 0; s < specs.size(); ++s) {
      const double ratio = r.st[s] / r.dec[s];
      lo[s] = std::min(lo[s], ratio);
      hi[s] = std::max(hi[s], ratio);
      resolution = resolution && r.ok[s];
      tab.rows.push_back(join({std::to_string(i), format_double(specs[s].p), format_double(specs[s].q),
                               format_double(specs[s].s), format_double(r.dec[s]), format_double(r.st[s]),
                               format_double(r.ref[s]), r.ok[s] ? "1" : "0", format_double(ratio)}));
    }
    worst_moyal = std::max(worst_moyal, std::abs(r.moyal / r.l2 - 1.0));
    alg.rows.push_back(join({std::to_string(i), format_double(r.defect)}));
  }
  for (std::size_t s = 0; s < specs.size(); ++s) {
    const std::string name =
        label("estimator_equivalence[p=%g,q=%g,s=%g]", specs[s].p, specs[s].q, specs[s].s);
    rec.verdicts.push_back(upper(name, std::max(hi[s], 1.0 / lo[s]), bracket));
  }
  rec.verdicts.push_back(upper("moyal_identity", worst_moyal, 0.01));
  rec.summary["resolution_ok"] = resolution;
  double dmin = kInf, dmax = 0.0;
  for (const auto& r : rows) {
    dmin = std::min(dmin, r.defect);
    dmax = std::max(dmax, r.defect);
  }
  rec.summary["algebra_defect"] = {{"min", dmin}, {"max", dmax}, {"p", algebra_p}};
  rec.tables = {std::move(tab), std::move(alg)};
}

// hermite -----------------------------------------------------------------

void cmd_hermite(Section& cfg, RunRecord& rec) {
  auto bcfg = cfg.child("basis");
  const int dim = static_cast<int>(bcfg.integer("dim", 1, 1));
  const int K = static_cast<int>(bcfg.integer("degree_cap", 20, 0));
  const std::string cache = bcfg.text("cache_dir", "", {});
  bcfg.finish();
  const auto grid = read_grid(cfg.child("grid"), dim, 256, 16.0);
  if (grid.dim() != dim) throw ConfigError("grid.dim: must match basis.dim");
  auto fcfg = cfg.child("family");
  const int count = static_cast<int>(fcfg.integer("count", 4, 1));
  const int max_level = static_cast<int>(fcfg.integer("max_level", std::min(6, K), 0));
  fcfg.finish();
  if (max_level > K) throw ConfigError("family.max_level: exceeds basis.degree_cap");
  const auto betas = cfg.numbers("betas", {1.0, 2.0});
  const auto ps = cfg.numbers("ps", {1.0, 2.0, 4.0});
  const auto times = cfg.numbers("times", {0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1, 1.5, 2, 2.5, 3, 3.5, 4, 4.5, 5});
  const auto window = cfg.numbers("slope_window", {3.0, 5.0});
  if (window.size() != 2 || !(window[0] < window[1])) throw ConfigError("slope_window: expected [t0, t1] with t0 < t1");
  const double slope_tol = cfg.positive("slope_tolerance", 0.02);
  auto ecfg = cfg.child("eigen");
  const auto edims = ecfg.numbers("dims", {1, 2, 3});
  const auto ebetas = ecfg.numbers("betas", {0.5, 1.0, 2.0});
  const auto etimes = ecfg.numbers("times", {0.1, 0.5, 1.0, 2.0});
  ecfg.finish();
  cfg.finish();
  for (double p : ps)
    if (p < 1.0) throw ConfigError("ps: entries must be >= 1");
  for (double d : edims)
    if (d != std::floor(d) || d > 3) throw ConfigError("eigen.dims: entries must be 1, 2 or 3");

  auto basis = cache.empty() ? std::make_shared<const HermiteBasis>(dim, K) : HermiteBasis::cached(dim, K, cache);
  const auto family = hermite_family(basis, count, max_level, rec.seed);

  struct Combo {
    double beta, p;
    std::vector<DecayProfile> profiles;
  };
  std::vector<Combo> combos;
  for (double b : betas)
    for (double p : ps) combos.push_back({b, p, {}});
  std::vector<DecayProfile> profiles(combos.size() * family.size());
  parallel_for(profiles.size(), [&](std::size_t job) {
    const auto& c = combos[job / family.size()];
    profiles[job] = decay_profile(family[job % family.size()], c.beta, c.p, times, grid);
  });

  CsvTable decay{"decay", "beta,p,index,t,norm,ratio,resolution_ok", {}, 4, 6, false};
  CsvTable consts{"decay_constants", "beta,p,empirical_constant,min_slope,max_slope", {}, 1, 3, false};
  json cjson = json::array();
  bool resolution = true;
  for (std::size_t c = 0; c < combos.size(); ++c) {
    const double target = -std::pow(static_cast<double>(dim), combos[c].beta);
    double C = 0.0, smin = kInf, smax = -kInf, worst = 0.0;
    for (std::size_t f = 0; f < family.size(); ++f) {
      const auto& pr = profiles[c * family.size() + f];
      for (const auto& r : pr.rows) {
        decay.rows.push_back(join({format_double(combos[c].beta), format_double(combos[c].p), std::to_string(f),
                                   format_double(r.t), format_double(r.norm), format_double(r.ratio),
                                   r.resolution_ok ? "1" : "0"}));
        resolution = resolution && r.resolution_ok;
      }
      C = std::max(C, pr.empirical_constant);
      const double s = log_slope(pr, window[0], window[1]);
      smin = std::min(smin, s);
      smax = std::max(smax, s);
      worst = std::max(worst, std::abs(s / target - 1.0));
    }
    consts.rows.push_back(join({format_double(combos[c].beta), format_double(combos[c].p), format_double(C),
                                format_double(smin), format_double(smax)}));
    cjson.push_back({{"beta", combos[c].beta}, {"p", combos[c].p}, {"empirical_constant", C}});
    rec.verdicts.push_back(upper(label("log_slope[beta=%g,p=%g]", combos[c].beta, combos[c].p), worst, slope_tol));
  }
  rec.summary["decay_constants"] = cjson;
  rec.summary["resolution_ok"] = resolution;
  rec.summary["degree_cap"] = K;
  rec.summary["node_count"] = basis->node_count();

  struct EigenRow {
    int d;
    double beta, t;
    EigenSum sum;
    double bound;
  };
  std::vector<EigenRow> erows;
  for (double d : edims)
    for (double b : ebetas)
      for (double t : etimes) erows.push_back({static_cast<int>(d), b, t, {}, 0.0});
  parallel_for(erows.size(), [&](std::size_t i) {
    erows[i].sum = eigen_sum(erows[i].d, erows[i].beta, erows[i].t);
    erows[i].bound = eigen_sum_bound(erows[i].d, erows[i].beta, erows[i].t);
  });
  CsvTable eig{"eigen", "d,beta,t,value,bound,pass", {}, 3, 4, true};
  for (const auto& r : erows) {
    const bool pass = r.sum.value <= r.bound;
    eig.rows.push_back(join({std::to_string(r.d), format_double(r.beta), format_double(r.t), format_double(r.sum.value),
                             format_double(r.bound), pass ? "1" : "0"}));
    rec.verdicts.push_back(upper(label("eigen_sum_bound[d=%g,beta=%g,t=%g]", r.d, r.beta, r.t), r.sum.value, r.bound));
  }
  rec.tables = {std::move(decay), std::move(consts), std::move(eig)};
}

// transfer ----------------------------------------------------------------

void cmd_transfer(Section& cfg, RunRecord& rec) {
  auto bcfg = cfg.child("basis");
  const int dim = static_cast<int>(bcfg.integer("dim", 1, 1));
  const int K = static_cast<int>(bcfg.integer("degree_cap", 24, 0));
  bcfg.finish();
  const auto grid = read_grid(cfg.child("grid"), dim, 256, 16.0);
  if (grid.dim() != dim) throw ConfigError("grid.dim: must match basis.dim");
  auto fcfg = cfg.child("family");
  const int count = static_cast<int>(fcfg.integer("count", 20, 1));
  const int max_level = static_cast<int>(fcfg.integer("max_level", std::min(8, K), 0));
  fcfg.finish();
  if (max_level > K) throw ConfigError("family.max_level: exceeds basis.degree_cap");
  struct Case {
    double beta, t, p;
  };
  std::vector<Case> cases;
  for (auto& c : cfg.children("cases")) {
    Case x{c.positive("beta"), c.positive("t"), c.number("p", 2.0)};
    if (!(x.p >= 1.0)) throw ConfigError(c.field("p") + ": must be >= 1 and finite");
    c.finish();
    cases.push_back(x);
  }
  if (cases.empty()) cases = {{1.0, 1.0, 2.0}, {2.0, 0.5, 4.0}, {1.0, 0.2, 1.0}, {0.5, 1.0, 2.0}};
  const double s_transfer = cfg.positive("s_transfer", baselines::kTransferSlack);
  const int trials = static_cast<int>(cfg.integer("trials", 16, 1));
  cfg.finish();

  auto basis = std::make_shared<const HermiteBasis>(dim, K);
  const auto family = hermite_family(basis, count, max_level, rec.seed);
  std::vector<TransferenceReport> reps(cases.size());
  parallel_for(cases.size(), [&](std::size_t i) {
    reps[i] = transference_check(cases[i].t, cases[i].beta, cases[i].p, dim, family, grid, s_transfer, trials, rec.seed);
  });

  CsvTable tab{"transfer", TransferenceReport::csv_header(), {}, 3, 6, false};
  CsvTable rho{"rho", "case,index,rho,bound,resolution_ok,pass", {}, 2, 3, false};
  for (std::size_t i = 0; i < reps.size(); ++i) {
    const auto& r = reps[i];
    tab.rows.push_back(r.csv_row());
    for (const auto& row : r.rows)
      rho.rows.push_back(join({std::to_string(i), std::to_string(row.index), format_double(row.rho),
                               format_double(row.bound), row.resolution_ok ? "1" : "0", row.pass ? "1" : "0"}));
    rec.verdicts.push_back(upper(label("sandwich[beta=%g,t=%g,p=%g]", r.beta, r.t, r.p), r.lower, r.young_upper + 1e-8));
    rec.verdicts.push_back(
        upper(label("transference[beta=%g,t=%g,p=%g]", r.beta, r.t, r.p), r.max_rho, r.young_upper * s_transfer));
  }
  rec.summary["s_transfer"] = s_transfer;
  rec.tables = {std::move(tab), std::move(rho)};
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int worker_count() {
  if (const char* env = std::getenv("MODHEAT_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<int>(std::min(n, 256L));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(worker_count()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::mutex m;
  std::size_t next = 0;
  auto work = [&] {
    while (true) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(m);
        if (next == n) return;
        i = next++;
      }
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

bool RunRecord::passed() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
}

json RunRecord::to_json() const {
  json v = json::array();
  for (const auto& x : verdicts)
    v.push_back({{"name", x.name}, {"value", x.value}, {"bound", x.bound}, {"margin", x.margin}, {"pass", x.pass}});
  json outputs = json::array();
  for (const auto& t : tables) outputs.push_back(t.name + ".csv");
  return {{"schema_version", kSchemaVersion},
          {"command", command},
          {"code_version", MODHEAT_VERSION},
          {"seed", seed},
          {"config", config},
          {"wall_time_s", wall_time},
          {"passed", passed()},
          {"verdicts", v},
          {"summary", summary},
          {"outputs", outputs}};
}

std::vector<std::string> commands() { return {"propagate", "blowup", "picard", "modnorm", "hermite", "transfer"}; }

RunRecord run(const std::string& command, const json& config, std::optional<unsigned long long> seed_override) {
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.command = command;
  rec.config = config;
  Section cfg(config, "");
  const long version = cfg.integer("schema_version", std::nullopt, 0);
  if (version != kSchemaVersion)
    throw ConfigError("schema_version: expected " + std::to_string(kSchemaVersion) + ", got " + std::to_string(version));
  const long seed = cfg.integer("seed", 1, 0);
  rec.seed = seed_override ? *seed_override : static_cast<unsigned long long>(seed);
  rec.output_dir = cfg.text("output_dir", "out/" + command, {});

  try {
    if (command == "propagate")
      cmd_propagate(cfg, rec);
    else if (command == "blowup")
      cmd_blowup(cfg, rec);
    else if (command == "picard")
      cmd_picard(cfg, rec);
    else if (command == "modnorm")
      cmd_modnorm(cfg, rec);
    else if (command == "hermite")
      cmd_hermite(cfg, rec);
    else if (command == "transfer")
      cmd_transfer(cfg, rec);
    else
      throw ConfigError("unknown command '" + command + "'");
  } catch (const std::invalid_argument& e) {
    // Library-level parameter validation surfaces as a configuration error.
    throw ConfigError(e.what());
  }
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

json load_config(const std::filesystem::path& file) {
  std::ifstream is(file);
  if (!is) throw ConfigError("cannot open config file " + file.string());
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
}

void write_outputs(const RunRecord& record, const std::filesystem::path& dir, bool gnuplot) {
  std::filesystem::create_directories(dir);
  for (const auto& t : record.tables) {
    std::ofstream os(dir / (t.name + ".csv"), std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + (dir / (t.name + ".csv")).string());
    os << t.header << '\n';
    for (const auto& r : t.rows) os << r << '\n';
    if (gnuplot) {
      std::ofstream gp(dir / (t.name + ".gp"), std::ios::binary);
      gp << "set datafile separator ','\n"
         << "set key autotitle columnhead\n"
         << (t.log_y ? "set logscale y\n" : "") << "set terminal pngcairo size 900,600\n"
         << "set output '" << t.name << ".png'\n"
         << "plot '" << t.name << ".csv' using " << t.plot_x << ':' << t.plot_y << " with linespoints\n";
    }
  }
  std::ofstream js(dir / "run.json", std::ios::binary);
  js << record.to_json().dump(2) << '\n';
}

}  // namespace modheat::experiments
