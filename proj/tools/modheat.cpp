#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "modheat/experiments.hpp"

namespace ex = modheat::experiments;

namespace {

struct Options {
  std::string config;
  std::string out;
  std::optional<unsigned long long> seed;
  bool gnuplot = false;
  bool quiet = false;
};

void print_verdicts(const ex::RunRecord& rec) {
  for (const auto& v : rec.verdicts)
    std::printf("%-4s %-48s value=%-14.8g bound=%-14.8g margin=%.4g\n", v.pass ? "PASS" : "FAIL", v.name.c_str(),
                v.value, v.bound, v.margin);
}

int execute(const std::string& command, const Options& opt) {
  try {
    const auto config = ex::load_config(opt.config);
    auto rec = ex::run(command, config, opt.seed);
    const std::filesystem::path dir = opt.out.empty() ? rec.output_dir : std::filesystem::path(opt.out);
    ex::write_outputs(rec, dir, opt.gnuplot);
    if (!opt.quiet) {
      print_verdicts(rec);
      std::printf("%s: %s (%.2fs) -> %s\n", command.c_str(), rec.passed() ? "passed" : "FAILED", rec.wall_time,
                  dir.string().c_str());
    }
    return rec.passed() ? 0 : 1;
  } catch (const ex::ConfigError& e) {
    std::fprintf(stderr, "modheat: config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "modheat: %s\n", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractional heat equations and modulation-space experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", MODHEAT_VERSION);

  Options opt;
  const std::vector<std::pair<std::string, std::string>> help = {
      {"propagate", "uniform boundedness of the linear propagator on M^{p,q}_s"},
      {"blowup", "certify a datum, solve, and report the divergence witness"},
      {"picard", "Picard iterates, their ratios, and envelope domination"},
      {"modnorm", "compare the decomposition and STFT modulation-norm estimators"},
      {"hermite", "Hermite oscillator heat decay and eigenvalue sums"},
      {"transfer", "torus multiplier bounds against modulation-norm ratios"},
  };
  for (const auto& [name, text] : help) {
    auto* sub = app.add_subcommand(name, text);
    sub->add_option("-c,--config", opt.config, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", opt.out, "output directory (overrides output_dir)");
    sub->add_option("--seed", opt.seed, "override the config seed");
    sub->add_flag("--gnuplot", opt.gnuplot, "also write a gnuplot script per table");
    sub->add_flag("-q,--quiet", opt.quiet, "no verdict listing");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  return execute(app.get_subcommands().front()->get_name(), opt);
}
