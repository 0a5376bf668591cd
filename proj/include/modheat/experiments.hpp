#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "modheat/heat.hpp"

namespace modheat::experiments {

inline constexpr int kSchemaVersion = 1;

/// Invalid configuration; the message names the offending field.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CsvTable {
  std::string name;  // file stem
  std::string header;
  std::vector<std::string> rows;
  // Columns (1-based) for the companion gnuplot script.
  int plot_x = 1;
  int plot_y = 2;
  bool log_y = false;
};

struct RunRecord {
  std::string command;
  nlohmann::json config;  // verbatim input
  unsigned long long seed = 1;
  double wall_time = 0.0;
  std::vector<Verdict> verdicts;
  nlohmann::json summary = nlohmann::json::object();
  std::vector<CsvTable> tables;
  std::filesystem::path output_dir;

  bool passed() const;
  nlohmann::json to_json() const;
};

std::vector<std::string> commands();

/// Validates config and runs one command. seed_override replaces config.seed.
RunRecord run(const std::string& command, const nlohmann::json& config,
              std::optional<unsigned long long> seed_override = std::nullopt);

/// Writes <table>.csv for every table, run.json, and with gnuplot a <table>.gp
/// script per table.
void write_outputs(const RunRecord& record, const std::filesystem::path& dir, bool gnuplot);

nlohmann::json load_config(const std::filesystem::path& file);

/// MODHEAT_THREADS if set and positive, else the hardware concurrency.
int worker_count();

/// Runs body(i) for i in [0, n) on up to worker_count() threads. The first
/// exception (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// %.17g
std::string format_double(double v);

}  // namespace modheat::experiments
