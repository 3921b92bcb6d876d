#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "qrf/scenario.hpp"

namespace qrf {

struct Column {
  std::string name;
  std::string unit;
};

struct ResultTable {
  std::vector<Column> columns;
  std::vector<std::vector<double>> rows;
  json provenance = json::object();
  json summary = json::object();

  void add_row(std::vector<double> row);

  // Header plus rows, numbers as %.15g, RFC 4180 quoting where needed.
  std::string csv() const;
  // {"columns": [...], "provenance": {...}, "summary": {...}}
  std::string sidecar() const;
};

// Throws ScenarioError(ConfigError) listing every diagnostic when the
// scenario does not validate; operation errors propagate as qrf::Error with
// the scenario name prepended.
ResultTable run(const Scenario& scenario);

// Writes <dir>/<stem>.csv and <dir>/<stem>.json, each through a temporary
// file and rename.
void write_table(const ResultTable& table, const std::filesystem::path& dir,
                 const std::string& stem);

void write_atomic(const std::filesystem::path& path, const std::string& bytes);

// Worker cap from QRF_THREADS (default: hardware concurrency, at least 1).
std::size_t thread_cap();

struct SweepOutcome {
  std::string name;
  bool ok = false;
  std::string error;
  ErrorCode code = ErrorCode::ConfigError;
};

// Runs every variant (concurrently up to `threads`) and writes its tables.
std::vector<SweepOutcome> run_sweep(const std::vector<Scenario>& variants,
                                    const std::filesystem::path& dir,
                                    std::size_t threads);

std::string version();

}  // namespace qrf
