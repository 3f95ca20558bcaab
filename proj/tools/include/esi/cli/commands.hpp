#pragma once

#include "esi/cli/config.hpp"
#include "esi/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace esi::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitUsage = 64;

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  bool verbose = false;
};

void log(const GlobalOptions& g, const std::string& message);

int cmd_eigenmodes(const std::string& mesh_spec, int count, const std::filesystem::path& out_dir,
                   bool binary, const GlobalOptions& g);

struct SimulateOptions {
  std::optional<std::string> noise;  // defaults to the first configured kind
  std::optional<double> snr_db;      // defaults to the first grid value
  int trial = 0;
};

int cmd_simulate(const std::filesystem::path& config_path, const std::filesystem::path& out_dir,
                 const SimulateOptions& options, const GlobalOptions& g);

int cmd_solve(const std::filesystem::path& config_path, const std::filesystem::path& data_path,
              const std::filesystem::path& out_dir, const GlobalOptions& g);

// ---------------------------------------------------------------------------
// Benchmark

struct CellResult {
  std::string method;
  std::string family;
  int basis_size = 0;
  std::string noise;
  double snr_db = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  double beta_used = 0.0;
  EvaluationReport metrics;
  double wall_ms = 0.0;
  std::string status = "ok";
};

struct ConditionSummary {
  std::string method;
  std::string family;
  int basis_size = 0;
  std::string noise;
  double snr_db = 0.0;
  int n = 0;
  double se_mean = 0.0, se_sem = 0.0;
  double mcc_mean = 0.0, mcc_sem = 0.0;
  double le_mean = 0.0, le_sem = 0.0;
  double sd_mean = 0.0, sd_sem = 0.0;
};

struct BenchmarkResult {
  std::vector<CellResult> cells;  // grid order: method, noise, snr, trial
  std::vector<ConditionSummary> summary;
};

inline constexpr const char* kLongCsvHeader =
    "method,family,S,noise,snr_db,trial,seed,beta_used,se,mcc,le_mm,sd_mm,wall_ms,status";

/// Runs the whole grid. Per-vertex maps for trials below config.sample_maps
/// are written under map_dir when it is non-empty.
BenchmarkResult run_benchmark(const BenchmarkConfig& config, const GlobalOptions& g,
                              const std::filesystem::path& map_dir = {});

std::vector<ConditionSummary> summarize(const std::vector<CellResult>& cells);
std::string long_csv(const std::vector<CellResult>& cells);
std::string summary_csv(const std::vector<ConditionSummary>& summary);

int cmd_benchmark(const std::filesystem::path& config_path,
                  const std::optional<std::filesystem::path>& out_dir, const GlobalOptions& g);

// ---------------------------------------------------------------------------
// Report

/// Parses a long-format results CSV; SchemaError on a missing or wrong header.
std::vector<CellResult> read_long_csv(const std::filesystem::path& path);

int cmd_report(const std::filesystem::path& csv_path, const std::filesystem::path& out_dir,
               double bar_snr_db, const GlobalOptions& g);

}  // namespace esi::cli
