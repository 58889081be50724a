#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "htreg/config.hpp"
#include "htreg/data.hpp"

namespace htreg {

/// Train and test sets resolved from a dataset config.
std::pair<Dataset, Dataset> load_datasets(const DatasetConfig& config,
                                          std::uint64_t seed);

struct RunResult {
  std::uint64_t seed = 0;
  std::string metrics_path;
  std::string checkpoint_path;
  MetricsRow final_row;
};

struct ExperimentSummary {
  std::vector<RunResult> runs;
  double mean_test_acc = 0.0;
  double stderr_test_acc = 0.0;  ///< sample stddev / sqrt(repeats)
  double mean_alpha_hat = 0.0;   ///< mean over runs of the per-layer mean
  double mean_weighted_alpha = 0.0;
  std::string summary_path;
};

/// Runs `repeats` seeded trainings, writing one metrics CSV and checkpoint
/// per run plus a summary CSV (mean +/- standard error of final accuracy).
ExperimentSummary run_experiment(const ExperimentConfig& config,
                                 std::ostream* log = nullptr);

/// Serializes metrics rows; byte-identical for identical inputs.
void write_metrics_csv(const std::vector<MetricsRow>& rows, int num_layers,
                       const std::string& path);

/// Per-run file names derived from the configured paths.
std::string run_metrics_path(const std::string& base, std::uint64_t seed);
std::string run_checkpoint_path(const std::string& base, std::uint64_t seed);
std::string summary_csv_path(const std::string& metrics_base);

// CLI entry points; return process exit codes (0 ok, 1 runtime, 2 config).
int cmd_train(const std::string& config_path, std::ostream& out,
              std::ostream& err);
int cmd_analyze(const std::string& checkpoint_path, const std::string& out_csv,
                std::ostream& out, std::ostream& err);

}  // namespace htreg
