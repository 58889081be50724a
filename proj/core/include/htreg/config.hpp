#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "htreg/nn.hpp"

namespace htreg {

/// Dataset selection for an experiment run.
struct DatasetConfig {
  std::string kind;  // "idx", "cifar10", or "blobs"

  // idx
  std::string images, labels, test_images, test_labels;
  // cifar10
  std::vector<std::string> paths, test_paths;
  // blobs (test set drawn with a shifted seed)
  int classes = 2;
  int dim = 2;
  int n_per_class = 200;
  double separation = 4.0;

  int train_limit = 0;  ///< keep only the first N training samples (0 = all)
  int test_limit = 0;
  bool normalize = false;  ///< per-feature standardization after loading
};

struct OutputConfig {
  std::string metrics_csv = "metrics.csv";
  std::string checkpoint_path = "model.htrw";
};

/// Full experiment description parsed from JSON. Validation is strict:
/// unknown keys are rejected and every field is range-checked before any
/// work starts.
struct ExperimentConfig {
  DatasetConfig dataset;
  TrainConfig train;  // includes model layer_sizes and the penalty spec
  OutputConfig output;
  int repeats = 1;    // seeds seed, seed+1, ...
};

ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);

}  // namespace htreg
