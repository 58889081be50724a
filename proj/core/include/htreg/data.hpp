#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "htreg/common.hpp"
#include "htreg/nn.hpp"

namespace htreg {

struct Dataset {
  Matrix features;          ///< n x d, entries in [0, 1]
  std::vector<int> labels;  ///< n entries in [0, num_classes)
  std::string name;
  int feature_dim = 0;
  int num_classes = 0;

  int n() const { return static_cast<int>(labels.size()); }
};

/// IDX image + label pair (big-endian magic 0x803 / 0x801); pixel bytes
/// scaled by 1/255.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

/// CIFAR-10 binary batches: 3073-byte records (1 label byte + 3072 pixels).
Dataset load_cifar10_binary(const std::vector<std::string>& paths);

/// Gaussian blobs: class c centered at separation * e_{c mod dim}, unit
/// variance, the whole set affinely rescaled into [0, 1].
Dataset synth_blobs(int classes, int dim, int n_per_class, double separation,
                    std::uint64_t seed);

/// First `limit` samples (all of them when limit <= 0 or >= n).
Dataset subset(const Dataset& data, int limit);

/// Binary checkpoint: magic "HTRW", u32 version, u32 layer count, then per
/// layer u32 rows, u32 cols, row-major little-endian f64 weights, f64
/// biases. Metadata goes to a `<path>.json` sidecar.
void save_checkpoint(const MlpModel& model, const nlohmann::json& metadata,
                     const std::string& path);
std::pair<MlpModel, nlohmann::json> load_checkpoint(const std::string& path);

/// A seeded permutation of [0, n) split into batches; the last may be short.
std::vector<std::vector<int>> batch_iter(int n, int batch_size,
                                         std::uint64_t epoch_seed);

}  // namespace htreg
