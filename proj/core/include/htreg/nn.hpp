#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "htreg/regularizers.hpp"

namespace htreg {

struct Dataset;

/// Fully-connected classifier: ReLU hidden layers, softmax output.
/// weights[l] has shape layer_sizes[l] x layer_sizes[l+1].
struct MlpModel {
  std::vector<int> layer_sizes;
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  int num_layers() const { return static_cast<int>(weights.size()); }
};

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

struct TrainConfig {
  std::vector<int> layer_sizes;
  int epochs = 200;
  int batch_size = 64;
  double lr_initial = 0.05;
  std::vector<int> lr_milestones = {100, 150};
  double lr_gamma = 0.1;
  double momentum = 0.0;
  std::uint64_t seed = 0;
  PenaltySpec penalty;
  int spectral_refresh = 1;   ///< recompute spectra every this many SGD steps
  int metrics_interval = 1;   ///< emit one MetricsRow per this many epochs
};

/// Per-epoch record of loss, accuracy, and per-layer spectral diagnostics.
struct MetricsRow {
  int epoch = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  double test_accuracy = 0.0;  ///< percentage in [0, 100]
  double lr = 0.0;
  double penalty_total = 0.0;
  double weighted_alpha_total = 0.0;  ///< sum_l alpha_l ln(lambda_max_l); NaN if any layer degenerate
  std::vector<double> alpha_hat;      ///< per layer; NaN marks a degenerate tail
  std::vector<double> lambda_max;
  std::vector<double> stable_rank;
};

/// Weights uniform in [-sqrt(6/fan_in), +sqrt(6/fan_in)], biases zero;
/// deterministic per seed.
MlpModel init_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed);

/// Mean softmax cross-entropy over the batch plus exact backprop gradients.
/// Rows of x are samples; labels index classes in [0, n_L).
double loss_and_grads(const MlpModel& model, const Matrix& x,
                      const std::vector<int>& labels, Gradients* grads);

/// W <- W - lr * (grad + penalty_scale * penalty_grad); biases get no
/// penalty. penalty_scale is coefficient * schedule_factor * gate. Pass
/// penalty_grads == nullptr to skip the penalty term entirely.
void sgd_step(MlpModel& model, const Gradients& grads,
              const std::vector<Matrix>* penalty_grads, double lr,
              double penalty_scale, double momentum, Gradients* momentum_state);

/// Mean loss and top-1 accuracy (percent) over the full dataset.
std::pair<double, double> evaluate(const MlpModel& model, const Dataset& data);

/// Mini-batch SGD with per-epoch reshuffling, learning-rate milestones, and
/// penalty injection on weight matrices. Deterministic per seed.
std::pair<MlpModel, std::vector<MetricsRow>> train(const TrainConfig& config,
                                                   const Dataset& train_set,
                                                   const Dataset& test_set,
                                                   std::ostream* log = nullptr);

}  // namespace htreg
