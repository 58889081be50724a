#include "htreg/nn.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "htreg/data.hpp"
#include "htreg/rng.hpp"

namespace htreg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Rowwise softmax with max-subtraction; returns probabilities.
Matrix softmax_rows(const Matrix& logits) {
  Matrix p = logits;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    p.row(i).array() -= p.row(i).maxCoeff();
    p.row(i) = p.row(i).array().exp();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

struct Forward {
  std::vector<Matrix> pre;   // pre-activations per layer
  std::vector<Matrix> post;  // activations; post[0] is the input
  Matrix probs;
};

Forward forward_pass(const MlpModel& model, const Matrix& x) {
  Forward f;
  f.post.push_back(x);
  for (int l = 0; l < model.num_layers(); ++l) {
    Matrix z =
        (f.post.back() * model.weights[l]).rowwise() +
        model.biases[l].transpose();
    if (l + 1 < model.num_layers()) {
      f.post.push_back(z.cwiseMax(0.0));
    }
    f.pre.push_back(std::move(z));
  }
  f.probs = softmax_rows(f.pre.back());
  return f;
}

double mean_cross_entropy(const Matrix& probs, const std::vector<int>& labels) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    loss -= std::log(std::max(probs(i, labels[i]), 1e-300));
  }
  return loss / static_cast<double>(probs.rows());
}

// Per-layer spectral diagnostics at the current parameters.
struct LayerDiag {
  double alpha_hat = kNaN;  // NaN marks a degenerate tail
  double lambda_max = 0.0;
  double srank = 0.0;
};

LayerDiag layer_diagnostics(const Matrix& w, const PenaltySpec& spec) {
  LayerDiag d;
  const Spectrum s = gram_spectrum(w);
  d.lambda_max = s.lambda_max;
  d.srank = s.lambda_max > 0 ? stable_rank(s) : kNaN;
  try {
    d.alpha_hat = spectrum_tail(s, spec).alpha_hat;
  } catch (const Error&) {
    // degenerate or too-small spectrum; leave NaN
  }
  return d;
}

}  // namespace

MlpModel init_mlp(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  if (layer_sizes.size() < 2) {
    throw Error("init_mlp needs at least 2 layer sizes");
  }
  MlpModel model;
  model.layer_sizes = layer_sizes;
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int fan_in = layer_sizes[l];
    const int fan_out = layer_sizes[l + 1];
    const double bound = std::sqrt(6.0 / fan_in);
    Matrix w(fan_in, fan_out);
    for (int i = 0; i < fan_in; ++i) {
      for (int j = 0; j < fan_out; ++j) {
        w(i, j) = rng.uniform(-bound, bound);
      }
    }
    model.weights.push_back(std::move(w));
    model.biases.push_back(Vector::Zero(fan_out));
  }
  return model;
}

double loss_and_grads(const MlpModel& model, const Matrix& x,
                      const std::vector<int>& labels, Gradients* grads) {
  if (x.cols() != model.layer_sizes.front()) {
    throw ShapeMismatch("batch feature width " + std::to_string(x.cols()) +
                        " != input size " +
                        std::to_string(model.layer_sizes.front()));
  }
  if (x.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw ShapeMismatch("batch rows != label count");
  }
  const int classes = model.layer_sizes.back();
  for (int y : labels) {
    if (y < 0 || y >= classes) throw ShapeMismatch("label out of range");
  }

  const Forward f = forward_pass(model, x);
  const double loss = mean_cross_entropy(f.probs, labels);
  if (grads == nullptr) return loss;

  const int batch = static_cast<int>(x.rows());
  const int num_layers = model.num_layers();
  grads->weights.assign(num_layers, Matrix());
  grads->biases.assign(num_layers, Vector());

  Matrix delta = f.probs;  // dL/dZ_L = (P - Y) / B
  for (int i = 0; i < batch; ++i) delta(i, labels[i]) -= 1.0;
  delta /= static_cast<double>(batch);

  for (int l = num_layers - 1; l >= 0; --l) {
    grads->weights[l] = f.post[l].transpose() * delta;
    grads->biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Matrix up = delta * model.weights[l].transpose();
      delta = (f.pre[l - 1].array() > 0.0).cast<double>() * up.array();
    }
  }
  return loss;
}

void sgd_step(MlpModel& model, const Gradients& grads,
              const std::vector<Matrix>* penalty_grads, double lr,
              double penalty_scale, double momentum,
              Gradients* momentum_state) {
  const int num_layers = model.num_layers();
  for (int l = 0; l < num_layers; ++l) {
    Matrix gw = grads.weights[l];
    if (penalty_grads != nullptr && penalty_scale != 0.0) {
      gw += penalty_scale * (*penalty_grads)[l];
    }
    Vector gb = grads.biases[l];

    if (momentum > 0.0 && momentum_state != nullptr) {
      if (momentum_state->weights.size() != static_cast<std::size_t>(num_layers)) {
        momentum_state->weights.assign(num_layers, Matrix());
        momentum_state->biases.assign(num_layers, Vector());
      }
      Matrix& vw = momentum_state->weights[l];
      Vector& vb = momentum_state->biases[l];
      if (vw.size() == 0) {
        vw = gw;
        vb = gb;
      } else {
        vw = momentum * vw + gw;
        vb = momentum * vb + gb;
      }
      gw = vw;
      gb = vb;
    }

    model.weights[l] -= lr * gw;
    model.biases[l] -= lr * gb;
    if (!model.weights[l].allFinite() || !model.biases[l].allFinite()) {
      throw NonFiniteUpdate("non-finite parameters after update in layer " +
                            std::to_string(l));
    }
  }
}

std::pair<double, double> evaluate(const MlpModel& model, const Dataset& data) {
  if (data.features.cols() != model.layer_sizes.front()) {
    throw ShapeMismatch("dataset feature width != model input size");
  }
  const int n = data.n();
  const int chunk = 1024;
  double loss_sum = 0.0;
  int correct = 0;
  for (int start = 0; start < n; start += chunk) {
    const int len = std::min(chunk, n - start);
    const Matrix x = data.features.middleRows(start, len);
    const Forward f = forward_pass(model, x);
    for (int i = 0; i < len; ++i) {
      const int y = data.labels[start + i];
      loss_sum -= std::log(std::max(f.probs(i, y), 1e-300));
      Eigen::Index argmax;
      f.probs.row(i).maxCoeff(&argmax);
      if (static_cast<int>(argmax) == y) ++correct;
    }
  }
  return {loss_sum / n, 100.0 * correct / n};
}

std::pair<MlpModel, std::vector<MetricsRow>> train(const TrainConfig& config,
                                                   const Dataset& train_set,
                                                   const Dataset& test_set,
                                                   std::ostream* log) {
  if (train_set.n() == 0 || test_set.n() == 0) {
    throw Error("datasets must be non-empty");
  }
  if (config.layer_sizes.size() < 2 ||
      config.layer_sizes.front() != train_set.feature_dim) {
    throw ShapeMismatch("layer_sizes must start with the feature width");
  }

  MlpModel model = init_mlp(config.layer_sizes, config.seed);
  const int num_layers = model.num_layers();
  const PenaltySpec& penalty = config.penalty;
  const bool penalized =
      penalty.kind != PenaltyKind::None && penalty.coefficient > 0.0;

  Gradients momentum_state;
  std::vector<MetricsRow> metrics;

  // Cached per-layer penalty state, refreshed every spectral_refresh steps.
  std::vector<Matrix> penalty_grads(num_layers);
  std::vector<double> penalty_values(num_layers, 0.0);
  long step = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    double lr = config.lr_initial;
    for (int milestone : config.lr_milestones) {
      if (epoch > milestone) lr *= config.lr_gamma;
    }
    const double decay = penalized ? schedule_factor(penalty.schedule, epoch) : 0.0;

    const auto batches = batch_iter(train_set.n(), config.batch_size,
                                    mix_seed(config.seed, epoch));
    for (const auto& batch : batches) {
      Matrix x(batch.size(), train_set.feature_dim);
      std::vector<int> y(batch.size());
      for (std::size_t i = 0; i < batch.size(); ++i) {
        x.row(i) = train_set.features.row(batch[i]);
        y[i] = train_set.labels[batch[i]];
      }

      Gradients grads;
      loss_and_grads(model, x, y, &grads);

      double scale = 0.0;
      const std::vector<Matrix>* pgrads = nullptr;
      if (penalized && decay > 0.0) {
        if (step % config.spectral_refresh == 0) {
          for (int l = 0; l < num_layers; ++l) {
            const Spectrum s = gram_spectrum(model.weights[l]);
            try {
              penalty_values[l] =
                  penalty_value(penalty.kind, model.weights[l], s, penalty);
              penalty_grads[l] =
                  penalty_gradient(penalty.kind, model.weights[l], s, penalty);
            } catch (const DegenerateEigenvalue&) {
              penalty_values[l] = 0.0;
              penalty_grads[l] =
                  Matrix::Zero(model.weights[l].rows(), model.weights[l].cols());
              if (log) {
                *log << "warning: degenerate top eigenvalue in layer " << l
                     << " at epoch " << epoch << "; penalty skipped\n";
              }
            }
          }
        }
        if (threshold_gate(penalty, penalty_values)) {
          scale = penalty.coefficient * decay;
          pgrads = &penalty_grads;
        }
      }

      sgd_step(model, grads, pgrads, lr, scale, config.momentum,
               &momentum_state);
      ++step;
    }

    if (epoch % config.metrics_interval == 0 || epoch == config.epochs) {
      MetricsRow row;
      row.epoch = epoch;
      row.lr = lr;
      auto [train_loss, train_acc] = evaluate(model, train_set);
      (void)train_acc;
      auto [test_loss, test_acc] = evaluate(model, test_set);
      row.train_loss = train_loss;
      row.test_loss = test_loss;
      row.test_accuracy = test_acc;

      row.weighted_alpha_total = 0.0;
      double value_total = 0.0;
      bool any_degenerate = false;
      for (int l = 0; l < num_layers; ++l) {
        const LayerDiag d = layer_diagnostics(model.weights[l], penalty);
        row.alpha_hat.push_back(d.alpha_hat);
        row.lambda_max.push_back(d.lambda_max);
        row.stable_rank.push_back(d.srank);
        if (std::isnan(d.alpha_hat)) {
          any_degenerate = true;
        } else {
          row.weighted_alpha_total += d.alpha_hat * std::log(d.lambda_max);
        }
        if (penalized) {
          try {
            const Spectrum s = gram_spectrum(model.weights[l]);
            value_total +=
                penalty_value(penalty.kind, model.weights[l], s, penalty);
          } catch (const Error&) {
            // degenerate spectrum; contributes nothing this row
          }
        }
      }
      if (any_degenerate) row.weighted_alpha_total = kNaN;
      row.penalty_total = penalized ? penalty.coefficient * decay * value_total
                                    : 0.0;
      metrics.push_back(std::move(row));

      if (log) {
        *log << "epoch " << epoch << " train_loss " << train_loss
             << " test_acc " << test_acc << "\n";
      }
    }
  }
  return {std::move(model), std::move(metrics)};
}

}  // namespace htreg
