#include "htreg/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "htreg/rng.hpp"

namespace htreg {

namespace {

// Shortest round-trippable decimal form; keeps CSVs byte-stable.
std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  double parsed = 0.0;
  for (int prec = 1; prec <= 16; ++prec) {
    char shorter[40];
    std::snprintf(shorter, sizeof(shorter), "%.*g", prec, x);
    std::sscanf(shorter, "%lf", &parsed);
    if (parsed == x) return shorter;
  }
  return buf;
}

void normalize_features(Dataset& train, Dataset& test) {
  // Per-feature standardization using the training-set statistics.
  const Vector mean = train.features.colwise().mean();
  Vector stddev(train.features.cols());
  for (Eigen::Index j = 0; j < train.features.cols(); ++j) {
    const double var =
        (train.features.col(j).array() - mean(j)).square().mean();
    stddev(j) = std::sqrt(var) > 1e-12 ? std::sqrt(var) : 1.0;
  }
  for (Eigen::Index j = 0; j < train.features.cols(); ++j) {
    train.features.col(j) = (train.features.col(j).array() - mean(j)) / stddev(j);
    test.features.col(j) = (test.features.col(j).array() - mean(j)) / stddev(j);
  }
}

std::string insert_tag(const std::string& base, const std::string& tag) {
  const auto dot = base.find_last_of('.');
  const auto slash = base.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return base + tag;
  }
  return base.substr(0, dot) + tag + base.substr(dot);
}

void ensure_parent_dir(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

}  // namespace

std::pair<Dataset, Dataset> load_datasets(const DatasetConfig& config,
                                          std::uint64_t seed) {
  Dataset train, test;
  if (config.kind == "idx") {
    train = load_idx(config.images, config.labels);
    test = load_idx(config.test_images, config.test_labels);
  } else if (config.kind == "cifar10") {
    train = load_cifar10_binary(config.paths);
    test = load_cifar10_binary(config.test_paths);
  } else if (config.kind == "blobs") {
    train = synth_blobs(config.classes, config.dim, config.n_per_class,
                        config.separation, mix_seed(seed, 0));
    test = synth_blobs(config.classes, config.dim,
                       std::max(config.n_per_class / 4, 1), config.separation,
                       mix_seed(seed, 1));
  } else {
    throw ConfigError("unknown dataset kind: " + config.kind);
  }
  train = subset(train, config.train_limit);
  test = subset(test, config.test_limit);
  if (config.normalize) normalize_features(train, test);
  return {std::move(train), std::move(test)};
}

std::string run_metrics_path(const std::string& base, std::uint64_t seed) {
  return insert_tag(base, ".seed" + std::to_string(seed));
}

std::string run_checkpoint_path(const std::string& base, std::uint64_t seed) {
  return insert_tag(base, ".seed" + std::to_string(seed));
}

std::string summary_csv_path(const std::string& metrics_base) {
  return insert_tag(metrics_base, ".summary");
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, int num_layers,
                       const std::string& path) {
  ensure_parent_dir(path);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << "# htreg-metrics schema=1\n";
  out << "epoch,train_loss,test_loss,test_acc,lr,penalty_total,"
         "weighted_alpha_total";
  for (int l = 1; l <= num_layers; ++l) {
    out << ",alpha_hat_" << l << ",lambda_max_" << l << ",stable_rank_" << l;
  }
  out << "\n";
  for (const MetricsRow& r : rows) {
    out << r.epoch << ',' << fmt(r.train_loss) << ',' << fmt(r.test_loss)
        << ',' << fmt(r.test_accuracy) << ',' << fmt(r.lr) << ','
        << fmt(r.penalty_total) << ',' << fmt(r.weighted_alpha_total);
    for (int l = 0; l < num_layers; ++l) {
      out << ',' << fmt(r.alpha_hat[l]) << ',' << fmt(r.lambda_max[l]) << ','
          << fmt(r.stable_rank[l]);
    }
    out << "\n";
  }
}

ExperimentSummary run_experiment(const ExperimentConfig& config,
                                 std::ostream* log) {
  ExperimentSummary summary;
  const int num_layers =
      static_cast<int>(config.train.layer_sizes.size()) - 1;

  std::vector<double> final_accs;
  std::vector<double> final_alpha_means;
  std::vector<double> final_weighted_alphas;

  for (int r = 0; r < config.repeats; ++r) {
    const std::uint64_t seed = config.train.seed + r;
    TrainConfig tc = config.train;
    tc.seed = seed;

    auto [train_set, test_set] = load_datasets(config.dataset, seed);
    auto [model, metrics] = train(tc, train_set, test_set, log);
    if (metrics.empty()) throw Error("training produced no metrics");

    RunResult run;
    run.seed = seed;
    run.final_row = metrics.back();
    run.metrics_path = run_metrics_path(config.output.metrics_csv, seed);
    run.checkpoint_path =
        run_checkpoint_path(config.output.checkpoint_path, seed);
    write_metrics_csv(metrics, num_layers, run.metrics_path);

    nlohmann::json metadata;
    metadata["config"] = experiment_config_to_json(config);
    metadata["seed"] = seed;
    metadata["final_test_accuracy"] = run.final_row.test_accuracy;
    metadata["final_train_loss"] = run.final_row.train_loss;
    metadata["final_test_loss"] = run.final_row.test_loss;
    ensure_parent_dir(run.checkpoint_path);
    save_checkpoint(model, metadata, run.checkpoint_path);

    final_accs.push_back(run.final_row.test_accuracy);
    double alpha_sum = 0.0;
    int alpha_count = 0;
    for (double a : run.final_row.alpha_hat) {
      if (!std::isnan(a)) {
        alpha_sum += a;
        ++alpha_count;
      }
    }
    final_alpha_means.push_back(alpha_count > 0 ? alpha_sum / alpha_count
                                                : std::nan(""));
    final_weighted_alphas.push_back(run.final_row.weighted_alpha_total);
    summary.runs.push_back(std::move(run));
    if (log) {
      *log << "run seed " << seed << " final test_acc "
           << final_accs.back() << "\n";
    }
  }

  const int n = config.repeats;
  double mean = 0.0;
  for (double a : final_accs) mean += a;
  mean /= n;
  double var = 0.0;
  for (double a : final_accs) var += (a - mean) * (a - mean);
  const double stddev = n > 1 ? std::sqrt(var / (n - 1)) : 0.0;
  summary.mean_test_acc = mean;
  summary.stderr_test_acc = stddev / std::sqrt(static_cast<double>(n));

  double alpha_mean = 0.0, wa_mean = 0.0;
  for (double a : final_alpha_means) alpha_mean += a;
  for (double w : final_weighted_alphas) wa_mean += w;
  summary.mean_alpha_hat = alpha_mean / n;
  summary.mean_weighted_alpha = wa_mean / n;

  summary.summary_path = summary_csv_path(config.output.metrics_csv);
  ensure_parent_dir(summary.summary_path);
  std::ofstream out(summary.summary_path, std::ios::trunc);
  if (!out) throw Error("cannot write " + summary.summary_path);
  out << "# htreg-summary schema=1\n";
  out << "kind,coefficient,repeats,mean_test_acc,stderr_test_acc,"
         "mean_final_alpha_hat,mean_final_weighted_alpha\n";
  out << to_string(config.train.penalty.kind) << ','
      << fmt(config.train.penalty.coefficient) << ',' << n << ','
      << fmt(summary.mean_test_acc) << ',' << fmt(summary.stderr_test_acc)
      << ',' << fmt(summary.mean_alpha_hat) << ','
      << fmt(summary.mean_weighted_alpha) << "\n";
  return summary;
}

int cmd_train(const std::string& config_path, std::ostream& out,
              std::ostream& err) {
  ExperimentConfig config;
  try {
    config = load_experiment_config(config_path);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }
  try {
    const ExperimentSummary summary = run_experiment(config, &out);
    out << "summary: " << to_string(config.train.penalty.kind) << " mean "
        << summary.mean_test_acc << " +/- " << summary.stderr_test_acc
        << " (" << summary.summary_path << ")\n";
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

int cmd_analyze(const std::string& checkpoint_path, const std::string& out_csv,
                std::ostream& out, std::ostream& err) {
  try {
    auto [model, metadata] = load_checkpoint(checkpoint_path);
    (void)metadata;
    ensure_parent_dir(out_csv);
    std::ofstream csv(out_csv, std::ios::trunc);
    if (!csv) throw Error("cannot write " + out_csv);
    csv << "# htreg-analysis schema=1\n";
    csv << "layer,rows,cols,lambda_max,frobenius_sq,stable_rank,alpha_hat,"
           "weighted_alpha\n";
    PenaltySpec spec;  // defaults: hill_k auto
    double total = 0.0;
    bool total_valid = true;
    for (int l = 0; l < model.num_layers(); ++l) {
      const Matrix& w = model.weights[l];
      const Spectrum s = gram_spectrum(w);
      csv << (l + 1) << ',' << w.rows() << ',' << w.cols() << ','
          << fmt(s.lambda_max) << ',' << fmt(s.frobenius_sq) << ','
          << (s.lambda_max > 0 ? fmt(stable_rank(s)) : "nan") << ',';
      try {
        const TailEstimate t = spectrum_tail(s, spec);
        const double wa = t.alpha_hat * std::log(s.lambda_max);
        csv << fmt(t.alpha_hat) << ',' << fmt(wa) << "\n";
        total += wa;
      } catch (const Error&) {
        csv << "degenerate,nan\n";
        total_valid = false;
      }
    }
    csv << "total,,,,,,," << (total_valid ? fmt(total) : "nan") << "\n";
    out << "analysis written to " << out_csv << "\n";
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace htreg
