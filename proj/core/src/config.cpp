#include "htreg/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace htreg {

namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.contains(key)) {
      throw ConfigError(where + ": unknown key \"" + key + "\"");
    }
  }
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback,
         const std::string& where) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

template <typename T>
T get_required(const json& j, const std::string& key,
               const std::string& where) {
  if (!j.contains(key)) {
    throw ConfigError(where + ": missing required key \"" + key + "\"");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

DatasetConfig parse_dataset(const json& j) {
  require_object(j, "dataset");
  reject_unknown(j,
                 {"kind", "images", "labels", "test_images", "test_labels",
                  "paths", "test_paths", "classes", "dim", "n_per_class",
                  "separation", "train_limit", "test_limit", "normalize"},
                 "dataset");
  DatasetConfig d;
  d.kind = get_required<std::string>(j, "kind", "dataset");
  if (d.kind == "idx") {
    d.images = get_required<std::string>(j, "images", "dataset");
    d.labels = get_required<std::string>(j, "labels", "dataset");
    d.test_images = get_required<std::string>(j, "test_images", "dataset");
    d.test_labels = get_required<std::string>(j, "test_labels", "dataset");
  } else if (d.kind == "cifar10") {
    d.paths = get_required<std::vector<std::string>>(j, "paths", "dataset");
    d.test_paths =
        get_required<std::vector<std::string>>(j, "test_paths", "dataset");
    if (d.paths.empty() || d.test_paths.empty()) {
      throw ConfigError("dataset: cifar10 needs non-empty path lists");
    }
  } else if (d.kind == "blobs") {
    d.classes = get_or(j, "classes", d.classes, "dataset");
    d.dim = get_or(j, "dim", d.dim, "dataset");
    d.n_per_class = get_or(j, "n_per_class", d.n_per_class, "dataset");
    d.separation = get_or(j, "separation", d.separation, "dataset");
    if (d.classes < 2 || d.dim < 1 || d.n_per_class < 1) {
      throw ConfigError("dataset: blobs parameters out of range");
    }
  } else {
    throw ConfigError("dataset.kind: expected idx, cifar10, or blobs");
  }
  d.train_limit = get_or(j, "train_limit", 0, "dataset");
  d.test_limit = get_or(j, "test_limit", 0, "dataset");
  d.normalize = get_or(j, "normalize", false, "dataset");
  return d;
}

Schedule parse_schedule(const json& j) {
  require_object(j, "penalty.schedule");
  reject_unknown(j, {"kind", "k", "t", "m"}, "penalty.schedule");
  Schedule s;
  const auto kind = get_required<std::string>(j, "kind", "penalty.schedule");
  if (kind == "always") {
    s.kind = Schedule::Kind::Always;
  } else if (kind == "power_decay") {
    s.kind = Schedule::Kind::PowerDecay;
  } else if (kind == "exp_decay") {
    s.kind = Schedule::Kind::ExpDecay;
  } else if (kind == "lower_threshold") {
    s.kind = Schedule::Kind::LowerThreshold;
  } else {
    throw ConfigError("penalty.schedule.kind: unknown value \"" + kind + "\"");
  }
  s.k = get_or(j, "k", s.k, "penalty.schedule");
  s.t = get_or(j, "t", s.t, "penalty.schedule");
  s.m = get_or(j, "m", s.m, "penalty.schedule");
  if ((s.kind == Schedule::Kind::PowerDecay ||
       s.kind == Schedule::Kind::ExpDecay) &&
      !(s.k > 0.0)) {
    throw ConfigError("penalty.schedule.k: must be > 0 for decay schedules");
  }
  if (s.m < 1) throw ConfigError("penalty.schedule.m: must be >= 1");
  return s;
}

PenaltySpec parse_penalty(const json& j) {
  require_object(j, "penalty");
  reject_unknown(j, {"kind", "coefficient", "schedule", "k_fraction", "hill_k"},
                 "penalty");
  PenaltySpec p;
  p.kind = penalty_kind_from_string(
      get_required<std::string>(j, "kind", "penalty"));
  p.coefficient = get_or(j, "coefficient", 0.0, "penalty");
  if (p.coefficient < 0.0) {
    throw ConfigError("penalty.coefficient: must be >= 0");
  }
  if (j.contains("schedule")) p.schedule = parse_schedule(j.at("schedule"));
  p.k_fraction = get_or(j, "k_fraction", 0.5, "penalty");
  if (!(p.k_fraction > 0.0) || p.k_fraction > 1.0) {
    throw ConfigError("penalty.k_fraction: must be in (0, 1]");
  }
  if (j.contains("hill_k")) {
    const json& hk = j.at("hill_k");
    if (hk.is_string() && hk.get<std::string>() == "auto") {
      p.hill_k = kHillAutoK;
    } else if (hk.is_number_integer() && hk.get<int>() >= 1) {
      p.hill_k = hk.get<int>();
    } else {
      throw ConfigError("penalty.hill_k: expected \"auto\" or integer >= 1");
    }
  }
  if (p.schedule.kind == Schedule::Kind::LowerThreshold &&
      p.kind != PenaltyKind::WeightedAlpha &&
      p.kind != PenaltyKind::StableRank) {
    throw ConfigError(
        "penalty.schedule: lower_threshold applies only to weighted_alpha "
        "and stable_rank");
  }
  return p;
}

void parse_train(const json& j, TrainConfig& t) {
  require_object(j, "train");
  reject_unknown(j,
                 {"epochs", "batch_size", "lr_initial", "lr_milestones",
                  "lr_gamma", "momentum", "seed", "spectral_refresh",
                  "metrics_interval"},
                 "train");
  t.epochs = get_or(j, "epochs", t.epochs, "train");
  t.batch_size = get_or(j, "batch_size", t.batch_size, "train");
  t.lr_initial = get_or(j, "lr_initial", t.lr_initial, "train");
  t.lr_milestones = get_or(j, "lr_milestones", t.lr_milestones, "train");
  t.lr_gamma = get_or(j, "lr_gamma", t.lr_gamma, "train");
  t.momentum = get_or(j, "momentum", t.momentum, "train");
  t.seed = get_or<std::uint64_t>(j, "seed", t.seed, "train");
  t.spectral_refresh = get_or(j, "spectral_refresh", 1, "train");
  t.metrics_interval = get_or(j, "metrics_interval", 1, "train");

  if (t.epochs < 1) throw ConfigError("train.epochs: must be >= 1");
  if (t.batch_size < 1) throw ConfigError("train.batch_size: must be >= 1");
  if (!(t.lr_initial > 0.0)) throw ConfigError("train.lr_initial: must be > 0");
  if (!(t.lr_gamma > 0.0) || t.lr_gamma >= 1.0) {
    throw ConfigError("train.lr_gamma: must be in (0, 1)");
  }
  if (t.momentum < 0.0 || t.momentum >= 1.0) {
    throw ConfigError("train.momentum: must be in [0, 1)");
  }
  if (t.spectral_refresh < 1) {
    throw ConfigError("train.spectral_refresh: must be >= 1");
  }
  if (t.metrics_interval < 1) {
    throw ConfigError("train.metrics_interval: must be >= 1");
  }
  int prev = 0;
  for (int m : t.lr_milestones) {
    if (m <= prev || m > t.epochs) {
      throw ConfigError(
          "train.lr_milestones: must be strictly increasing and <= epochs");
    }
    prev = m;
  }
}

}  // namespace

ExperimentConfig parse_experiment_config(const json& j) {
  require_object(j, "config");
  reject_unknown(j, {"dataset", "model", "train", "penalty", "output", "repeats"},
                 "config");
  ExperimentConfig c;
  c.dataset = parse_dataset(
      j.contains("dataset") ? j.at("dataset")
                            : throw ConfigError("config: missing \"dataset\""));

  const json& model = j.contains("model")
                          ? j.at("model")
                          : throw ConfigError("config: missing \"model\"");
  require_object(model, "model");
  reject_unknown(model, {"layer_sizes"}, "model");
  c.train.layer_sizes =
      get_required<std::vector<int>>(model, "layer_sizes", "model");
  if (c.train.layer_sizes.size() < 2) {
    throw ConfigError("model.layer_sizes: need at least 2 entries");
  }
  for (int s : c.train.layer_sizes) {
    if (s < 1) throw ConfigError("model.layer_sizes: entries must be >= 1");
  }

  if (j.contains("train")) parse_train(j.at("train"), c.train);
  if (j.contains("penalty")) c.train.penalty = parse_penalty(j.at("penalty"));

  if (j.contains("output")) {
    const json& out = j.at("output");
    require_object(out, "output");
    reject_unknown(out, {"metrics_csv", "checkpoint_path"}, "output");
    c.output.metrics_csv =
        get_or(out, "metrics_csv", c.output.metrics_csv, "output");
    c.output.checkpoint_path =
        get_or(out, "checkpoint_path", c.output.checkpoint_path, "output");
  }

  c.repeats = get_or(j, "repeats", 1, "config");
  if (c.repeats < 1) throw ConfigError("repeats: must be >= 1");
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_experiment_config(j);
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& c) {
  json j;
  json d;
  d["kind"] = c.dataset.kind;
  if (c.dataset.kind == "idx") {
    d["images"] = c.dataset.images;
    d["labels"] = c.dataset.labels;
    d["test_images"] = c.dataset.test_images;
    d["test_labels"] = c.dataset.test_labels;
  } else if (c.dataset.kind == "cifar10") {
    d["paths"] = c.dataset.paths;
    d["test_paths"] = c.dataset.test_paths;
  } else {
    d["classes"] = c.dataset.classes;
    d["dim"] = c.dataset.dim;
    d["n_per_class"] = c.dataset.n_per_class;
    d["separation"] = c.dataset.separation;
  }
  if (c.dataset.train_limit > 0) d["train_limit"] = c.dataset.train_limit;
  if (c.dataset.test_limit > 0) d["test_limit"] = c.dataset.test_limit;
  d["normalize"] = c.dataset.normalize;
  j["dataset"] = d;

  j["model"] = {{"layer_sizes", c.train.layer_sizes}};
  j["train"] = {{"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"lr_initial", c.train.lr_initial},
                {"lr_milestones", c.train.lr_milestones},
                {"lr_gamma", c.train.lr_gamma},
                {"momentum", c.train.momentum},
                {"seed", c.train.seed},
                {"spectral_refresh", c.train.spectral_refresh},
                {"metrics_interval", c.train.metrics_interval}};

  json sched;
  switch (c.train.penalty.schedule.kind) {
    case Schedule::Kind::Always: sched["kind"] = "always"; break;
    case Schedule::Kind::PowerDecay: sched["kind"] = "power_decay"; break;
    case Schedule::Kind::ExpDecay: sched["kind"] = "exp_decay"; break;
    case Schedule::Kind::LowerThreshold:
      sched["kind"] = "lower_threshold";
      break;
  }
  sched["k"] = c.train.penalty.schedule.k;
  sched["t"] = c.train.penalty.schedule.t;
  sched["m"] = c.train.penalty.schedule.m;
  j["penalty"] = {{"kind", to_string(c.train.penalty.kind)},
                  {"coefficient", c.train.penalty.coefficient},
                  {"schedule", sched},
                  {"k_fraction", c.train.penalty.k_fraction},
                  {"hill_k", c.train.penalty.hill_k == kHillAutoK
                                 ? json("auto")
                                 : json(c.train.penalty.hill_k)}};
  j["output"] = {{"metrics_csv", c.output.metrics_csv},
                 {"checkpoint_path", c.output.checkpoint_path}};
  j["repeats"] = c.repeats;
  return j;
}

}  // namespace htreg
