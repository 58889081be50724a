#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "htreg/experiment.hpp"
#include "htreg/gradcheck.hpp"

using namespace htreg;
using nlohmann::json;

namespace {

const std::filesystem::path kTmp =
    std::filesystem::temp_directory_path() / "htreg_harness_test";

json blobs_config(const std::string& tag) {
  std::filesystem::create_directories(kTmp);
  json j;
  j["dataset"] = {{"kind", "blobs"}, {"classes", 2},    {"dim", 3},
                  {"n_per_class", 60}, {"separation", 4.0}};
  j["model"] = {{"layer_sizes", {3, 8, 2}}};
  j["train"] = {{"epochs", 5},      {"batch_size", 16}, {"lr_initial", 0.2},
                {"lr_milestones", json::array()},       {"lr_gamma", 0.5},
                {"seed", 11}};
  j["penalty"] = {{"kind", "none"}};
  j["output"] = {
      {"metrics_csv", (kTmp / (tag + "_metrics.csv")).string()},
      {"checkpoint_path", (kTmp / (tag + "_model.htrw")).string()}};
  j["repeats"] = 1;
  return j;
}

std::string write_config(const json& j, const std::string& name) {
  std::filesystem::create_directories(kTmp);
  const auto path = (kTmp / name).string();
  std::ofstream out(path, std::ios::trunc);
  out << j.dump(2);
  return path;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

TEST_CASE("config validation rejects unknown keys and bad values") {
  json j = blobs_config("val");
  CHECK_NOTHROW(parse_experiment_config(j));

  json unknown = j;
  unknown["optimizer"] = "adam";
  CHECK_THROWS_AS(parse_experiment_config(unknown), ConfigError);

  json nested = j;
  nested["train"]["warmup"] = 3;
  CHECK_THROWS_AS(parse_experiment_config(nested), ConfigError);

  json missing = j;
  missing.erase("model");
  CHECK_THROWS_AS(parse_experiment_config(missing), ConfigError);

  json bad_lr = j;
  bad_lr["train"]["lr_initial"] = -0.1;
  CHECK_THROWS_AS(parse_experiment_config(bad_lr), ConfigError);

  json bad_milestones = j;
  bad_milestones["train"]["lr_milestones"] = {4, 3};
  CHECK_THROWS_AS(parse_experiment_config(bad_milestones), ConfigError);

  json bad_kind = j;
  bad_kind["penalty"]["kind"] = "lasso";
  CHECK_THROWS_AS(parse_experiment_config(bad_kind), ConfigError);

  json bad_gate = j;
  bad_gate["penalty"] = {{"kind", "frechet_prior"},
                         {"coefficient", 1e-4},
                         {"schedule", {{"kind", "lower_threshold"}, {"t", 1.0}}}};
  CHECK_THROWS_AS(parse_experiment_config(bad_gate), ConfigError);

  json hill = j;
  hill["penalty"] = {{"kind", "weighted_alpha"}, {"coefficient", 1e-5},
                     {"hill_k", "auto"}};
  CHECK(parse_experiment_config(hill).train.penalty.hill_k == kHillAutoK);
  hill["penalty"]["hill_k"] = 0;
  CHECK_THROWS_AS(parse_experiment_config(hill), ConfigError);
}

TEST_CASE("cmd_train exit codes") {
  std::ostringstream out, err;
  CHECK(cmd_train((kTmp / "no_such_config.json").string(), out, err) == 2);
  CHECK(err.str().find("config error") != std::string::npos);

  const auto bad = write_config(json{{"dataset", 1}}, "bad.json");
  std::ostringstream out2, err2;
  CHECK(cmd_train(bad, out2, err2) == 2);
}

TEST_CASE("cmd_train writes metrics, checkpoint, and summary") {
  const auto path = write_config(blobs_config("run"), "run.json");
  std::ostringstream out, err;
  REQUIRE(cmd_train(path, out, err) == 0);

  const auto metrics = (kTmp / "run_metrics.seed11.csv").string();
  REQUIRE(std::filesystem::exists(metrics));
  const std::string csv = read_file(metrics);
  CHECK(csv.rfind("# htreg-metrics schema=1", 0) == 0);
  CHECK(csv.find("epoch,train_loss,test_loss,test_acc,lr,penalty_total,"
                 "weighted_alpha_total,alpha_hat_1") != std::string::npos);

  REQUIRE(std::filesystem::exists(kTmp / "run_model.seed11.htrw"));
  REQUIRE(std::filesystem::exists(kTmp / "run_model.seed11.htrw.json"));
  REQUIRE(std::filesystem::exists(kTmp / "run_metrics.summary.csv"));

  // checkpoint metadata echoes the config
  const auto [model, meta] =
      load_checkpoint((kTmp / "run_model.seed11.htrw").string());
  CHECK(model.layer_sizes == std::vector<int>{3, 8, 2});
  CHECK(meta.at("config").at("model").at("layer_sizes")[0] == 3);
}

TEST_CASE("identical config and seed give byte-identical CSVs") {
  const auto path = write_config(blobs_config("det"), "det.json");
  std::ostringstream out, err;
  REQUIRE(cmd_train(path, out, err) == 0);
  const std::string first = read_file((kTmp / "det_metrics.seed11.csv").string());
  REQUIRE(cmd_train(path, out, err) == 0);
  const std::string second = read_file((kTmp / "det_metrics.seed11.csv").string());
  CHECK(first == second);
}

TEST_CASE("summary mean and stderr match an independent recomputation") {
  json j = blobs_config("rep");
  j["repeats"] = 3;
  const auto path = write_config(j, "rep.json");
  std::ostringstream out, err;
  REQUIRE(cmd_train(path, out, err) == 0);

  // recompute final accuracies from the per-run CSVs
  std::vector<double> accs;
  for (int seed = 11; seed <= 13; ++seed) {
    const auto metrics =
        (kTmp / ("rep_metrics.seed" + std::to_string(seed) + ".csv")).string();
    std::ifstream in(metrics);
    std::string line, last;
    while (std::getline(in, line)) {
      if (!line.empty() && line[0] != '#' && line[0] != 'e') last = line;
    }
    accs.push_back(std::stod(csv_fields(last)[3]));
  }
  const double mean = (accs[0] + accs[1] + accs[2]) / 3.0;
  double var = 0.0;
  for (double a : accs) var += (a - mean) * (a - mean);
  const double stderr_val = std::sqrt(var / 2.0) / std::sqrt(3.0);

  std::ifstream sum((kTmp / "rep_metrics.summary.csv").string());
  std::string line;
  std::getline(sum, line);  // comment
  std::getline(sum, line);  // header
  std::getline(sum, line);
  const auto fields = csv_fields(line);
  CHECK(std::stod(fields[2]) == 3);
  CHECK(std::abs(std::stod(fields[3]) - mean) <= 1e-12);
  CHECK(std::abs(std::stod(fields[4]) - stderr_val) <= 1e-12);
}

TEST_CASE("cmd_analyze reports the hand-computable spectrum") {
  std::filesystem::create_directories(kTmp);
  const double e = std::exp(1.0);
  MlpModel m;
  m.layer_sizes = {4, 4};
  Matrix w = Matrix::Zero(4, 4);
  w(0, 0) = e;
  w(1, 1) = e;
  w(2, 2) = 1.0;
  w(3, 3) = 1.0;
  m.weights = {w};
  m.biases = {Vector::Zero(4)};
  const auto ckpt = (kTmp / "diag.htrw").string();
  save_checkpoint(m, nlohmann::json::object(), ckpt);

  const auto report = (kTmp / "diag_report.csv").string();
  std::ostringstream out, err;
  REQUIRE(cmd_analyze(ckpt, report, out, err) == 0);

  std::ifstream in(report);
  std::string line;
  std::getline(in, line);  // comment
  std::getline(in, line);  // header
  std::getline(in, line);  // layer row
  const auto fields = csv_fields(line);
  CHECK(std::stod(fields[3]) == doctest::Approx(std::exp(2.0)));  // lambda_max
  CHECK(std::stod(fields[6]) == doctest::Approx(1.5));            // alpha_hat
  CHECK(std::stod(fields[7]) == doctest::Approx(3.0));  // weighted alpha
  std::getline(in, line);                               // total row
  CHECK(line.rfind("total", 0) == 0);
  const auto total = csv_fields(line);
  CHECK(std::stod(total.back()) == doctest::Approx(3.0));
}

TEST_CASE("cmd_analyze marks degenerate layers and keeps other stats") {
  std::filesystem::create_directories(kTmp);
  MlpModel m;
  m.layer_sizes = {3, 3};
  m.weights = {Matrix::Identity(3, 3)};
  m.biases = {Vector::Zero(3)};
  const auto ckpt = (kTmp / "identity.htrw").string();
  save_checkpoint(m, nlohmann::json::object(), ckpt);

  const auto report = (kTmp / "identity_report.csv").string();
  std::ostringstream out, err;
  REQUIRE(cmd_analyze(ckpt, report, out, err) == 0);
  const std::string csv = read_file(report);
  CHECK(csv.find("degenerate") != std::string::npos);
  CHECK(csv.find("1,3,3,1,3,3,degenerate") != std::string::npos);
}

TEST_CASE("cmd_analyze exit code on a missing checkpoint") {
  std::ostringstream out, err;
  CHECK(cmd_analyze((kTmp / "missing.htrw").string(),
                    (kTmp / "r.csv").string(), out, err) == 1);
}

TEST_CASE("gradcheck passes and is deterministic; corruption is caught") {
  std::ostringstream out1, out2;
  CHECK(cmd_gradcheck(1, out1) == 0);
  CHECK(cmd_gradcheck(1, out2) == 0);
  CHECK(out1.str() == out2.str());

  std::ostringstream out3;
  CHECK(cmd_gradcheck(1, out3, PenaltyKind::PowerLawPrior) == 1);
  CHECK(out3.str().find("FAILED: power_law_prior") != std::string::npos);
}
