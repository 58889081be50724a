#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "htreg/experiment.hpp"
#include "htreg/gradcheck.hpp"

int main(int argc, char** argv) {
  CLI::App app{"heavy-tailed spectral regularization toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  auto* train = app.add_subcommand("train", "run a training experiment from a JSON config");
  train->add_option("config", config_path, "experiment config (JSON)")->required();

  std::string checkpoint_path;
  std::string report_path = "report.csv";
  auto* analyze = app.add_subcommand("analyze", "per-layer spectral report for a checkpoint");
  analyze->add_option("checkpoint", checkpoint_path, "checkpoint file")->required();
  analyze->add_option("--out", report_path, "output CSV path");

  std::uint64_t seed = 1;
  std::string corrupt_kind;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of all penalty gradients");
  gradcheck->add_option("--seed", seed, "generator seed");
  gradcheck
      ->add_option("--corrupt", corrupt_kind,
                   "inject an error into this kind's gradient (test hook)")
      ->group("");  // hidden

  CLI11_PARSE(app, argc, argv);

  if (train->parsed()) {
    return htreg::cmd_train(config_path, std::cout, std::cerr);
  }
  if (analyze->parsed()) {
    return htreg::cmd_analyze(checkpoint_path, report_path, std::cout, std::cerr);
  }
  if (gradcheck->parsed()) {
    htreg::PenaltyKind corrupt = htreg::PenaltyKind::None;
    if (!corrupt_kind.empty()) {
      try {
        corrupt = htreg::penalty_kind_from_string(corrupt_kind);
      } catch (const htreg::Error& e) {
        std::cerr << e.what() << "\n";
        return 2;
      }
    }
    return htreg::cmd_gradcheck(seed, std::cout, corrupt);
  }
  return 0;
}
