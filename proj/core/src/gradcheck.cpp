#include "htreg/gradcheck.hpp"

#include <cmath>
#include <ostream>

#include "htreg/nn.hpp"
#include "htreg/rng.hpp"

namespace htreg {

namespace {

// Relative error of one gradient against another, measured against the
// larger infinity norm so near-cancelling entries do not dominate.
double grad_rel_error(const Matrix& a, const Matrix& b) {
  const double scale = std::max({a.cwiseAbs().maxCoeff(),
                                 b.cwiseAbs().maxCoeff(), 1e-6});
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

Matrix random_matrix(int rows, int cols, Rng& rng) {
  Matrix w(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) w(i, j) = rng.uniform(-1.0, 1.0);
  }
  return w;
}

// Penalty value with alpha_hat (and the PowerLawPrior cut) frozen at the
// base point, so finite differences probe only the spectral part.
double frozen_value(PenaltyKind kind, const Matrix& w, double alpha0, int cut) {
  const Spectrum s = gram_spectrum(w);
  switch (kind) {
    case PenaltyKind::None:
      return 0.0;
    case PenaltyKind::WeightDecay:
      return 0.5 * w.squaredNorm();
    case PenaltyKind::SpectralNorm:
      return 0.5 * s.lambda_max;
    case PenaltyKind::StableRank:
      return s.frobenius_sq / s.lambda_max;
    case PenaltyKind::WeightedAlpha:
      return alpha0 * std::log(s.lambda_max);
    case PenaltyKind::PowerLawPrior: {
      double log_sum = 0.0;
      for (int j = 0; j < cut; ++j) log_sum += std::log(s.eigenvalues(j));
      return alpha0 * log_sum;
    }
    case PenaltyKind::FrechetPrior:
      return std::pow(s.lambda_max, -alpha0);
  }
  return 0.0;
}

GradCheckEntry check_penalty(PenaltyKind kind, const Matrix& w0,
                             bool corrupt) {
  GradCheckEntry entry;
  entry.name = to_string(kind);
  entry.shape = std::to_string(w0.rows()) + "x" + std::to_string(w0.cols());

  PenaltySpec spec;
  spec.kind = kind;
  const Spectrum s0 = gram_spectrum(w0);
  double alpha0 = 0.0;
  int cut = 0;
  if (kind == PenaltyKind::WeightedAlpha || kind == PenaltyKind::PowerLawPrior ||
      kind == PenaltyKind::FrechetPrior) {
    alpha0 = spectrum_tail(s0, spec).alpha_hat;
    cut = power_law_cut(s0, spec);
  }

  Matrix analytic = penalty_gradient(kind, w0, s0, spec);
  if (corrupt) analytic(0, 0) += 1e-2;

  Matrix w = w0;
  Matrix fd(w.rows(), w.cols());
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      const double orig = w(i, j);
      w(i, j) = orig + kGradCheckStep;
      const double plus = frozen_value(kind, w, alpha0, cut);
      w(i, j) = orig - kGradCheckStep;
      const double minus = frozen_value(kind, w, alpha0, cut);
      w(i, j) = orig;
      fd(i, j) = (plus - minus) / (2.0 * kGradCheckStep);
    }
  }
  entry.max_rel_error = grad_rel_error(analytic, fd);
  entry.passed = entry.max_rel_error <= kGradCheckTolerance;
  return entry;
}

GradCheckEntry check_backprop(std::uint64_t seed) {
  GradCheckEntry entry;
  entry.name = "backprop";
  entry.shape = "[4,3,2]";

  MlpModel model = init_mlp({4, 3, 2}, seed);
  Rng rng(mix_seed(seed, 7));
  const int batch = 5;
  Matrix x(batch, 4);
  std::vector<int> y(batch);
  for (int i = 0; i < batch; ++i) {
    for (int j = 0; j < 4; ++j) x(i, j) = rng.uniform01();
    y[i] = static_cast<int>(rng.below(2));
  }

  Gradients grads;
  loss_and_grads(model, x, y, &grads);

  double max_diff = 0.0;
  double scale = 1e-6;
  auto probe = [&](double& param, double analytic) {
    const double orig = param;
    param = orig + kGradCheckStep;
    const double plus = loss_and_grads(model, x, y, nullptr);
    param = orig - kGradCheckStep;
    const double minus = loss_and_grads(model, x, y, nullptr);
    param = orig;
    const double fd = (plus - minus) / (2.0 * kGradCheckStep);
    max_diff = std::max(max_diff, std::abs(analytic - fd));
    scale = std::max({scale, std::abs(analytic), std::abs(fd)});
  };
  for (int l = 0; l < model.num_layers(); ++l) {
    for (Eigen::Index i = 0; i < model.weights[l].rows(); ++i) {
      for (Eigen::Index j = 0; j < model.weights[l].cols(); ++j) {
        probe(model.weights[l](i, j), grads.weights[l](i, j));
      }
    }
    for (Eigen::Index j = 0; j < model.biases[l].size(); ++j) {
      probe(model.biases[l](j), grads.biases[l](j));
    }
  }
  entry.max_rel_error = max_diff / scale;
  entry.passed = entry.max_rel_error <= kGradCheckTolerance;
  return entry;
}

}  // namespace

GradCheckReport run_gradcheck(std::uint64_t seed, PenaltyKind corrupt) {
  GradCheckReport report;
  Rng rng(seed);
  const Matrix square = random_matrix(12, 12, rng);
  const Matrix wide = random_matrix(20, 30, rng);

  const PenaltyKind kinds[] = {
      PenaltyKind::WeightDecay,  PenaltyKind::SpectralNorm,
      PenaltyKind::WeightedAlpha, PenaltyKind::StableRank,
      PenaltyKind::PowerLawPrior, PenaltyKind::FrechetPrior,
  };
  for (PenaltyKind kind : kinds) {
    report.entries.push_back(check_penalty(kind, square, kind == corrupt));
    report.entries.push_back(check_penalty(kind, wide, kind == corrupt));
  }
  report.entries.push_back(check_backprop(seed));

  report.all_passed = true;
  for (const auto& e : report.entries) {
    if (!e.passed) report.all_passed = false;
  }
  return report;
}

int cmd_gradcheck(std::uint64_t seed, std::ostream& out, PenaltyKind corrupt) {
  const GradCheckReport report = run_gradcheck(seed, corrupt);
  out << "gradient check (tolerance " << kGradCheckTolerance << ", step "
      << kGradCheckStep << ", seed " << seed << ")\n";
  for (const auto& e : report.entries) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "  %-16s %-8s max_rel_err %.3e  %s\n",
                  e.name.c_str(), e.shape.c_str(), e.max_rel_error,
                  e.passed ? "ok" : "FAIL");
    out << buf;
  }
  if (!report.all_passed) {
    for (const auto& e : report.entries) {
      if (!e.passed) {
        out << "FAILED: " << e.name << " on " << e.shape << "\n";
      }
    }
    return 1;
  }
  out << "all gradients within tolerance\n";
  return 0;
}

}  // namespace htreg
