#include "htreg/regularizers.hpp"

#include <cmath>
#include <limits>

namespace htreg {

std::string to_string(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::None: return "none";
    case PenaltyKind::WeightDecay: return "weight_decay";
    case PenaltyKind::SpectralNorm: return "spectral_norm";
    case PenaltyKind::WeightedAlpha: return "weighted_alpha";
    case PenaltyKind::StableRank: return "stable_rank";
    case PenaltyKind::PowerLawPrior: return "power_law_prior";
    case PenaltyKind::FrechetPrior: return "frechet_prior";
  }
  return "none";
}

PenaltyKind penalty_kind_from_string(const std::string& name) {
  if (name == "none") return PenaltyKind::None;
  if (name == "weight_decay") return PenaltyKind::WeightDecay;
  if (name == "spectral_norm") return PenaltyKind::SpectralNorm;
  if (name == "weighted_alpha") return PenaltyKind::WeightedAlpha;
  if (name == "stable_rank") return PenaltyKind::StableRank;
  if (name == "power_law_prior") return PenaltyKind::PowerLawPrior;
  if (name == "frechet_prior") return PenaltyKind::FrechetPrior;
  throw ConfigError("unknown penalty kind: " + name);
}

TailEstimate spectrum_tail(const Spectrum& s, const PenaltySpec& spec) {
  std::vector<double> pos = positive_spectrum(s);
  if (pos.size() < 2) {
    throw SpectrumTooSmall("need >= 2 positive eigenvalues, got " +
                           std::to_string(pos.size()));
  }
  return hill_estimator(std::move(pos), spec.hill_k);
}

int power_law_cut(const Spectrum& s, const PenaltySpec& spec) {
  const int min_dim = static_cast<int>(s.eigenvalues.size());
  const int positive = static_cast<int>(positive_spectrum(s).size());
  const int cut = static_cast<int>(std::ceil(spec.k_fraction * min_dim));
  return std::min(std::max(cut, 1), positive);
}

double penalty_value(PenaltyKind kind, const Matrix& w, const Spectrum& s,
                     const PenaltySpec& spec) {
  switch (kind) {
    case PenaltyKind::None:
      return 0.0;
    case PenaltyKind::WeightDecay:
      return 0.5 * w.squaredNorm();
    case PenaltyKind::SpectralNorm:
      return 0.5 * s.lambda_max;
    case PenaltyKind::StableRank:
      return stable_rank(s);
    case PenaltyKind::WeightedAlpha: {
      const TailEstimate t = spectrum_tail(s, spec);
      return t.alpha_hat * std::log(s.lambda_max);
    }
    case PenaltyKind::PowerLawPrior: {
      const TailEstimate t = spectrum_tail(s, spec);
      const int cut = power_law_cut(s, spec);
      double log_sum = 0.0;
      for (int j = 0; j < cut; ++j) log_sum += std::log(s.eigenvalues(j));
      return t.alpha_hat * log_sum;
    }
    case PenaltyKind::FrechetPrior: {
      const TailEstimate t = spectrum_tail(s, spec);
      return std::pow(s.lambda_max, -t.alpha_hat);
    }
  }
  return 0.0;
}

Matrix penalty_gradient(PenaltyKind kind, const Matrix& w, const Spectrum& s,
                        const PenaltySpec& spec) {
  switch (kind) {
    case PenaltyKind::None:
      return Matrix::Zero(w.rows(), w.cols());
    case PenaltyKind::WeightDecay:
      return w;
    case PenaltyKind::SpectralNorm:
      return 0.5 * eigenvalue_gradient(w, s, 0);
    case PenaltyKind::StableRank: {
      const double lmax = s.lambda_max;
      if (lmax <= 0.0) throw ZeroMatrix("stable rank gradient at zero matrix");
      return 2.0 / lmax * w -
             (s.frobenius_sq / (lmax * lmax)) * eigenvalue_gradient(w, s, 0);
    }
    case PenaltyKind::WeightedAlpha: {
      const TailEstimate t = spectrum_tail(s, spec);
      return (t.alpha_hat / s.lambda_max) * eigenvalue_gradient(w, s, 0);
    }
    case PenaltyKind::PowerLawPrior: {
      const TailEstimate t = spectrum_tail(s, spec);
      const int cut = power_law_cut(s, spec);
      Matrix grad = Matrix::Zero(w.rows(), w.cols());
      for (int j = 0; j < cut; ++j) {
        grad += eigenvalue_gradient(w, s, j) / s.eigenvalues(j);
      }
      return t.alpha_hat * grad;
    }
    case PenaltyKind::FrechetPrior: {
      const TailEstimate t = spectrum_tail(s, spec);
      return -t.alpha_hat * std::pow(s.lambda_max, -t.alpha_hat - 1.0) *
             eigenvalue_gradient(w, s, 0);
    }
  }
  return Matrix::Zero(w.rows(), w.cols());
}

double schedule_factor(const Schedule& schedule, int epoch) {
  const int window = (epoch - 1) / schedule.m + 1;
  switch (schedule.kind) {
    case Schedule::Kind::Always:
    case Schedule::Kind::LowerThreshold:
      return 1.0;
    case Schedule::Kind::PowerDecay: {
      const double f = std::pow(static_cast<double>(window), -schedule.k);
      return f > schedule.t ? f : 0.0;
    }
    case Schedule::Kind::ExpDecay: {
      const double f = std::exp(-schedule.k * window);
      return f > schedule.t ? f : 0.0;
    }
  }
  return 1.0;
}

bool threshold_gate(const PenaltySpec& spec,
                    const std::vector<double>& layer_values) {
  if (spec.schedule.kind != Schedule::Kind::LowerThreshold) return true;
  double sum = 0.0;
  for (double v : layer_values) sum += v;
  return sum >= spec.schedule.t;
}

}  // namespace htreg
