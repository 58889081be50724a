#pragma once

#include <optional>
#include <string>
#include <vector>

#include "htreg/spectral.hpp"
#include "htreg/tail.hpp"

namespace htreg {

enum class PenaltyKind {
  None,
  WeightDecay,
  SpectralNorm,
  WeightedAlpha,
  StableRank,
  PowerLawPrior,
  FrechetPrior,
};

std::string to_string(PenaltyKind kind);
PenaltyKind penalty_kind_from_string(const std::string& name);

/// Epoch-windowed multiplier that weakens the penalty as training proceeds.
struct Schedule {
  enum class Kind { Always, PowerDecay, ExpDecay, LowerThreshold };
  Kind kind = Kind::Always;
  double k = 1.0;  ///< decay rate (PowerDecay / ExpDecay)
  double t = 0.0;  ///< cutoff (decay kinds) or gate threshold (LowerThreshold)
  int m = 10;      ///< epochs per decay window
};

struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::None;
  double coefficient = 0.0;
  Schedule schedule;
  double k_fraction = 0.5;  ///< fraction of min-dim used by PowerLawPrior
  int hill_k = kHillAutoK;
};

/// Per-layer diagnostics produced alongside the penalty.
struct LayerPenaltyReport {
  int layer = 0;
  double value = 0.0;  ///< p_l(W_l) before the coefficient
  std::optional<double> alpha_hat;
  double lambda_max = 0.0;
  double stable_rank = 0.0;
  bool gate_active = true;
};

/// p_l(W_l) for the given kind. Heavy-tailed kinds estimate alpha via the
/// Hill estimator on the positive spectrum and require >= 2 positive
/// eigenvalues.
double penalty_value(PenaltyKind kind, const Matrix& w, const Spectrum& s,
                     const PenaltySpec& spec);

/// Analytic gradient of penalty_value with alpha_hat treated as a constant
/// of the current step. Throws DegenerateEigenvalue when a required
/// eigenvalue is not simple; callers zero that layer's contribution.
Matrix penalty_gradient(PenaltyKind kind, const Matrix& w, const Spectrum& s,
                        const PenaltySpec& spec);

/// Decay multiplier for a 1-indexed epoch; window index is
/// floor((epoch - 1) / m) + 1.
double schedule_factor(const Schedule& schedule, int epoch);

/// Lower-threshold gate: true iff the summed per-layer penalty values are
/// >= t (always true for non-threshold schedules; -inf disables the gate).
bool threshold_gate(const PenaltySpec& spec,
                    const std::vector<double>& layer_values);

/// Hill estimate on the positive spectrum, using spec.hill_k.
TailEstimate spectrum_tail(const Spectrum& s, const PenaltySpec& spec);

/// Number of top eigenvalues the PowerLawPrior penalizes:
/// ceil(k_fraction * min(rows, cols)), clamped to the positive count.
int power_law_cut(const Spectrum& s, const PenaltySpec& spec);

}  // namespace htreg
