#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "htreg/regularizers.hpp"

namespace htreg {

struct GradCheckEntry {
  std::string name;   // penalty kind or "backprop"
  std::string shape;  // e.g. "12x12"
  double max_rel_error = 0.0;
  bool passed = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  bool all_passed = false;
};

inline constexpr double kGradCheckTolerance = 1e-4;
inline constexpr double kGradCheckStep = 1e-5;

/// Central finite differences against the analytic gradients of all six
/// penalty kinds (alpha_hat frozen at the base point) on seeded 12x12 and
/// 20x30 matrices, plus a backprop check on a [4,3,2] network.
/// `corrupt` != None injects a deliberate error into that kind's analytic
/// gradient (test hook).
GradCheckReport run_gradcheck(std::uint64_t seed,
                              PenaltyKind corrupt = PenaltyKind::None);

/// Prints the report table and returns the process exit code (0 iff all
/// entries are within tolerance).
int cmd_gradcheck(std::uint64_t seed, std::ostream& out,
                  PenaltyKind corrupt = PenaltyKind::None);

}  // namespace htreg
