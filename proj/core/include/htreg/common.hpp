#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace htreg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// spectral
struct NonFinite final : Error { using Error::Error; };
struct ConvergenceFailure final : Error { using Error::Error; };
struct DegenerateEigenvalue final : Error { using Error::Error; };
struct ZeroMatrix final : Error { using Error::Error; };

// tail estimation
struct NonPositiveSample final : Error { using Error::Error; };
struct DegenerateTail final : Error { using Error::Error; };
struct InvalidAlpha final : Error { using Error::Error; };

// regularizers
struct SpectrumTooSmall final : Error { using Error::Error; };

// training
struct ShapeMismatch final : Error { using Error::Error; };
struct NonFiniteUpdate final : Error { using Error::Error; };

// file formats
struct BadMagic final : Error { using Error::Error; };
struct TruncatedFile final : Error { using Error::Error; };
struct CountMismatch final : Error { using Error::Error; };
struct LabelOutOfRange final : Error { using Error::Error; };
struct VersionUnsupported final : Error { using Error::Error; };
struct Corrupt final : Error { using Error::Error; };

// experiment configs
struct ConfigError final : Error { using Error::Error; };

}  // namespace htreg
