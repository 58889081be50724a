#pragma once

#include <vector>

#include "htreg/common.hpp"

namespace htreg {

/// Eigensystem of the Gram matrix W^T W: the squared singular values of W,
/// descending, paired with unit right singular vectors.
struct Spectrum {
  Vector eigenvalues;    ///< descending, clamped to >= 0; length min(rows, cols)
  Matrix right_vectors;  ///< cols x min(rows, cols); column j pairs with eigenvalues[j]
  double frobenius_sq = 0.0;  ///< sum of eigenvalues
  double lambda_max = 0.0;    ///< eigenvalues[0]
};

/// Full eigensystem of W^T W. Solves the smaller of W^T W / W W^T and maps
/// vectors through W. Vector signs are fixed so the first nonzero component
/// is positive.
Spectrum gram_spectrum(const Matrix& w);

/// Eigenvalues above rel_tol * lambda_max, descending. Empty when
/// lambda_max == 0.
std::vector<double> positive_spectrum(const Spectrum& s, double rel_tol = 1e-12);

/// Gradient of eigenvalues[j] of W^T W with respect to W: 2 W v_j v_j^T.
/// Requires eigenvalue j to be simple (gap > 1e-9 * lambda_max).
Matrix eigenvalue_gradient(const Matrix& w, const Spectrum& s, int j);

/// ||W||_F^2 / ||W||_2^2, computed from the spectrum.
double stable_rank(const Spectrum& s);
double stable_rank(const Matrix& w);

}  // namespace htreg
