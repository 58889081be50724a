#include "htreg/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace htreg {

namespace {

void check_finite(const Matrix& w) {
  if (!w.allFinite()) {
    throw NonFinite("matrix contains NaN or Inf");
  }
}

// Flip column signs so the first component with magnitude above a small
// floor is positive; makes the eigensystem deterministic.
void fix_signs(Matrix& vecs) {
  for (Eigen::Index j = 0; j < vecs.cols(); ++j) {
    for (Eigen::Index i = 0; i < vecs.rows(); ++i) {
      const double c = vecs(i, j);
      if (std::abs(c) > 1e-12) {
        if (c < 0) vecs.col(j) = -vecs.col(j);
        break;
      }
    }
  }
}

// Unit vector orthogonal to the first `filled` columns of v, used to
// complete right vectors for zero singular values when rows < cols.
Vector null_completion(const Matrix& v, Eigen::Index filled) {
  const Eigen::Index dim = v.rows();
  for (Eigen::Index b = 0; b < dim; ++b) {
    Vector cand = Vector::Zero(dim);
    cand(b) = 1.0;
    for (Eigen::Index j = 0; j < filled; ++j) {
      cand -= v.col(j).dot(cand) * v.col(j);
    }
    const double norm = cand.norm();
    if (norm > 1e-6) return cand / norm;
  }
  throw ConvergenceFailure("failed to complete orthonormal basis");
}

}  // namespace

Spectrum gram_spectrum(const Matrix& w) {
  check_finite(w);
  const Eigen::Index rows = w.rows();
  const Eigen::Index cols = w.cols();
  const Eigen::Index m = std::min(rows, cols);

  Spectrum s;
  s.eigenvalues.resize(m);
  s.right_vectors.resize(cols, m);

  // Eigendecompose the smaller Gram matrix; cost scales with min-dim cubed.
  const bool direct = cols <= rows;
  const Matrix gram = direct ? Matrix(w.transpose() * w) : Matrix(w * w.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(gram);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceFailure("self-adjoint eigensolver did not converge");
  }

  // Eigen returns ascending order; store descending, clamp round-off negatives.
  for (Eigen::Index j = 0; j < m; ++j) {
    s.eigenvalues(j) = std::max(solver.eigenvalues()(m - 1 - j), 0.0);
  }
  s.lambda_max = s.eigenvalues(0);

  if (direct) {
    for (Eigen::Index j = 0; j < m; ++j) {
      s.right_vectors.col(j) = solver.eigenvectors().col(m - 1 - j);
    }
  } else {
    // Eigenvectors of W W^T are left singular vectors; map to right ones
    // via v = W^T u / sigma, completing the basis where sigma vanishes.
    for (Eigen::Index j = 0; j < m; ++j) {
      const Vector u = solver.eigenvectors().col(m - 1 - j);
      const double sigma = std::sqrt(s.eigenvalues(j));
      if (sigma > 1e-14 * std::sqrt(std::max(s.lambda_max, 1.0))) {
        Vector v = w.transpose() * u / sigma;
        const double norm = v.norm();
        if (norm > 0) v /= norm;
        s.right_vectors.col(j) = v;
      } else {
        s.right_vectors.col(j) = null_completion(s.right_vectors, j);
      }
    }
  }
  fix_signs(s.right_vectors);

  s.frobenius_sq = s.eigenvalues.sum();
  return s;
}

std::vector<double> positive_spectrum(const Spectrum& s, double rel_tol) {
  std::vector<double> out;
  if (s.lambda_max <= 0.0) return out;
  const double cut = rel_tol * s.lambda_max;
  for (Eigen::Index j = 0; j < s.eigenvalues.size(); ++j) {
    if (s.eigenvalues(j) > cut) out.push_back(s.eigenvalues(j));
  }
  return out;
}

Matrix eigenvalue_gradient(const Matrix& w, const Spectrum& s, int j) {
  const Eigen::Index m = s.eigenvalues.size();
  if (j < 0 || j >= m) {
    throw Error("eigenvalue index out of range");
  }
  const double gap_tol = 1e-9 * s.lambda_max;
  double gap = std::numeric_limits<double>::infinity();
  if (j > 0) gap = std::min(gap, s.eigenvalues(j - 1) - s.eigenvalues(j));
  if (j + 1 < m) gap = std::min(gap, s.eigenvalues(j) - s.eigenvalues(j + 1));
  if (!(gap > gap_tol)) {
    throw DegenerateEigenvalue("eigenvalue " + std::to_string(j) +
                               " is not simple");
  }
  const Vector v = s.right_vectors.col(j);
  return (2.0 * (w * v)) * v.transpose();
}

double stable_rank(const Spectrum& s) {
  if (s.lambda_max <= 0.0) {
    throw ZeroMatrix("stable rank undefined for the zero matrix");
  }
  return s.frobenius_sq / s.lambda_max;
}

double stable_rank(const Matrix& w) {
  if (w.isZero(0.0)) {
    throw ZeroMatrix("stable rank undefined for the zero matrix");
  }
  return stable_rank(gram_spectrum(w));
}

}  // namespace htreg
