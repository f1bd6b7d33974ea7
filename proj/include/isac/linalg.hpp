#pragma once

#include "isac/types.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace isac {

/// Cached Hermitian eigendecomposition M = Q diag(a) Q^H with `a` real,
/// nonnegative and ascending.  The solvers rotate subproblems into this
/// basis once and then work coordinate-wise.
struct EigCache {
  CMat q;              ///< unitary eigenvector matrix
  RVec a;              ///< eigenvalues, ascending, clamped at zero
  std::string source;  ///< human-readable tag of the decomposed matrix

  Index dim() const { return a.size(); }

  /// Reconstruction error ||Q diag(a) Q^H - M|| / max(1, ||M||).
  Scalar reconstruction_error(const CMat& m) const {
    const CMat r = q * a.asDiagonal() * q.adjoint() - m;
    return r.norm() / std::max(1.0, m.norm());
  }
};

/// Decompose a Hermitian PSD matrix.  Rejects visibly non-Hermitian input
/// and clamps rounding-level negative eigenvalues to zero; a genuinely
/// negative spectrum is reported as a domain error.
inline EigCache hermitian_eig(const CMat& m, std::string source = "",
                              Scalar hermitian_tol = 1e-10) {
  const Scalar scale = std::max(1.0, m.norm());
  if ((m - m.adjoint()).norm() > hermitian_tol * scale) {
    throw std::domain_error("hermitian_eig: matrix is not Hermitian (" + source + ")");
  }
  Eigen::SelfAdjointEigenSolver<CMat> es(m);
  if (es.info() != Eigen::Success) {
    throw DivergenceError("hermitian_eig: eigensolver failed (" + source + ")");
  }
  EigCache cache;
  cache.q = es.eigenvectors();
  cache.a = es.eigenvalues();
  cache.source = std::move(source);
  for (Index i = 0; i < cache.a.size(); ++i) {
    if (cache.a[i] < -hermitian_tol * scale) {
      throw std::domain_error("hermitian_eig: matrix has a negative eigenvalue (" +
                              cache.source + ")");
    }
    if (cache.a[i] < 0.0) cache.a[i] = 0.0;
  }
  return cache;
}

/// Largest generalized eigenvalue of (A, B) with B Hermitian positive
/// definite.  Used as an independent certified bound, so it deliberately
/// goes through Eigen's generalized solver rather than any cached path.
inline Scalar max_generalized_eigenvalue(const CMat& a, const CMat& b) {
  Eigen::GeneralizedSelfAdjointEigenSolver<CMat> es(a, b);
  if (es.info() != Eigen::Success) {
    throw DivergenceError("max_generalized_eigenvalue: solver failed");
  }
  return es.eigenvalues().maxCoeff();
}

}  // namespace isac
