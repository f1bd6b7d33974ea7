#pragma once

// Seeded random data shared by the test binaries.  Draws are sequenced
// explicitly so results do not depend on argument evaluation order.

#include "isac/types.hpp"

#include <random>

namespace testutil {

using isac::CMat;
using isac::Complex;
using isac::CVec;
using isac::Scalar;

inline Complex randc(std::mt19937_64& rng) {
  std::normal_distribution<Scalar> n01(0.0, 1.0);
  const Scalar re = n01(rng);
  const Scalar im = n01(rng);
  return Complex(re, im);
}

inline CVec randv(std::mt19937_64& rng, Eigen::Index n) {
  CVec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = randc(rng);
  return v;
}

inline CMat randm(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
  CMat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = randc(rng);
  }
  return m;
}

inline CMat random_psd(std::mt19937_64& rng, Eigen::Index n) {
  const CMat b = randm(rng, n, n);
  return CMat(b * b.adjoint() / static_cast<Scalar>(n));
}

}  // namespace testutil
