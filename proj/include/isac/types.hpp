#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace isac {

using Scalar = double;
using Complex = std::complex<Scalar>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;
using Eigen::Index;

inline constexpr Scalar kPi = std::numbers::pi_v<Scalar>;

inline Scalar deg2rad(Scalar deg) { return deg * kPi / 180.0; }
inline Scalar db10(Scalar x) { return 10.0 * std::log10(x); }
inline Scalar db20(Scalar x) { return 20.0 * std::log10(x); }

/// Deterministic 64-bit mixer used to derive independent sub-seeds
/// (per block, per shard, per element) from one master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Scenario or option file is malformed or self-inconsistent.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A constraint system encountered by a solver has no feasible point.
struct InfeasibleError : std::runtime_error {
  explicit InfeasibleError(const std::string& msg) : std::runtime_error(msg) {}
};

/// An iterative kernel failed to converge (bracket blow-up, stalled loop).
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A property the solver guarantees by construction was observed broken.
/// Reaching this indicates an implementation bug, not a bad input.
struct SolverConsistencyError : std::runtime_error {
  explicit SolverConsistencyError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace isac
