#pragma once

#include "isac/types.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

namespace isac {

enum class ConstellationKind { Psk, Qam };

/// Symbol alphabet with unit average energy.  PSK carries the half-angle of
/// the phase wedge each symbol owns; square QAM is laid out on the odd
/// integer grid scaled to unit mean power.
struct Constellation {
  ConstellationKind kind{ConstellationKind::Psk};
  int order{4};
  Scalar psk_half_angle{kPi / 4};  // PSK only

  static Constellation psk(int order, std::optional<Scalar> half_angle = std::nullopt) {
    if (order < 2) throw ConfigError("psk constellation: order must be >= 2");
    Constellation c;
    c.kind = ConstellationKind::Psk;
    c.order = order;
    c.psk_half_angle = half_angle.value_or(kPi / order);
    return c;
  }

  static Constellation qam(int order) {
    const int side = static_cast<int>(std::lround(std::sqrt(double(order))));
    if (order < 4 || side * side != order) {
      throw ConfigError("qam constellation: order must be a perfect square >= 4");
    }
    Constellation c;
    c.kind = ConstellationKind::Qam;
    c.order = order;
    return c;
  }

  /// Side length of the QAM grid (e.g. 4 for 16-QAM).
  int qam_side() const { return static_cast<int>(std::lround(std::sqrt(double(order)))); }

  /// Half coordinate spacing of the unit-energy QAM grid.
  Scalar qam_scale() const {
    return std::sqrt(3.0 / (2.0 * (order - 1)));
  }

  /// Phase of PSK symbol 0.  QPSK uses the diagonal layout so that symbols
  /// sit at (+-1 +- 1j)/sqrt(2); other orders start on the real axis.
  Scalar psk_phase_offset() const { return order == 4 ? kPi / 4 : 0.0; }

  std::vector<Complex> points() const {
    std::vector<Complex> pts;
    pts.reserve(order);
    if (kind == ConstellationKind::Psk) {
      const Scalar off = psk_phase_offset();
      for (int k = 0; k < order; ++k) {
        const Scalar ang = 2.0 * kPi * k / order + off;
        pts.emplace_back(std::cos(ang), std::sin(ang));
      }
    } else {
      const int side = qam_side();
      const Scalar sc = qam_scale();
      for (int i = 0; i < side; ++i) {
        for (int k = 0; k < side; ++k) {
          pts.emplace_back((2 * i + 1 - side) * sc, (2 * k + 1 - side) * sc);
        }
      }
    }
    return pts;
  }
};

/// Closed angular interval in degrees.
struct AngleInterval {
  Scalar lo_deg{0};
  Scalar hi_deg{0};
  bool contains(Scalar deg) const { return deg >= lo_deg - 1e-12 && deg <= hi_deg + 1e-12; }
};

/// Full problem description: array geometry, block timing, beampattern
/// regions, power budget, communication constraints and solver weights.
/// The stacked waveform has one length-nt antenna snapshot per time sample,
/// time-major, so its dimension is ns*nt.
struct Scenario {
  // array and block timing
  int nt{4};
  int ns{16};
  int ncp{4};
  Scalar element_spacing{0.5};  // wavelengths

  // beampattern
  RVec angle_grid_deg;
  std::vector<AngleInterval> mainlobe{{-12.0, 12.0}};
  Scalar target_angle_deg{0.0};

  // power budget: per-sample power in [(1-eps), (1+eps)] * p0/nt
  Scalar p0{1.0};
  Scalar epsilon{0.3};

  // solver weights
  Scalar eta{0.01};          // zero-lag preservation weight
  Scalar lambda_g{0.5};      // sidelobe weight in the design objective
  Scalar lambda_s{-1.0};     // proximal weight; <0 means 1e-3 * lambda_g
  Scalar delta_sl_rel{1e-6}; // relative diagonal loading of the sidelobe form

  // communication
  Scalar gamma_u{20.0};  // SINR target (linear)
  Scalar sigma2{0.05};   // noise power
  Constellation constellation{Constellation::psk(4)};
  int num_symbols{16};          // L
  std::vector<CVec> channels;   // L effective channels of length ns*nt

  // seeds
  std::uint64_t channel_seed{401};
  std::uint64_t symbol_seed{402};
  std::uint64_t waveform_seed{403};

  int dim() const { return ns * nt; }
  int filter_len() const { return ns + ncp; }
  Scalar power_floor() const { return (1.0 - epsilon) * p0 / nt; }
  Scalar power_cap() const { return (1.0 + epsilon) * p0 / nt; }
  Scalar proximal_weight() const { return lambda_s < 0 ? 1e-3 * lambda_g : lambda_s; }

  void validate() const {
    std::ostringstream bad;
    if (nt < 1) bad << "nt must be >= 1; ";
    if (ns < 1) bad << "ns must be >= 1; ";
    if (ncp < 0) bad << "ncp must be >= 0; ";
    if (ncp >= ns) bad << "ncp must be < ns; ";
    if (element_spacing <= 0) bad << "element_spacing must be > 0; ";
    if (angle_grid_deg.size() < 2) bad << "angle grid needs at least two angles; ";
    for (Index i = 0; i < angle_grid_deg.size(); ++i) {
      if (std::abs(angle_grid_deg[i]) > 90.0 + 1e-12) {
        bad << "grid angle outside [-90, 90]; ";
        break;
      }
    }
    if (mainlobe.empty()) bad << "mainlobe region is empty; ";
    for (const auto& iv : mainlobe) {
      if (iv.hi_deg < iv.lo_deg) bad << "mainlobe interval has hi < lo; ";
    }
    if (std::abs(target_angle_deg) > 90.0) bad << "target angle outside [-90, 90]; ";
    if (p0 <= 0) bad << "p0 must be > 0; ";
    if (epsilon < 0 || epsilon >= 1) bad << "epsilon must be in [0, 1); ";
    if (eta < 0) bad << "eta must be >= 0; ";
    if (lambda_g < 0) bad << "lambda_g must be >= 0; ";
    if (delta_sl_rel <= 0) bad << "delta_sl_rel must be > 0; ";
    if (gamma_u <= 0) bad << "gamma_u must be > 0; ";
    if (sigma2 <= 0) bad << "sigma2 must be > 0; ";
    if (num_symbols < 1) bad << "num_symbols must be >= 1; ";
    if (static_cast<int>(channels.size()) != num_symbols) {
      bad << "channel count != num_symbols; ";
    } else {
      for (const auto& h : channels) {
        if (h.size() != dim()) {
          bad << "channel length != ns*nt; ";
          break;
        }
        if (h.norm() == 0.0) {
          bad << "zero channel vector; ";
          break;
        }
      }
    }
    const std::string msg = bad.str();
    if (!msg.empty()) throw ConfigError("scenario validation failed: " + msg);
  }
};

/// Uniform grid lo:step:hi inclusive of both ends (hi snapped onto the grid).
inline RVec uniform_angle_grid(Scalar lo, Scalar hi, Scalar step) {
  if (step <= 0 || hi <= lo) throw ConfigError("angle grid: need step > 0 and hi > lo");
  const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
  RVec g(n);
  for (int i = 0; i < n; ++i) g[i] = lo + i * step;
  return g;
}

/// Independent CN(0, scale^2) entries for each of `count` channels.
inline std::vector<CVec> random_channels(int count, int dim, std::uint64_t seed,
                                         Scalar scale = 1.0) {
  std::vector<CVec> out;
  out.reserve(count);
  std::mt19937_64 rng(seed);
  std::normal_distribution<Scalar> n01(0.0, 1.0);
  const Scalar s = scale / std::sqrt(2.0);
  for (int l = 0; l < count; ++l) {
    CVec h(dim);
    for (int m = 0; m < dim; ++m) h[m] = Complex(n01(rng) * s, n01(rng) * s);
    out.push_back(std::move(h));
  }
  return out;
}

/// Reference scenario used by the examples, tests and the default config:
/// 4 antennas, 16 samples + 4 CP, QPSK, 16 symbols per block.
inline Scenario desk_scenario() {
  Scenario sc;
  sc.nt = 4;
  sc.ns = 16;
  sc.ncp = 4;
  sc.angle_grid_deg = uniform_angle_grid(-90.0, 90.0, 1.0);
  sc.mainlobe = {{-12.0, 12.0}};
  sc.target_angle_deg = 0.0;
  sc.p0 = 1.0;
  sc.epsilon = 0.3;
  sc.eta = 0.01;
  sc.lambda_g = 0.5;
  sc.gamma_u = 20.0;
  sc.sigma2 = 0.05;
  sc.constellation = Constellation::psk(4);
  sc.num_symbols = 16;
  sc.channels = random_channels(sc.num_symbols, sc.dim(), sc.channel_seed);
  sc.validate();
  return sc;
}

/// Small, fast variant for unit tests.
inline Scenario mini_scenario() {
  Scenario sc;
  sc.nt = 2;
  sc.ns = 6;
  sc.ncp = 2;
  sc.angle_grid_deg = uniform_angle_grid(-90.0, 90.0, 5.0);
  sc.mainlobe = {{-15.0, 15.0}};
  sc.target_angle_deg = 0.0;
  sc.p0 = 1.0;
  sc.epsilon = 0.3;
  sc.eta = 0.01;
  sc.lambda_g = 0.5;
  sc.gamma_u = 10.0;
  sc.sigma2 = 0.1;
  sc.constellation = Constellation::psk(4);
  sc.num_symbols = 4;
  sc.channels = random_channels(sc.num_symbols, sc.dim(), sc.channel_seed);
  sc.validate();
  return sc;
}

}  // namespace isac
