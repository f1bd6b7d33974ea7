#pragma once

#include "isac/linalg.hpp"
#include "isac/scenario.hpp"
#include "isac/types.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace isac {

/// Array steering vector a(theta) with a_k = exp(j 2 pi d k sin theta),
/// k = 0..nt-1, d in wavelengths.
inline CVec steering_vector(const Scenario& sc, Scalar theta_deg) {
  if (std::abs(theta_deg) > 90.0) {
    throw std::domain_error("steering_vector: angle outside [-90, 90] degrees");
  }
  CVec a(sc.nt);
  const Scalar phase = 2.0 * kPi * sc.element_spacing * std::sin(deg2rad(theta_deg));
  for (int k = 0; k < sc.nt; ++k) a[k] = std::polar(1.0, phase * k);
  return a;
}

/// Sum over a set of grid angles of w * (I_ns kron a a^H): the quadratic
/// form whose value on the stacked waveform is the beampattern energy
/// radiated into that angular region.
inline CMat angular_region_form(const Scenario& sc, std::span<const Scalar> angles_deg,
                                std::span<const Scalar> weights) {
  CMat block = CMat::Zero(sc.nt, sc.nt);
  for (std::size_t i = 0; i < angles_deg.size(); ++i) {
    const CVec a = steering_vector(sc, angles_deg[i]);
    block.noalias() += weights[i] * (a * a.adjoint());
  }
  CMat full = CMat::Zero(sc.dim(), sc.dim());
  for (int n = 0; n < sc.ns; ++n) {
    full.block(n * sc.nt, n * sc.nt, sc.nt, sc.nt) = block;
  }
  return full;
}

/// Mainlobe / sidelobe beampattern quadratic forms on the stacked waveform.
/// The sidelobe form carries diagonal loading so it is strictly positive
/// definite; `diagonal_loading` records the absolute value that was added.
struct BeampatternMatrices {
  CMat mainlobe_form;   ///< PSD, block-diagonal with identical nt x nt blocks
  CMat sidelobe_form;   ///< PD after loading
  RVec grid_weights;    ///< per-grid-angle weights (aligned with the scenario grid)
  std::vector<Scalar> mainlobe_angles_deg;
  std::vector<Scalar> sidelobe_angles_deg;
  Scalar diagonal_loading{0.0};
};

inline bool angle_in_mainlobe(const Scenario& sc, Scalar deg) {
  for (const auto& iv : sc.mainlobe) {
    if (iv.contains(deg)) return true;
  }
  return false;
}

inline BeampatternMatrices build_beampattern_matrices(const Scenario& sc) {
  BeampatternMatrices bp;
  bp.grid_weights = RVec::Ones(sc.angle_grid_deg.size());
  std::vector<Scalar> wml, wsl;
  for (Index i = 0; i < sc.angle_grid_deg.size(); ++i) {
    const Scalar deg = sc.angle_grid_deg[i];
    if (angle_in_mainlobe(sc, deg)) {
      bp.mainlobe_angles_deg.push_back(deg);
      wml.push_back(bp.grid_weights[i]);
    } else {
      bp.sidelobe_angles_deg.push_back(deg);
      wsl.push_back(bp.grid_weights[i]);
    }
  }
  if (bp.mainlobe_angles_deg.empty()) {
    throw ConfigError("beampattern: mainlobe region contains no grid angles");
  }
  if (bp.sidelobe_angles_deg.empty()) {
    throw ConfigError("beampattern: sidelobe region contains no grid angles");
  }
  bp.mainlobe_form = angular_region_form(sc, bp.mainlobe_angles_deg, wml);
  bp.sidelobe_form = angular_region_form(sc, bp.sidelobe_angles_deg, wsl);
  bp.diagonal_loading =
      sc.delta_sl_rel * bp.sidelobe_form.real().trace() / static_cast<Scalar>(sc.dim());
  bp.sidelobe_form += bp.diagonal_loading * CMat::Identity(sc.dim(), sc.dim());
  return bp;
}

/// Lag family of linear maps from the stacked waveform to filter space.
/// Pipeline per operator: combine antennas toward the target angle
/// (I kron a^T), prepend the cyclic prefix, then select the length-P window
/// at a given lag with zero padding outside the block.
///
/// Operators are indexed n = 1 .. 2P-1 with P = ns + ncp; n = P is the
/// aligned (zero-lag) window.  Own-block sidelobes use every n != P; the
/// preceding block leaks through n >= P and the following block through
/// n <= P, matching a filter sliding over a continuous block stream.
struct ShiftOperators {
  int ns{0}, nt{0}, ncp{0};
  CVec steer;                 ///< a(target angle)
  std::vector<CMat> ops;      ///< 2P-1 maps, each P x (ns*nt)
  int zero_lag_index{0};      ///< = P, 1-based

  int window_len() const { return ns + ncp; }
  int count() const { return static_cast<int>(ops.size()); }

  /// 1-based access mirroring the lag index convention.
  const CMat& at(int n) const {
    if (n < 1 || n > count()) throw std::out_of_range("ShiftOperators::at: lag index");
    return ops[static_cast<std::size_t>(n - 1)];
  }

  /// CP-extended, antenna-combined block; equals the zero-lag operator image.
  CVec combined_block(const CVec& s) const {
    const int p = window_len();
    CVec x(ns);
    for (int n = 0; n < ns; ++n) x[n] = steer.transpose() * s.segment(n * nt, nt);
    CVec y(p);
    y.head(ncp) = x.tail(ncp);
    y.tail(ns) = x;
    return y;
  }
};

inline ShiftOperators build_shift_operators(const Scenario& sc) {
  ShiftOperators so;
  so.ns = sc.ns;
  so.nt = sc.nt;
  so.ncp = sc.ncp;
  so.steer = steering_vector(sc, sc.target_angle_deg);
  const int p = so.window_len();
  so.zero_lag_index = p;

  // Dense zero-lag map: row u holds the antenna combiner for the time sample
  // that occupies extended position u.
  CMat aligned = CMat::Zero(p, sc.dim());
  for (int u = 0; u < p; ++u) {
    const int time = (u - sc.ncp + sc.ns) % sc.ns;
    aligned.block(u, time * sc.nt, 1, sc.nt) = so.steer.transpose();
  }

  so.ops.reserve(2 * p - 1);
  for (int n = 1; n <= 2 * p - 1; ++n) {
    const int lag = n - p;  // window offset relative to the aligned position
    CMat g = CMat::Zero(p, sc.dim());
    for (int u = 0; u < p; ++u) {
      const int src = u + lag;
      if (src >= 0 && src < p) g.row(u) = aligned.row(src);
    }
    so.ops.push_back(std::move(g));
  }
  return so;
}

/// Coordinate bookkeeping for the stacked variable [waveform; t].  The
/// epigraph scalar t lives in the last coordinate and stays real.
struct SelectionOperators {
  int n{0};  ///< waveform dimension

  CVec extract_waveform(const CVec& x) const { return x.head(n); }
  Complex extract_t(const CVec& x) const { return x[n]; }

  CVec stack(const CVec& s, Scalar t) const {
    CVec x(n + 1);
    x.head(n) = s;
    x[n] = Complex(t, 0.0);
    return x;
  }

  /// Embed a waveform-space quadratic form into stacked space; the t row
  /// and column are zero.
  CMat pad_waveform_form(const CMat& m) const {
    CMat out = CMat::Zero(n + 1, n + 1);
    out.topLeftCorner(n, n) = m;
    return out;
  }
};

inline SelectionOperators build_selection_operators(const Scenario& sc) {
  return SelectionOperators{sc.dim()};
}

/// Eigendecomposition of the padded sidelobe form [[sidelobe, 0], [0, 0]]
/// assembled directly from the waveform-space decomposition, so the zero
/// eigenvalue is carried exactly by the t axis (first column, ascending
/// order: the loaded sidelobe form is strictly positive definite).
inline EigCache padded_sidelobe_eig(const EigCache& sl) {
  const Index n = sl.dim();
  EigCache out;
  out.q = CMat::Zero(n + 1, n + 1);
  out.q(n, 0) = Complex(1.0, 0.0);
  out.q.block(0, 1, n, n) = sl.q;
  out.a = RVec::Zero(n + 1);
  out.a.tail(n) = sl.a;
  out.source = "padded(" + sl.source + ")";
  return out;
}

/// Everything derived from a scenario that the solvers need, built once:
/// beampattern forms, lag operators, selection helpers, cached
/// eigendecompositions and the certified objective lower bound.
struct ProblemModel {
  Scenario scenario;
  BeampatternMatrices bp;
  ShiftOperators shift;
  SelectionOperators sel;
  EigCache sidelobe_eig;        ///< eig of the loaded sidelobe form
  EigCache stacked_eig;         ///< eig of the padded form on [s; t]
  EigCache peak_eig;            ///< eig of eta * Gp^H Gp (zero-lag preservation)
  Scalar ratio_upper_bound{0};  ///< max generalized eigenvalue of the two forms
};

inline ProblemModel build_model(Scenario sc) {
  sc.validate();
  ProblemModel m;
  m.scenario = std::move(sc);
  m.bp = build_beampattern_matrices(m.scenario);
  m.shift = build_shift_operators(m.scenario);
  m.sel = build_selection_operators(m.scenario);
  m.sidelobe_eig = hermitian_eig(m.bp.sidelobe_form, "sidelobe_form");
  m.stacked_eig = padded_sidelobe_eig(m.sidelobe_eig);
  const CMat& gp = m.shift.at(m.shift.zero_lag_index);
  m.peak_eig = hermitian_eig(CMat(m.scenario.eta * (gp.adjoint() * gp)), "peak_form");
  m.ratio_upper_bound =
      max_generalized_eigenvalue(m.bp.mainlobe_form, m.bp.sidelobe_form);
  return m;
}

/// Mainlobe-to-sidelobe energy ratio of a waveform (linear scale).
inline Scalar beampattern_ratio(const CVec& s, const BeampatternMatrices& bp) {
  const Scalar num = (s.adjoint() * bp.mainlobe_form * s).value().real();
  const Scalar den = (s.adjoint() * bp.sidelobe_form * s).value().real();
  if (den <= 0.0) throw std::domain_error("beampattern_ratio: degenerate waveform");
  return num / den;
}

}  // namespace isac
