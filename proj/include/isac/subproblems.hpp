#pragma once

#include "isac/ci.hpp"
#include "isac/diagnostics.hpp"
#include "isac/linalg.hpp"
#include "isac/model.hpp"
#include "isac/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace isac {

struct RootFindOptions {
  Scalar tol{1e-10};          ///< stop when |f| drops below this
  Scalar bracket_cap{1e12};   ///< give up growing the bracket here
  int max_newton{8};          ///< polish steps when a derivative is supplied
};

/// Root of a continuous non-increasing f on [0, inf) with f(0) > 0.
/// Bracket is grown geometrically until the sign flips, then bisected;
/// an optional derivative enables a guarded Newton polish.
inline Scalar solve_monotone_root(const std::function<Scalar(Scalar)>& f,
                                  const std::function<Scalar(Scalar)>& fprime = nullptr,
                                  const RootFindOptions& opts = {}) {
  const Scalar f0 = f(0.0);
  if (!(f0 > 0.0)) {
    throw std::domain_error("solve_monotone_root: f(0) <= 0, unconstrained case belongs to caller");
  }
  Scalar lo = 0.0, flo = f0;
  Scalar hi = 1.0;
  Scalar fhi = f(hi);
  while (fhi > 0.0) {
    lo = hi;
    flo = fhi;
    hi *= 2.0;
    if (hi > opts.bracket_cap) {
      throw DivergenceError("solve_monotone_root: no sign change below bracket cap");
    }
    fhi = f(hi);
  }
  (void)flo;
  Scalar mid = hi, fmid = fhi;
  for (int it = 0; it < 2000; ++it) {
    mid = 0.5 * (lo + hi);
    fmid = f(mid);
    if (std::abs(fmid) <= opts.tol || (hi - lo) <= 1e-16 * std::max(Scalar(1), lo)) break;
    if (fmid > 0.0) lo = mid; else hi = mid;
  }
  if (fprime) {
    Scalar x = mid;
    for (int it = 0; it < opts.max_newton; ++it) {
      const Scalar fx = f(x);
      if (std::abs(fx) <= opts.tol * 1e-2) break;
      const Scalar d = fprime(x);
      if (!(std::abs(d) > 0.0)) break;
      const Scalar step = x - fx / d;
      if (!(step >= lo && step <= hi)) break;  // keep inside the certified bracket
      x = step;
    }
    if (std::abs(f(x)) <= std::abs(fmid)) mid = x;
  }
  return mid;
}

/// min ||x - c||^2  s.t.  sum_n a_n |x_n|^2 - Re{beta^H x} <= 0, a_n >= 0.
/// Coordinates are assumed already rotated into the eigenbasis of the
/// quadratic form.  The dual function f(lambda) below is non-increasing, so
/// a single root bracket suffices.
struct RotatedQcInstance {
  RVec a;
  CVec beta;
  CVec center;
};

struct RotatedQcSolution {
  CVec x;
  Scalar lambda{0.0};
  Scalar constraint_residual{0.0};
};

inline Scalar rotated_qc_constraint(const RotatedQcInstance& inst, const CVec& x) {
  Scalar v = 0.0;
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    v += inst.a[n] * std::norm(x[n]);
  }
  v -= (inst.beta.adjoint() * x).value().real();
  return v;
}

inline RotatedQcSolution solve_rotated_qc(const RotatedQcInstance& inst,
                                          const RootFindOptions& opts = {}) {
  const Eigen::Index n = inst.center.size();
  if (inst.a.size() != n || inst.beta.size() != n) {
    throw std::invalid_argument("solve_rotated_qc: dimension mismatch");
  }
  RotatedQcSolution sol;
  if (rotated_qc_constraint(inst, inst.center) <= 0.0) {
    sol.x = inst.center;
    sol.lambda = 0.0;
    sol.constraint_residual = rotated_qc_constraint(inst, sol.x);
    return sol;
  }
  auto point_at = [&](Scalar lambda) {
    CVec v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      v[i] = (inst.center[i] + 0.5 * lambda * inst.beta[i]) / (1.0 + lambda * inst.a[i]);
    }
    return v;
  };
  const bool all_linear = (inst.a.maxCoeff() <= 0.0);
  if (all_linear) {
    // Constraint is a pure halfspace; the dual root is explicit.
    const Scalar b2 = inst.beta.squaredNorm();
    if (b2 <= 0.0) throw DivergenceError("solve_rotated_qc: empty halfspace");
    sol.lambda = 2.0 * (-(inst.beta.adjoint() * inst.center).value().real()) / b2;
    sol.x = point_at(sol.lambda);
    sol.constraint_residual = rotated_qc_constraint(inst, sol.x);
    return sol;
  }
  auto f = [&](Scalar lambda) { return rotated_qc_constraint(inst, point_at(lambda)); };
  auto fprime = [&](Scalar lambda) {
    Scalar d = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Scalar den = 1.0 + lambda * inst.a[i];
      const Complex v = (inst.center[i] + 0.5 * lambda * inst.beta[i]) / den;
      const Complex vp = (0.5 * inst.beta[i] - inst.a[i] * inst.center[i]) / (den * den);
      d += 2.0 * inst.a[i] * (std::conj(v) * vp).real() - (std::conj(inst.beta[i]) * vp).real();
    }
    return d;
  };
  sol.lambda = solve_monotone_root(f, fprime, opts);
  sol.x = point_at(sol.lambda);
  sol.constraint_residual = rotated_qc_constraint(inst, sol.x);
  return sol;
}

/// Linearization products consumed by the ADPM sweeps.  beta1/beta2 live in
/// the spectral bases of the stacked sidelobe form and the scaled zero-lag
/// form; the remaining fields describe the surrogate in waveform space.
struct SurrogateCoefficients {
  CVec beta1;          ///< stacked basis, length N_sN_t + 1
  CVec beta2;          ///< zero-lag basis, length N_sN_t
  CVec w;              ///< per-element halfspace normals
  RVec tau;            ///< halfspace offsets, Re{w_m^* s_m} >= tau_m
  RVec u;              ///< magnitude caps |s_m|^2 <= u_m
  CVec frac_lin;       ///< waveform-space linear coefficient of the fractional surrogate
  Scalar frac_scalar{0.0};
  Scalar tbar{1.0};
};

struct AuxUpdate {
  CVec value;
  Scalar lambda{0.0};
  Scalar constraint_residual{0.0};
};

/// Projection of `center` onto the linearized fractional-constraint set,
/// solved in the spectral basis of the padded sidelobe form.
inline AuxUpdate update_b(const EigCache& stacked_eig, const CVec& beta1, const CVec& center) {
  RotatedQcInstance inst{stacked_eig.a, beta1, stacked_eig.q.adjoint() * center};
  RotatedQcSolution sol = solve_rotated_qc(inst);
  return {stacked_eig.q * sol.x, sol.lambda, sol.constraint_residual};
}

/// Projection of `center` onto the zero-lag peak-preservation set, in the
/// spectral basis of the scaled zero-lag Gram form.
inline AuxUpdate update_p(const EigCache& peak_eig, const CVec& beta2, const CVec& center) {
  RotatedQcInstance inst{peak_eig.a, beta2, peak_eig.q.adjoint() * center};
  RotatedQcSolution sol = solve_rotated_qc(inst);
  return {peak_eig.q * sol.x, sol.lambda, sol.constraint_residual};
}

/// Unconstrained ridge step for the sidelobe-energy copy:
/// min_v  lambda_g v^H G v + (rho/2) ||v - center||^2.
inline CVec update_v(const EigCache& side_eig, Scalar lambda_g, Scalar rho, const CVec& center) {
  const CVec spectral = side_eig.q.adjoint() * center;
  CVec scaled(spectral.size());
  for (Eigen::Index i = 0; i < spectral.size(); ++i) {
    scaled[i] = spectral[i] * (rho / (2.0 * lambda_g * side_eig.a[i] + rho));
  }
  return side_eig.q * scaled;
}

/// Symbol-wise auxiliary: minimum-distance point of the symbol's region.
inline ProjectionResult update_q(const CIInstance& inst, const CVec& center) {
  return project_ci_detail(inst, center);
}

/// Scalar kernel of the consensus step:
/// min |s - c|^2  s.t.  Re{w^* s} >= tau, |s|^2 <= u.
/// All four active-set patterns are enumerated and certified.
struct ScalarBoxResult {
  Complex s{0.0, 0.0};
  int kkt_case{0};
  Scalar lambda_half{0.0};
  Scalar lambda_cap{0.0};
};

inline ScalarBoxResult solve_halfspace_disk(Complex c, Complex w, Scalar tau, Scalar u) {
  if (!(u > 0.0)) throw std::domain_error("solve_halfspace_disk: cap must be positive");
  const Scalar w2 = std::norm(w);
  if (w2 <= 0.0) {
    if (tau > 0.0) throw InfeasibleError("solve_halfspace_disk: degenerate halfspace excludes origin");
    ScalarBoxResult r;
    const Scalar cm = std::abs(c);
    if (cm * cm <= u) {
      r.s = c;
      r.kkt_case = 1;
    } else {
      r.s = c * (std::sqrt(u) / cm);
      r.kkt_case = 3;
      r.lambda_cap = cm / std::sqrt(u) - 1.0;
    }
    return r;
  }
  // Only a positive threshold can exclude the disk: tau <= 0 is satisfied at
  // the origin, whatever the cap.
  if (tau > 0.0 && tau * tau > u * w2 * (1.0 + 1e-14)) {
    throw InfeasibleError("solve_halfspace_disk: halfspace excludes the disk");
  }
  const Scalar tol = 1e-13 * std::max({Scalar(1), std::abs(c), std::sqrt(u)});
  ScalarBoxResult r;
  // case 1: interior
  if ((std::conj(w) * c).real() >= tau - tol && std::norm(c) <= u + tol) {
    r.s = c;
    r.kkt_case = 1;
    return r;
  }
  // case 2: halfspace boundary only
  {
    const Scalar gap = tau - (std::conj(w) * c).real();
    if (gap > 0.0) {
      const Complex s = c + (gap / w2) * w;
      if (std::norm(s) <= u + tol) {
        r.s = s;
        r.kkt_case = 2;
        r.lambda_half = 2.0 * gap / w2;
        return r;
      }
    }
  }
  // case 3: cap only
  {
    const Scalar cm = std::abs(c);
    if (cm * cm > u) {
      const Complex s = c * (std::sqrt(u) / cm);
      if ((std::conj(w) * s).real() >= tau - tol) {
        r.s = s;
        r.kkt_case = 3;
        r.lambda_cap = cm / std::sqrt(u) - 1.0;
        return r;
      }
    }
  }
  // case 4: both active; pick the circle/line intersection nearer the center
  {
    const Scalar disc = (u - tau * tau / w2) / w2;
    const Scalar alpha = std::sqrt(std::max(Scalar(0), disc));
    const Complex base = (tau / w2) * w;
    const Complex dir = Complex(0.0, 1.0) * w;
    const Complex s1 = base + alpha * dir;
    const Complex s2 = base - alpha * dir;
    const Complex s = std::norm(s1 - c) <= std::norm(s2 - c) ? s1 : s2;
    r.s = s;
    r.kkt_case = 4;
    // stationarity  s(1+lambda_cap) - (lambda_half/2) w = c, solved as a real 2x2
    // in unknowns (lambda_cap, lambda_half); singular only at tangency
    const Complex rhs = c - s;
    const Scalar a11 = s.real(), a12 = -0.5 * w.real();
    const Scalar a21 = s.imag(), a22 = -0.5 * w.imag();
    const Scalar d = a11 * a22 - a12 * a21;
    if (std::abs(d) > 1e-14 * std::max(Scalar(1), std::abs(s) * std::abs(w))) {
      r.lambda_cap = (rhs.real() * a22 - a12 * rhs.imag()) / d;
      r.lambda_half = (a11 * rhs.imag() - rhs.real() * a21) / d;
    }
    return r;
  }
}

struct AdpmResiduals {
  Scalar b{0.0};
  Scalar p{0.0};
  Scalar v{0.0};
  Scalar q{0.0};
  Scalar max() const { return std::max({b, p, v, q}); }
};

struct AdpmState {
  CVec b, p, v;
  std::vector<CVec> q;
  CVec mu_b, mu_p, mu_v;
  std::vector<CVec> mu_q;
  Scalar rho1{1.0}, rho2{1.0}, rho4{1.0};
  std::vector<Scalar> rho3;
  CVec s;
  Scalar t{0.0};
  int k{0};
  AdpmResiduals residuals;
};

struct AdpmConfig {
  int max_iters{500};
  Scalar tol{1e-5};
  Scalar rho_init{1.0};
  Scalar gamma{1.1};
  Scalar rho_max{1e6};
};

/// Weighted-average consensus step with the per-element halfspace/cap
/// projections, followed by the closed-form epigraph coordinate.
inline void update_s_consensus(AdpmState& st, const SurrogateCoefficients& sur,
                               const CVec& prox_center, Scalar lambda_s,
                               const SelectionOperators& sel) {
  const Eigen::Index n = st.s.size();
  Scalar weight = 2.0 * lambda_s + st.rho1 + st.rho2 + st.rho4;
  for (Scalar r3 : st.rho3) weight += r3;
  CVec target = 2.0 * lambda_s * prox_center;
  target += st.rho1 * (sel.extract_waveform(st.b) + sel.extract_waveform(st.mu_b) / st.rho1);
  target += st.rho2 * (st.p + st.mu_p / st.rho2);
  target += st.rho4 * (st.v + st.mu_v / st.rho4);
  for (std::size_t l = 0; l < st.q.size(); ++l) {
    target += st.rho3[l] * (st.q[l] + st.mu_q[l] / st.rho3[l]);
  }
  target /= weight;
  for (Eigen::Index m = 0; m < n; ++m) {
    st.s[m] = solve_halfspace_disk(target[m], sur.w[m], sur.tau[m], sur.u[m]).s;
  }
  st.t = (sel.extract_t(st.b) + sel.extract_t(st.mu_b) / st.rho1).real() + 1.0 / st.rho1;
}

/// Standard ascent step with geometric penalty growth.  Residuals are the
/// infinity norms of the consensus gaps at the current primal point.
inline void update_multipliers_and_penalties(AdpmState& st, const SelectionOperators& sel,
                                             Scalar gamma, Scalar rho_max) {
  if (gamma < 1.0) throw std::domain_error("update_multipliers_and_penalties: gamma must be >= 1");
  const CVec stacked = sel.stack(st.s, st.t);
  st.mu_b += st.rho1 * (st.b - stacked);
  st.mu_p += st.rho2 * (st.p - st.s);
  st.mu_v += st.rho4 * (st.v - st.s);
  for (std::size_t l = 0; l < st.q.size(); ++l) {
    st.mu_q[l] += st.rho3[l] * (st.q[l] - st.s);
  }
  st.rho1 = std::min(gamma * st.rho1, rho_max);
  st.rho2 = std::min(gamma * st.rho2, rho_max);
  st.rho4 = std::min(gamma * st.rho4, rho_max);
  for (Scalar& r : st.rho3) r = std::min(gamma * r, rho_max);
}

inline AdpmResiduals consensus_residuals(const AdpmState& st, const SelectionOperators& sel) {
  AdpmResiduals r;
  const CVec stacked = sel.stack(st.s, st.t);
  r.b = (st.b - stacked).lpNorm<Eigen::Infinity>();
  r.p = (st.p - st.s).lpNorm<Eigen::Infinity>();
  r.v = (st.v - st.s).lpNorm<Eigen::Infinity>();
  r.q = 0.0;
  for (const CVec& q : st.q) {
    r.q = std::max(r.q, (q - st.s).lpNorm<Eigen::Infinity>());
  }
  return r;
}

/// All block- and iteration-fixed data one ADPM run needs.
struct AdpmProblem {
  const ProblemModel* model{nullptr};
  const EigCache* side_eig{nullptr};              ///< eig of the filter-sidelobe form
  const std::vector<CIInstance>* ci{nullptr};
  const SurrogateCoefficients* surrogate{nullptr};
  CVec prox_center;
  Scalar lambda_s{0.0};
  Scalar lambda_g{0.0};
};

inline AdpmState adpm_solve(const AdpmProblem& prob, const CVec& s0, Scalar t0,
                            const AdpmConfig& cfg = {},
                            const std::function<void(const AdpmState&)>& on_iter = nullptr) {
  const ProblemModel& model = *prob.model;
  const SelectionOperators& sel = model.sel;
  const std::size_t num_symbols = prob.ci->size();
  const Eigen::Index n = s0.size();

  AdpmState st;
  st.s = s0;
  st.t = t0;
  st.rho1 = st.rho2 = st.rho4 = cfg.rho_init;
  st.rho3.assign(num_symbols, cfg.rho_init);
  st.mu_b = CVec::Zero(n + 1);
  st.mu_p = CVec::Zero(n);
  st.mu_v = CVec::Zero(n);
  st.mu_q.assign(num_symbols, CVec::Zero(n));
  st.b = sel.stack(st.s, st.t);
  st.p = st.s;
  st.v = st.s;
  st.q.assign(num_symbols, st.s);

  for (st.k = 1; st.k <= cfg.max_iters; ++st.k) {
    const CVec stacked = sel.stack(st.s, st.t);
    st.b = update_b(model.stacked_eig, prob.surrogate->beta1, stacked - st.mu_b / st.rho1).value;
    st.p = update_p(model.peak_eig, prob.surrogate->beta2, st.s - st.mu_p / st.rho2).value;
    st.v = update_v(*prob.side_eig, prob.lambda_g, st.rho4, st.s - st.mu_v / st.rho4);
    for (std::size_t l = 0; l < num_symbols; ++l) {
      st.q[l] = update_q((*prob.ci)[l], st.s - st.mu_q[l] / st.rho3[l]).q;
    }
    update_s_consensus(st, *prob.surrogate, prob.prox_center, prob.lambda_s, sel);
    st.residuals = consensus_residuals(st, sel);
    if (diag::enabled()) {
      diag::emit("adpm", {{"k", static_cast<Scalar>(st.k)},
                          {"residual_b", st.residuals.b},
                          {"residual_p", st.residuals.p},
                          {"residual_v", st.residuals.v},
                          {"residual_q", st.residuals.q},
                          {"rho1", st.rho1}});
    }
    if (on_iter) on_iter(st);
    if (st.residuals.max() <= cfg.tol) break;
    update_multipliers_and_penalties(st, sel, cfg.gamma, cfg.rho_max);
  }
  st.k = std::min(st.k, cfg.max_iters);
  return st;
}

}  // namespace isac
