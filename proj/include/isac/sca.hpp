#pragma once

#include "isac/model.hpp"
#include "isac/subproblems.hpp"
#include "isac/types.hpp"

#include <cmath>
#include <vector>

namespace isac {

/// First-order surrogate of the fractional sidelobe/mainlobe constraint at
/// the expansion point (sbar, tbar):
///   s^H SL s - Re{lin^H s} + scalar * t <= 0,
/// tight at the expansion point when tbar equals the current ratio, and an
/// upper bound of the original constraint for every t > 0.
struct FractionalSurrogate {
  CVec lin;
  Scalar scalar{0.0};
  Scalar tbar{1.0};
};

inline FractionalSurrogate linearize_fractional(const CVec& sbar, Scalar tbar,
                                                const CMat& mainlobe_form) {
  if (!(tbar > 0.0)) throw std::domain_error("linearize_fractional: tbar must be positive");
  FractionalSurrogate f;
  const CVec ms = mainlobe_form * sbar;
  f.lin = (2.0 / tbar) * ms;
  f.scalar = (sbar.adjoint() * ms).value().real() / (tbar * tbar);
  f.tbar = tbar;
  return f;
}

inline Scalar surrogate_fractional_value(const FractionalSurrogate& f, const CMat& sidelobe_form,
                                         const CVec& s, Scalar t) {
  const Scalar quad = (s.adjoint() * sidelobe_form * s).value().real();
  return quad - (f.lin.adjoint() * s).value().real() + f.scalar * t;
}

/// Original fractional constraint residual (feasible when <= 0).
inline Scalar fractional_residual(const ProblemModel& model, const CVec& s, Scalar t) {
  const Scalar num = (s.adjoint() * model.bp.mainlobe_form * s).value().real();
  const Scalar den = (s.adjoint() * model.bp.sidelobe_form * s).value().real();
  return den - num / t;
}

/// Per-element halfspaces Re{w_m^* s_m} >= tau_m that imply the nonconvex
/// power floor (|s|^2 >= 2 Re{sbar^* s} - |sbar|^2 pointwise), plus the
/// convex caps kept exact.  An element whose halfspace would miss the cap
/// disk (expansion point far outside the power annulus) is recentered onto
/// the floor circle before linearizing — radially when a direction exists,
/// at a fixed index-derived phase when the element is exactly zero — and its
/// index is recorded in `degenerate`.
struct PowerSurrogate {
  CVec w;
  RVec tau;
  RVec u;
  std::vector<Eigen::Index> degenerate;
};

inline PowerSurrogate linearize_power(const CVec& sbar, Scalar epsilon, Scalar p0,
                                      Eigen::Index nt) {
  const Eigen::Index n = sbar.size();
  const Scalar floor = (1.0 - epsilon) * p0 / static_cast<Scalar>(nt);
  const Scalar cap = (1.0 + epsilon) * p0 / static_cast<Scalar>(nt);
  PowerSurrogate ps;
  ps.w.resize(n);
  ps.tau = RVec::Constant(n, floor);
  ps.u = RVec::Constant(n, cap);
  constexpr Scalar kGolden = 0.61803398874989485;
  for (Eigen::Index m = 0; m < n; ++m) {
    Complex point = sbar[m];
    const Scalar tau_raw = floor + std::norm(point);
    if (tau_raw * tau_raw > cap * 4.0 * std::norm(point) * (1.0 - 1e-12)) {
      const Scalar mag = std::abs(point);
      point = mag > 0.0
                  ? Complex(point * std::sqrt(floor) / mag)
                  : std::polar(std::sqrt(floor),
                               2.0 * kPi * std::fmod(kGolden * static_cast<Scalar>(m + 1), 1.0));
      ps.degenerate.push_back(m);
    }
    ps.w[m] = 2.0 * point;
    ps.tau[m] += std::norm(point);
  }
  return ps;
}

inline SurrogateCoefficients make_surrogate(const ProblemModel& model, const CVec& filter,
                                            const CVec& sbar, Scalar tbar) {
  const FractionalSurrogate fr = linearize_fractional(sbar, tbar, model.bp.mainlobe_form);
  const PowerSurrogate pw = linearize_power(sbar, model.scenario.epsilon, model.scenario.p0,
                                            model.scenario.nt);
  SurrogateCoefficients sc;
  CVec stacked_lin(sbar.size() + 1);
  stacked_lin.head(sbar.size()) = fr.lin;
  stacked_lin[sbar.size()] = Complex(-fr.scalar, 0.0);
  sc.beta1 = model.stacked_eig.q.adjoint() * stacked_lin;
  sc.beta2 = model.peak_eig.q.adjoint() *
             (model.shift.at(model.shift.zero_lag_index).adjoint() * filter);
  sc.w = pw.w;
  sc.tau = pw.tau;
  sc.u = pw.u;
  sc.frac_lin = fr.lin;
  sc.frac_scalar = fr.scalar;
  sc.tbar = tbar;
  return sc;
}

struct ScaIterate {
  Scalar f{0.0};
  Scalar frac_residual{0.0};
  Scalar power_floor_violation{0.0};
  Scalar power_cap_violation{0.0};
  Scalar adpm_residual{0.0};
  int adpm_iters{0};
};

struct ScaState {
  CVec s;
  Scalar t{0.0};
  std::vector<Scalar> f_trace;
  std::vector<ScaIterate> iterates;
  std::vector<CVec> s_history;
  std::vector<Scalar> t_history;
  int j{0};
  AdpmResiduals final_residuals;
};

struct ScaConfig {
  int max_iters{50};
  Scalar f_tol{1e-6};
  Scalar consistency_slack{1e-8};  ///< allowed ascent before declaring the solver inconsistent
  AdpmConfig adpm;
  bool record_history{true};
};

/// Fixed data for one SCA run: the filter enters only through its sidelobe
/// quadratic form and the zero-lag linear coefficient.
struct ScaProblem {
  const ProblemModel* model{nullptr};
  const CMat* g_side{nullptr};
  const EigCache* side_eig{nullptr};
  const std::vector<CIInstance>* ci{nullptr};
  CVec filter;
  Scalar lambda_g{0.0};
  Scalar lambda_s{0.0};
};

inline Scalar design_objective(const ScaProblem& prob, const CVec& s, Scalar t) {
  return -t + prob.lambda_g * (s.adjoint() * (*prob.g_side) * s).value().real();
}

namespace detail {

inline void record_iterate(ScaState& st, const ScaProblem& prob, const ProblemModel& model,
                           const AdpmState& adpm, const CVec& s, Scalar t, bool record_history) {
  ScaIterate it;
  it.f = design_objective(prob, s, t);
  it.frac_residual = fractional_residual(model, s, t);
  const Scalar floor = model.scenario.power_floor();
  const Scalar cap = model.scenario.power_cap();
  Scalar fv = 0.0, cv = 0.0;
  for (Eigen::Index m = 0; m < s.size(); ++m) {
    fv = std::max(fv, floor - std::norm(s[m]));
    cv = std::max(cv, std::norm(s[m]) - cap);
  }
  it.power_floor_violation = fv;
  it.power_cap_violation = cv;
  it.adpm_residual = adpm.residuals.max();
  it.adpm_iters = adpm.k;
  st.iterates.push_back(it);
  st.f_trace.push_back(it.f);
  if (record_history) {
    st.s_history.push_back(s);
    st.t_history.push_back(t);
  }
  if (diag::enabled()) {
    diag::emit("sca", {{"j", static_cast<Scalar>(st.iterates.size() - 1)},
                       {"f", it.f},
                       {"frac_residual", it.frac_residual},
                       {"power_floor_violation", it.power_floor_violation},
                       {"power_cap_violation", it.power_cap_violation},
                       {"adpm_residual", it.adpm_residual},
                       {"adpm_iters", static_cast<Scalar>(it.adpm_iters)}});
  }
}

}  // namespace detail

/// Surrogate loop with guarded acceptance: each candidate is restored to
/// exact feasibility of the original constraints (the epigraph coordinate is
/// clamped to the true ratio; the power box holds by construction of the
/// consensus step), then accepted only if the objective did not increase.
/// The recorded trace is therefore non-increasing by construction, and any
/// violation beyond `consistency_slack` indicates an implementation bug.
inline ScaState sca_solve(const ScaProblem& prob, const CVec& s0, Scalar t0,
                          const ScaConfig& cfg = {}) {
  const ProblemModel& model = *prob.model;
  ScaState st;
  st.s = s0;
  st.t = std::min(t0, beampattern_ratio(s0, model.bp));
  if (!(st.t > 0.0)) throw std::domain_error("sca_solve: initial epigraph value must be positive");

  AdpmState last_adpm;
  last_adpm.residuals = AdpmResiduals{};
  last_adpm.k = 0;
  detail::record_iterate(st, prob, model, last_adpm, st.s, st.t, cfg.record_history);

  for (st.j = 1; st.j <= cfg.max_iters; ++st.j) {
    const Scalar f_ref = st.f_trace.back();
    const SurrogateCoefficients sur = make_surrogate(model, prob.filter, st.s, st.t);

    AdpmProblem ap;
    ap.model = &model;
    ap.side_eig = prob.side_eig;
    ap.ci = prob.ci;
    ap.surrogate = &sur;
    ap.prox_center = st.s;
    ap.lambda_s = prob.lambda_s;
    ap.lambda_g = prob.lambda_g;

    bool accepted = false;
    AdpmConfig acfg = cfg.adpm;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      const AdpmState adpm = adpm_solve(ap, st.s, st.t, acfg);
      CVec s_new = adpm.s;
      Scalar t_new = std::min(adpm.t, beampattern_ratio(s_new, model.bp));
      const Scalar f_new = design_objective(prob, s_new, t_new);
      if (f_new <= f_ref) {
        st.s = std::move(s_new);
        st.t = t_new;
        last_adpm = adpm;
        accepted = true;
      } else {
        acfg.tol *= 0.1;  // one tighter retry before declaring stagnation
        acfg.max_iters *= 2;
      }
    }
    if (!accepted) break;

    detail::record_iterate(st, prob, model, last_adpm, st.s, st.t, cfg.record_history);
    const Scalar f_new = st.f_trace.back();
    if (f_new > f_ref + std::max(cfg.consistency_slack, Scalar(0)) ||
        (cfg.consistency_slack < 0.0 && f_new > f_ref + cfg.consistency_slack)) {
      throw SolverConsistencyError("sca_solve: objective trace increased beyond tolerance");
    }
    if (st.t > model.ratio_upper_bound * (1.0 + 1e-9) + 1e-9) {
      throw SolverConsistencyError("sca_solve: epigraph value exceeds the generalized-eigenvalue bound");
    }
    if (std::abs(f_new - f_ref) <= cfg.f_tol) break;
  }
  st.j = std::min(st.j, cfg.max_iters);
  st.final_residuals = last_adpm.residuals;
  return st;
}

}  // namespace isac
