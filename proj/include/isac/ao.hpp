#pragma once

#include "isac/ci.hpp"
#include "isac/model.hpp"
#include "isac/sca.hpp"
#include "isac/subproblems.hpp"
#include "isac/types.hpp"

#include <cmath>
#include <random>
#include <utility>
#include <vector>

namespace isac {

/// Fixed neighbor waveforms a block sees while being designed.  Leakage of
/// the previous block lands on lags at and past the zero-lag index; leakage
/// of the next block lands at and before it.
struct BlockContext {
  CVec s_pre;
  CVec s_post;
  int index{1};
};

/// Filter-space quadratic form aggregating own-block sidelobes and both
/// inter-block leakage windows.
inline CMat build_D(const CVec& s, const BlockContext& ctx, const ShiftOperators& ops) {
  const Eigen::Index p = ops.zero_lag_index;
  CMat d = CMat::Zero(ops.window_len(), ops.window_len());
  for (Eigen::Index n = 1; n <= ops.count(); ++n) {
    if (n != p) {
      const CVec y = ops.at(n) * s;
      d.noalias() += y * y.adjoint();
    }
    if (n >= p) {
      const CVec y = ops.at(n) * ctx.s_pre;
      d.noalias() += y * y.adjoint();
    }
    if (n <= p) {
      const CVec y = ops.at(n) * ctx.s_post;
      d.noalias() += y * y.adjoint();
    }
  }
  return d;
}

/// Distortionless minimum-sidelobe filter: minimizes g^H D g subject to a
/// unit zero-lag response on the current waveform.  Diagonal loading keeps
/// the solve well-posed; the normalization is exact regardless.
inline CVec update_filter(const CVec& s, const BlockContext& ctx, const ShiftOperators& ops,
                          Scalar loading_scale = 1e-8) {
  const CVec r = ops.at(ops.zero_lag_index) * s;
  if (r.norm() <= 0.0) throw std::domain_error("update_filter: zero-lag image of the waveform is zero");
  CMat d = build_D(s, ctx, ops);
  const Scalar delta = loading_scale * d.trace().real() / static_cast<Scalar>(d.rows());
  d.diagonal().array() += std::max(delta, 1e-300);
  const CVec mr = d.ldlt().solve(r);
  const Scalar denom = (r.adjoint() * mr).value().real();
  if (!(denom > 0.0)) throw std::domain_error("update_filter: degenerate normalization");
  return mr / denom;
}

/// Waveform-space image of the filter's own-block sidelobe cost:
/// s^H G_side s = sum over non-zero lags of |g^H Gbar_n s|^2.
inline CMat build_G_side(const CVec& g, const ShiftOperators& ops) {
  const Eigen::Index n = ops.ns * ops.nt;
  CMat gs = CMat::Zero(n, n);
  for (Eigen::Index lag = 1; lag <= ops.count(); ++lag) {
    if (lag == ops.zero_lag_index) continue;
    const CVec row = ops.at(lag).adjoint() * g;
    gs.noalias() += row * row.adjoint();
  }
  return gs;
}

/// Leakage energy of fixed neighbors through the filter.
inline Scalar inter_block_energy(const CVec& g, const BlockContext& ctx,
                                 const ShiftOperators& ops) {
  const Eigen::Index p = ops.zero_lag_index;
  Scalar e = 0.0;
  for (Eigen::Index n = p; n <= ops.count(); ++n) {
    e += std::norm((g.adjoint() * (ops.at(n) * ctx.s_pre)).value());
  }
  for (Eigen::Index n = 1; n <= p; ++n) {
    e += std::norm((g.adjoint() * (ops.at(n) * ctx.s_post)).value());
  }
  return e;
}

inline Scalar g_objective(const CVec& g, const CVec& s, Scalar t, const BlockContext& ctx,
                          const ShiftOperators& ops, Scalar lambda_g) {
  const Eigen::Index p = ops.zero_lag_index;
  Scalar side = 0.0;
  for (Eigen::Index n = 1; n <= ops.count(); ++n) {
    if (n == p) continue;
    side += std::norm((g.adjoint() * (ops.at(n) * s)).value());
  }
  return -t + lambda_g * (side + inter_block_energy(g, ctx, ops));
}

struct FeasibilityReport {
  Scalar min_ci_margin{0.0};
  Scalar min_power{0.0};
  Scalar max_power{0.0};
  Scalar power_floor{0.0};
  Scalar power_cap{0.0};
  Complex zero_lag{0.0, 0.0};
  Scalar frac_residual{0.0};
  Scalar adpm_max_residual{0.0};

  bool feasible(Scalar ci_tol = 1e-6, Scalar power_tol = 1e-6, Scalar lag_tol = 1e-9) const {
    return min_ci_margin >= -ci_tol && min_power >= power_floor - power_tol &&
           max_power <= power_cap + power_tol && std::abs(zero_lag - Complex(1.0, 0.0)) <= lag_tol;
  }
};

struct AoConfig {
  int max_iters{30};
  int min_iters{12};
  Scalar spread_tol{1e-6};         ///< stop when the last three objective values agree this well
  Scalar consistency_slack{1e-8};  ///< allowed ascent in the outer trace
  Scalar filter_loading{1e-8};
  Scalar repair_tol{1e-8};
  int repair_max_passes{200};
  ScaConfig sca;
};

struct DesignResult {
  CVec s;
  Scalar t{0.0};
  CVec g;
  CVec s_initial;
  BlockContext ctx;
  std::vector<Scalar> g_obj_trace;
  std::vector<ScaState> sca_runs;
  FeasibilityReport feasibility;
  Scalar initial_imsr_db{0.0};
  Scalar final_imsr_db{0.0};
  Scalar lambda_max{0.0};
  int iterations{0};
  std::vector<Complex> symbols;
};

inline std::vector<Complex> draw_symbols(const Scenario& sc, int block_index) {
  const std::vector<Complex> pts = sc.constellation.points();
  std::mt19937_64 rng(mix_seed(sc.symbol_seed, static_cast<std::uint64_t>(block_index)));
  std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
  std::vector<Complex> out(static_cast<std::size_t>(sc.num_symbols));
  for (Complex& v : out) v = pts[pick(rng)];
  return out;
}

inline std::vector<CIInstance> make_ci_instances(const Scenario& sc,
                                                 const std::vector<Complex>& symbols) {
  std::vector<CIInstance> out;
  out.reserve(symbols.size());
  for (std::size_t l = 0; l < symbols.size(); ++l) {
    out.push_back(make_ci_instance(sc, static_cast<int>(l), symbols[l]));
  }
  return out;
}

/// Alternating exact corrections between the symbol regions and the
/// per-sample power annulus.  The region correction is the joint minimum-
/// norm waveform perturbation realizing all target images at once, so each
/// half-step lands exactly on its set; the pair converges geometrically for
/// the small violations left behind by a converged solver run.
inline CVec repair_feasibility(const ProblemModel& model, const std::vector<CIInstance>& ci,
                               CVec s, Scalar tol = 1e-8, int max_passes = 200) {
  const Eigen::Index n = s.size();
  const std::size_t num_symbols = ci.size();
  const Scalar floor = model.scenario.power_floor();
  const Scalar cap = model.scenario.power_cap();

  CMat h(n, static_cast<Eigen::Index>(num_symbols));
  for (std::size_t l = 0; l < num_symbols; ++l) h.col(static_cast<Eigen::Index>(l)) = ci[l].channel;
  const CMat gram = h.transpose() * h.conjugate();  // Hermitian PD for independent channels
  Eigen::LDLT<CMat> gram_ldlt(gram);

  for (int pass = 0; pass < max_passes; ++pass) {
    Scalar min_margin = std::numeric_limits<Scalar>::infinity();
    for (const CIInstance& inst : ci) min_margin = std::min(min_margin, ci_margin(inst, s));
    Scalar min_pow = std::numeric_limits<Scalar>::infinity(), max_pow = 0.0;
    for (Eigen::Index m = 0; m < n; ++m) {
      min_pow = std::min(min_pow, std::norm(s[m]));
      max_pow = std::max(max_pow, std::norm(s[m]));
    }
    if (min_margin >= -tol && min_pow >= floor - tol && max_pow <= cap + tol) return s;

    if (min_margin < -tol) {
      CVec delta(static_cast<Eigen::Index>(num_symbols));
      for (std::size_t l = 0; l < num_symbols; ++l) {
        const Complex w = ci[l].image(s);
        delta[static_cast<Eigen::Index>(l)] = project_image(ci[l], w).image - w;
      }
      s += h.conjugate() * gram_ldlt.solve(delta);
    }
    for (Eigen::Index m = 0; m < n; ++m) {
      const Scalar pw = std::norm(s[m]);
      if (pw < floor) {
        s[m] = pw > 0.0 ? Complex(s[m] * std::sqrt(floor / pw)) : Complex(std::sqrt(floor), 0.0);
      } else if (pw > cap) {
        s[m] *= std::sqrt(cap / pw);
      }
    }
  }
  throw InfeasibleError("repair_feasibility: alternating corrections did not converge");
}

/// Constant-modulus random-phase start, corrected once through the symbol
/// regions and the power annulus so the initial point is genuinely feasible.
inline CVec initial_waveform(const ProblemModel& model, const std::vector<CIInstance>& ci,
                             int block_index) {
  const Scenario& sc = model.scenario;
  const Eigen::Index n = sc.dim();
  std::mt19937_64 rng(mix_seed(sc.waveform_seed, static_cast<std::uint64_t>(block_index)));
  std::uniform_real_distribution<Scalar> phase(0.0, 2.0 * kPi);
  const Scalar amp = std::sqrt(sc.p0 / static_cast<Scalar>(sc.nt));
  CVec s(n);
  for (Eigen::Index m = 0; m < n; ++m) s[m] = std::polar(amp, phase(rng));
  for (const CIInstance& inst : ci) s = project_ci(inst, s);
  try {
    return repair_feasibility(model, ci, std::move(s));
  } catch (const InfeasibleError&) {
    throw InfeasibleError("initial_waveform: could not reach a jointly feasible start");
  }
}

inline FeasibilityReport assess_feasibility(const ProblemModel& model,
                                            const std::vector<CIInstance>& ci, const CVec& s,
                                            Scalar t, const CVec& g,
                                            Scalar adpm_residual = 0.0) {
  FeasibilityReport rep;
  rep.power_floor = model.scenario.power_floor();
  rep.power_cap = model.scenario.power_cap();
  rep.min_ci_margin = std::numeric_limits<Scalar>::infinity();
  for (const CIInstance& inst : ci) rep.min_ci_margin = std::min(rep.min_ci_margin, ci_margin(inst, s));
  rep.min_power = std::numeric_limits<Scalar>::infinity();
  rep.max_power = 0.0;
  for (Eigen::Index m = 0; m < s.size(); ++m) {
    rep.min_power = std::min(rep.min_power, std::norm(s[m]));
    rep.max_power = std::max(rep.max_power, std::norm(s[m]));
  }
  rep.zero_lag = (g.adjoint() * (model.shift.at(model.shift.zero_lag_index) * s)).value();
  rep.frac_residual = fractional_residual(model, s, t);
  rep.adpm_max_residual = adpm_residual;
  return rep;
}

/// Outer loop: filter step and waveform step, each accepted only when the
/// joint objective does not increase, so the recorded trace is a genuine
/// descent sequence.  Finalization restores exact feasibility (symbol
/// regions, power annulus, epigraph clamp) and re-derives the filter so the
/// zero-lag response is exactly one; those last values are reported but not
/// appended to the trace.
inline DesignResult ao_solve(const ProblemModel& model, const std::vector<CIInstance>& ci,
                             const BlockContext& ctx, const AoConfig& cfg = {},
                             const CVec* s_init = nullptr) {
  const ShiftOperators& ops = model.shift;
  DesignResult res;
  res.ctx = ctx;
  res.lambda_max = model.ratio_upper_bound;

  CVec s = s_init ? *s_init : initial_waveform(model, ci, ctx.index);
  res.s_initial = s;
  Scalar t = beampattern_ratio(s, model.bp);
  res.initial_imsr_db = db10(t);

  CVec r = ops.at(ops.zero_lag_index) * s;
  if (r.norm() <= 0.0) throw InfeasibleError("ao_solve: initial waveform has zero zero-lag image");
  CVec g = r / r.squaredNorm();

  const Scalar lambda_g = model.scenario.lambda_g;
  const Scalar lambda_s = model.scenario.proximal_weight();
  res.g_obj_trace.push_back(g_objective(g, s, t, ctx, ops, lambda_g));

  Scalar last_adpm_residual = 0.0;
  int i = 1;
  for (; i <= cfg.max_iters; ++i) {
    const CMat d = build_D(s, ctx, ops);
    const CVec g_cand = update_filter(s, ctx, ops, cfg.filter_loading);
    if (g_objective(g_cand, s, t, ctx, ops, lambda_g) <=
        g_objective(g, s, t, ctx, ops, lambda_g)) {
      g = g_cand;
    }

    const CMat g_side = build_G_side(g, ops);
    const EigCache side_eig = hermitian_eig(g_side, "filter sidelobe form");

    // cross-space identity: the filter-space cost of g equals the waveform-
    // space sidelobe quadratic plus the neighbor leakage
    {
      const Scalar lhs = (g.adjoint() * d * g).value().real();
      const Scalar rhs = (s.adjoint() * g_side * s).value().real() + inter_block_energy(g, ctx, ops);
      if (std::abs(lhs - rhs) > 1e-9 * std::max(Scalar(1), std::abs(lhs))) {
        throw SolverConsistencyError("ao_solve: filter/waveform quadratic-form identity failed");
      }
    }

    ScaProblem sp;
    sp.model = &model;
    sp.g_side = &g_side;
    sp.side_eig = &side_eig;
    sp.ci = &ci;
    sp.filter = g;
    sp.lambda_g = lambda_g;
    sp.lambda_s = lambda_s;
    ScaState sca = sca_solve(sp, s, t, cfg.sca);
    s = sca.s;
    t = sca.t;
    last_adpm_residual = sca.final_residuals.max();
    res.sca_runs.push_back(std::move(sca));

    const Scalar obj = g_objective(g, s, t, ctx, ops, lambda_g);
    const Scalar prev = res.g_obj_trace.back();
    res.g_obj_trace.push_back(obj);
    if (diag::enabled()) {
      diag::emit("ao", {{"iter", static_cast<Scalar>(res.g_obj_trace.size() - 1)},
                        {"g_obj", obj},
                        {"t", t},
                        {"adpm_residual", last_adpm_residual}});
    }
    if (obj > prev + std::max(cfg.consistency_slack, Scalar(0)) ||
        (cfg.consistency_slack < 0.0 && obj > prev + cfg.consistency_slack)) {
      throw SolverConsistencyError("ao_solve: outer objective trace increased beyond tolerance");
    }
    if (obj < -res.lambda_max - 1e-8) {
      throw SolverConsistencyError("ao_solve: outer objective fell below the spectral lower bound");
    }

    const std::size_t k = res.g_obj_trace.size();
    if (static_cast<int>(k) > cfg.min_iters && k >= 3) {
      const Scalar spread = std::abs(res.g_obj_trace[k - 3] - res.g_obj_trace[k - 1]);
      if (spread <= cfg.spread_tol) break;
    }
  }
  res.iterations = static_cast<int>(res.g_obj_trace.size()) - 1;

  s = repair_feasibility(model, ci, std::move(s), cfg.repair_tol, cfg.repair_max_passes);
  t = std::min(t, beampattern_ratio(s, model.bp));
  g = update_filter(s, ctx, ops, cfg.filter_loading);

  res.s = std::move(s);
  res.t = t;
  res.g = std::move(g);
  res.final_imsr_db = db10(beampattern_ratio(res.s, model.bp));
  res.feasibility = assess_feasibility(model, ci, res.s, res.t, res.g, last_adpm_residual);
  return res;
}

/// Two-pass interleaved schedule: odd-indexed blocks are designed first
/// against initial-waveform neighbors, then even-indexed blocks against the
/// optimized odd ones.  Blocks past either end stand in with the edge
/// block's own initial waveform.
inline std::vector<DesignResult> interleaved_schedule(const ProblemModel& model, int num_blocks,
                                                      const AoConfig& cfg = {}) {
  if (num_blocks < 1) throw ConfigError("interleaved_schedule: need at least one block");
  const Scenario& sc = model.scenario;

  std::vector<std::vector<Complex>> symbols(static_cast<std::size_t>(num_blocks));
  std::vector<std::vector<CIInstance>> instances(static_cast<std::size_t>(num_blocks));
  std::vector<CVec> inits(static_cast<std::size_t>(num_blocks));
  for (int b = 0; b < num_blocks; ++b) {
    symbols[b] = draw_symbols(sc, b + 1);
    instances[b] = make_ci_instances(sc, symbols[b]);
    inits[b] = initial_waveform(model, instances[b], b + 1);
  }
  std::vector<CVec> current = inits;
  std::vector<DesignResult> results(static_cast<std::size_t>(num_blocks));

  auto neighbor = [&](int b, int offset) -> const CVec& {
    const int idx = b + offset;
    if (idx < 0 || idx >= num_blocks) return inits[static_cast<std::size_t>(b)];
    return current[static_cast<std::size_t>(idx)];
  };

  for (int pass = 0; pass < 2; ++pass) {
    for (int b = 0; b < num_blocks; ++b) {
      const bool odd = ((b + 1) % 2) == 1;
      if ((pass == 0) != odd) continue;
      BlockContext ctx;
      ctx.index = b + 1;
      ctx.s_pre = neighbor(b, -1);
      ctx.s_post = neighbor(b, +1);
      DesignResult r = ao_solve(model, instances[b], ctx, cfg, &inits[b]);
      r.symbols = symbols[b];
      current[static_cast<std::size_t>(b)] = r.s;
      results[static_cast<std::size_t>(b)] = std::move(r);
    }
  }
  // final contexts: every block reported against its actual neighbors
  for (int b = 0; b < num_blocks; ++b) {
    BlockContext ctx;
    ctx.index = b + 1;
    ctx.s_pre = b > 0 ? current[static_cast<std::size_t>(b - 1)] : inits[static_cast<std::size_t>(b)];
    ctx.s_post = b + 1 < num_blocks ? current[static_cast<std::size_t>(b + 1)]
                                    : inits[static_cast<std::size_t>(b)];
    results[static_cast<std::size_t>(b)].ctx = ctx;
  }
  return results;
}

}  // namespace isac
