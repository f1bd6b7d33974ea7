#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "isac/ao.hpp"
#include "support.hpp"

#include <cmath>
#include <random>

using namespace isac;

namespace {

AoConfig cheap_config() {
  AoConfig cfg;
  cfg.max_iters = 4;
  cfg.min_iters = 2;
  cfg.spread_tol = 1e-6;
  cfg.sca.max_iters = 5;
  cfg.sca.f_tol = 1e-7;
  cfg.sca.adpm.max_iters = 150;
  cfg.sca.adpm.tol = 1e-5;
  return cfg;
}

Scalar direct_filter_cost(const CVec& g, const CVec& s, const BlockContext& ctx,
                          const ShiftOperators& ops) {
  const int p = ops.zero_lag_index;
  Scalar total = 0.0;
  for (int n = 1; n <= ops.count(); ++n) {
    if (n != p) total += std::norm((g.adjoint() * (ops.at(n) * s)).value());
    if (n >= p) total += std::norm((g.adjoint() * (ops.at(n) * ctx.s_pre)).value());
    if (n <= p) total += std::norm((g.adjoint() * (ops.at(n) * ctx.s_post)).value());
  }
  return total;
}

}  // namespace

TEST_CASE("build_D sums the leakage windows") {
  std::mt19937_64 rng(3);
  const ProblemModel model = build_model(mini_scenario());
  const ShiftOperators& ops = model.shift;
  const Eigen::Index n = model.scenario.dim();

  BlockContext zero{CVec::Zero(n), CVec::Zero(n), 1};
  CHECK(build_D(CVec::Zero(n), zero, ops).norm() == 0.0);

  for (int i = 0; i < 30; ++i) {
    const CVec s = testutil::randv(rng, n);
    const BlockContext ctx{testutil::randv(rng, n), testutil::randv(rng, n), 1};
    const CMat d = build_D(s, ctx, ops);
    CHECK((d - d.adjoint()).norm() <= 1e-12 * (1.0 + d.norm()));
    const CVec g = testutil::randv(rng, ops.window_len());
    const Scalar via_d = (g.adjoint() * d * g).value().real();
    const Scalar direct = direct_filter_cost(g, s, ctx, ops);
    CHECK(std::abs(via_d - direct) <= 1e-10 * (1.0 + std::abs(direct)));
    CHECK(via_d >= -1e-12 * (1.0 + std::abs(direct)));
  }
}

TEST_CASE("update_filter is distortionless and optimal") {
  std::mt19937_64 rng(7);
  const ProblemModel model = build_model(mini_scenario());
  const ShiftOperators& ops = model.shift;
  const Eigen::Index n = model.scenario.dim();

  const CVec s = testutil::randv(rng, n);
  const BlockContext ctx{testutil::randv(rng, n), testutil::randv(rng, n), 1};
  const CVec g = update_filter(s, ctx, ops);
  const CVec r = ops.at(ops.zero_lag_index) * s;
  CHECK(std::abs((r.adjoint() * g).value() - Complex(1, 0)) <= 1e-12);

  // loaded cost at the filter never exceeds the cost at any other
  // distortionless vector
  CMat loaded = build_D(s, ctx, ops);
  const Scalar delta = 1e-8 * loaded.trace().real() / static_cast<Scalar>(loaded.rows());
  loaded.diagonal().array() += std::max(delta, 1e-300);
  const Scalar at_g = (g.adjoint() * loaded * g).value().real();
  const Scalar r2 = r.squaredNorm();
  for (int k = 0; k < 1000; ++k) {
    CVec zeta = testutil::randv(rng, ops.window_len());
    zeta -= (r * (r.adjoint() * zeta).value()) / r2;  // keep the zero-lag response
    const CVec x = g + zeta;
    const Scalar at_x = (x.adjoint() * loaded * x).value().real();
    CHECK(at_g <= at_x + 1e-12 * (1.0 + at_x));
  }

  // joint real scaling of waveform and neighbors rescales the filter inversely
  const Scalar c = 2.5;
  const BlockContext scaled_ctx{c * ctx.s_pre, c * ctx.s_post, 1};
  const CVec g_scaled = update_filter(CVec(c * s), scaled_ctx, ops);
  CHECK((g_scaled - g / c).norm() <= 1e-9 * (1.0 + g.norm()));

  CHECK_THROWS_AS(update_filter(CVec::Zero(n), ctx, ops), std::domain_error);
}

TEST_CASE("build_G_side mirrors the filter cost") {
  std::mt19937_64 rng(11);

  // two-sample toy: explicit shift matrices
  Scenario toy = mini_scenario();
  toy.ns = 2;
  toy.ncp = 0;
  toy.nt = 1;
  toy.target_angle_deg = 0.0;
  const ShiftOperators ops_toy = build_shift_operators(toy);
  REQUIRE(ops_toy.count() == 3);
  const CVec g2 = testutil::randv(rng, 2);
  const CMat gs_toy = build_G_side(g2, ops_toy);
  const CMat expect = ops_toy.at(1).adjoint() * g2 * g2.adjoint() * ops_toy.at(1) +
                      ops_toy.at(3).adjoint() * g2 * g2.adjoint() * ops_toy.at(3);
  CHECK((gs_toy - expect).norm() <= 1e-12 * (1.0 + expect.norm()));

  const ProblemModel model = build_model(mini_scenario());
  const ShiftOperators& ops = model.shift;
  CHECK(build_G_side(CVec::Zero(ops.window_len()), ops).norm() == 0.0);

  for (int i = 0; i < 100; ++i) {
    const CVec g = testutil::randv(rng, ops.window_len());
    const CVec s = testutil::randv(rng, model.scenario.dim());
    const CMat gs = build_G_side(g, ops);
    Scalar direct = 0.0;
    for (int lag = 1; lag <= ops.count(); ++lag) {
      if (lag == ops.zero_lag_index) continue;
      direct += std::norm((g.adjoint() * (ops.at(lag) * s)).value());
    }
    const Scalar quad = (s.adjoint() * gs * s).value().real();
    CHECK(std::abs(quad - direct) <= 1e-10 * (1.0 + direct));
  }
}

TEST_CASE("filter cost splits across spaces") {
  std::mt19937_64 rng(13);
  const ProblemModel model = build_model(mini_scenario());
  const ShiftOperators& ops = model.shift;
  const Eigen::Index n = model.scenario.dim();
  for (int i = 0; i < 50; ++i) {
    const CVec s = testutil::randv(rng, n);
    const BlockContext ctx{testutil::randv(rng, n), testutil::randv(rng, n), 1};
    const CVec g = testutil::randv(rng, ops.window_len());
    const Scalar lhs = (g.adjoint() * build_D(s, ctx, ops) * g).value().real();
    const Scalar rhs = (s.adjoint() * build_G_side(g, ops) * s).value().real() +
                       inter_block_energy(g, ctx, ops);
    CHECK(std::abs(lhs - rhs) <= 1e-9 * std::max(Scalar(1), std::abs(lhs)));
  }
}

TEST_CASE("g_objective arithmetic") {
  std::mt19937_64 rng(17);
  const ProblemModel model = build_model(mini_scenario());
  const ShiftOperators& ops = model.shift;
  const Eigen::Index n = model.scenario.dim();
  const CVec s = testutil::randv(rng, n);
  const BlockContext ctx{testutil::randv(rng, n), testutil::randv(rng, n), 1};
  const CVec g = testutil::randv(rng, ops.window_len());
  const Scalar t = 0.42, lambda_g = 0.9;
  const Scalar expect = -t + lambda_g * direct_filter_cost(g, s, ctx, ops);
  CHECK(g_objective(g, s, t, ctx, ops, lambda_g) ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("repair_feasibility restores the constraint set") {
  std::mt19937_64 rng(19);
  const ProblemModel model = build_model(mini_scenario());
  const Scenario& sc = model.scenario;
  const std::vector<CIInstance> ci = make_ci_instances(sc, draw_symbols(sc, 1));

  const CVec start = 0.8 * testutil::randv(rng, sc.dim());
  const CVec fixed = repair_feasibility(model, ci, start, 1e-8, 200);
  for (const CIInstance& inst : ci) CHECK(ci_margin(inst, fixed) >= -1e-8);
  for (Eigen::Index m = 0; m < fixed.size(); ++m) {
    CHECK(std::norm(fixed[m]) >= sc.power_floor() - 1e-8);
    CHECK(std::norm(fixed[m]) <= sc.power_cap() + 1e-8);
  }

  const CVec again = repair_feasibility(model, ci, start, 1e-8, 200);
  CHECK((again - fixed).norm() == 0.0);

  // feasible inputs pass through untouched
  const CVec same = repair_feasibility(model, ci, fixed, 1e-8, 200);
  CHECK((same - fixed).norm() == 0.0);
}

TEST_CASE("initial_waveform is feasible, deterministic and block-sensitive") {
  const ProblemModel model = build_model(mini_scenario());
  const Scenario& sc = model.scenario;
  const std::vector<CIInstance> ci = make_ci_instances(sc, draw_symbols(sc, 1));

  const CVec s1 = initial_waveform(model, ci, 1);
  for (const CIInstance& inst : ci) CHECK(ci_margin(inst, s1) >= -1e-8);
  for (Eigen::Index m = 0; m < s1.size(); ++m) {
    CHECK(std::norm(s1[m]) >= sc.power_floor() - 1e-8);
    CHECK(std::norm(s1[m]) <= sc.power_cap() + 1e-8);
  }
  CHECK((initial_waveform(model, ci, 1) - s1).norm() == 0.0);
  CHECK((initial_waveform(model, ci, 2) - s1).norm() > 1e-6);
}

TEST_CASE("draw_symbols is reproducible and on-constellation") {
  const Scenario sc = mini_scenario();
  const std::vector<Complex> sym = draw_symbols(sc, 1);
  REQUIRE(sym.size() == static_cast<std::size_t>(sc.num_symbols));
  const std::vector<Complex> pts = sc.constellation.points();
  for (const Complex s : sym) {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (const Complex p : pts) best = std::min(best, std::abs(s - p));
    CHECK(best <= 1e-12);
  }
  CHECK(draw_symbols(sc, 1) == sym);
  CHECK(draw_symbols(sc, 2) != sym);
}

TEST_CASE("assess_feasibility reports the design quantities") {
  const ProblemModel model = build_model(mini_scenario());
  const Scenario& sc = model.scenario;
  const std::vector<CIInstance> ci = make_ci_instances(sc, draw_symbols(sc, 1));
  const CVec s = initial_waveform(model, ci, 1);
  const BlockContext ctx{s, s, 1};
  const CVec g = update_filter(s, ctx, model.shift);
  const Scalar t = beampattern_ratio(s, model.bp);

  const FeasibilityReport rep = assess_feasibility(model, ci, s, t, g);
  CHECK(rep.power_floor == sc.power_floor());
  CHECK(rep.power_cap == sc.power_cap());
  CHECK(std::abs(rep.zero_lag - Complex(1, 0)) <= 1e-12);
  CHECK(rep.frac_residual == doctest::Approx(fractional_residual(model, s, t)).epsilon(1e-12));
  CHECK(rep.adpm_max_residual == 0.0);
  CHECK(rep.min_ci_margin >= -1e-8);
  CHECK(rep.min_power >= sc.power_floor() - 1e-8);
  CHECK(rep.max_power <= sc.power_cap() + 1e-8);
  CHECK(rep.feasible(1e-6, 1e-6, 1e-9));

  FeasibilityReport bad = rep;
  bad.min_ci_margin = -1e-3;
  CHECK(!bad.feasible());
}

TEST_CASE("ao run on the small scenario") {
  const ProblemModel model = build_model(mini_scenario());
  const Scenario& sc = model.scenario;
  const std::vector<CIInstance> ci = make_ci_instances(sc, draw_symbols(sc, 1));
  const CVec s0 = initial_waveform(model, ci, 1);
  const BlockContext ctx{s0, s0, 1};
  const AoConfig cfg = cheap_config();

  const DesignResult res = ao_solve(model, ci, ctx, cfg);

  REQUIRE(res.g_obj_trace.size() >= 2);
  CHECK(res.iterations == static_cast<int>(res.g_obj_trace.size()) - 1);
  CHECK(res.sca_runs.size() == static_cast<std::size_t>(res.iterations));
  CHECK(res.lambda_max == model.ratio_upper_bound);
  for (std::size_t k = 1; k < res.g_obj_trace.size(); ++k) {
    CHECK(res.g_obj_trace[k] <= res.g_obj_trace[k - 1] + 1e-8);
    CHECK(res.g_obj_trace[k] >= -res.lambda_max - 1e-8);
  }
  for (const ScaState& run : res.sca_runs) {
    for (std::size_t k = 1; k < run.f_trace.size(); ++k) {
      CHECK(run.f_trace[k] <= run.f_trace[k - 1] + 1e-8);
    }
  }

  CHECK((res.s_initial - s0).norm() == 0.0);
  CHECK(res.initial_imsr_db == doctest::Approx(db10(beampattern_ratio(s0, model.bp))));
  CHECK(res.final_imsr_db == doctest::Approx(db10(beampattern_ratio(res.s, model.bp))));
  CHECK(res.feasibility.feasible(1e-6, 1e-6, 1e-9));
  CHECK(std::abs(res.feasibility.zero_lag - Complex(1, 0)) <= 1e-9);
  CHECK(res.feasibility.frac_residual <= 1e-9);
  CHECK(res.t > 0.0);
  CHECK(res.t <= beampattern_ratio(res.s, model.bp) + 1e-12);

  // restarting from the finished design must not find a better point
  const DesignResult res2 = ao_solve(model, ci, ctx, cfg, &res.s);
  const Scalar at_final =
      g_objective(res.g, res.s, res.t, ctx, model.shift, sc.lambda_g);
  CHECK(res2.g_obj_trace.back() <= at_final + 1e-8);
  WARN(std::abs(res2.g_obj_trace.back() - at_final) <= 1e-3 * (1.0 + std::abs(at_final)));
}

TEST_CASE("interleaved schedule with one block matches the direct solve") {
  const ProblemModel model = build_model(mini_scenario());
  const Scenario& sc = model.scenario;
  const AoConfig cfg = cheap_config();

  CHECK_THROWS_AS(interleaved_schedule(model, 0, cfg), ConfigError);

  const std::vector<DesignResult> sched = interleaved_schedule(model, 1, cfg);
  REQUIRE(sched.size() == 1);

  const std::vector<Complex> symbols = draw_symbols(sc, 1);
  const std::vector<CIInstance> ci = make_ci_instances(sc, symbols);
  const CVec s0 = initial_waveform(model, ci, 1);
  const BlockContext ctx{s0, s0, 1};
  const DesignResult direct = ao_solve(model, ci, ctx, cfg, &s0);

  CHECK((sched[0].s - direct.s).norm() == 0.0);
  CHECK((sched[0].g - direct.g).norm() == 0.0);
  CHECK(sched[0].t == direct.t);
  CHECK(sched[0].symbols == symbols);
  CHECK((sched[0].ctx.s_pre - s0).norm() == 0.0);
  CHECK((sched[0].ctx.s_post - s0).norm() == 0.0);
}

TEST_CASE("interleaved schedule wires neighbor contexts") {
  const ProblemModel model = build_model(mini_scenario());
  const AoConfig cfg = cheap_config();
  const std::vector<DesignResult> res = interleaved_schedule(model, 3, cfg);
  REQUIRE(res.size() == 3);

  CHECK((res[1].ctx.s_pre - res[0].s).norm() == 0.0);
  CHECK((res[1].ctx.s_post - res[2].s).norm() == 0.0);
  CHECK((res[0].ctx.s_pre - res[0].s_initial).norm() == 0.0);
  CHECK((res[0].ctx.s_post - res[1].s).norm() == 0.0);
  CHECK((res[2].ctx.s_pre - res[1].s).norm() == 0.0);
  CHECK((res[2].ctx.s_post - res[2].s_initial).norm() == 0.0);

  for (int b = 0; b < 3; ++b) {
    CHECK(res[b].ctx.index == b + 1);
    CHECK(res[b].symbols == draw_symbols(model.scenario, b + 1));
    CHECK(res[b].feasibility.feasible(1e-6, 1e-6, 1e-9));
  }
}
