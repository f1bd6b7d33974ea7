#pragma once

#include "isac/ao.hpp"
#include "isac/ci.hpp"
#include "isac/model.hpp"
#include "isac/types.hpp"

#include <atomic>
#include <cmath>
#include <random>
#include <thread>
#include <vector>

namespace isac {

inline constexpr Scalar kDbFloor = -300.0;

inline Scalar safe_db10(Scalar x) { return x > 0.0 ? std::max(db10(x), kDbFloor) : kDbFloor; }
inline Scalar safe_db20(Scalar x) { return x > 0.0 ? std::max(db20(x), kDbFloor) : kDbFloor; }

inline Scalar imsr_db(const CVec& s, const BeampatternMatrices& bp) {
  return db10(beampattern_ratio(s, bp));
}

/// Transmit power toward one angle, summed over the block's time slices.
inline Scalar beampattern_power(const CVec& s, const Scenario& sc, Scalar angle_deg) {
  const CVec a = steering_vector(sc, angle_deg);
  Scalar p = 0.0;
  for (Eigen::Index t = 0; t < sc.ns; ++t) {
    p += std::norm((a.adjoint() * s.segment(t * sc.nt, sc.nt)).value());
  }
  return p;
}

/// IMSR recomputed by direct angular summation; the sidelobe denominator
/// carries the same diagonal loading as the quadratic form.
inline Scalar imsr_grid_db(const ProblemModel& model, const CVec& s) {
  Scalar num = 0.0, den = 0.0;
  for (Scalar ang : model.bp.mainlobe_angles_deg) num += beampattern_power(s, model.scenario, ang);
  for (Scalar ang : model.bp.sidelobe_angles_deg) den += beampattern_power(s, model.scenario, ang);
  den += model.bp.diagonal_loading * s.squaredNorm();
  if (!(den > 0.0)) throw std::domain_error("imsr_grid_db: empty sidelobe energy");
  return db10(num / den);
}

/// Filter outputs per lag for the block itself and both fixed neighbors.
/// Lag 0 is the own-block matched peak; every other entry (including the
/// neighbors' lag-0 leakage) counts as a sidelobe.
struct RangeProfile {
  std::vector<int> own_lags;
  CVec own;
  std::vector<int> pre_lags;
  CVec pre;
  std::vector<int> post_lags;
  CVec post;
  Scalar peak_sidelobe_db{kDbFloor};
};

inline RangeProfile range_profile(const CVec& g, const CVec& s, const BlockContext& ctx,
                                  const ShiftOperators& ops) {
  const Eigen::Index p = ops.zero_lag_index;
  RangeProfile rp;
  rp.own.resize(ops.count());
  for (Eigen::Index n = 1; n <= ops.count(); ++n) {
    rp.own_lags.push_back(static_cast<int>(n - p));
    rp.own[n - 1] = (g.adjoint() * (ops.at(n) * s)).value();
  }
  rp.pre.resize(ops.count() - p + 1);
  for (Eigen::Index n = p; n <= ops.count(); ++n) {
    rp.pre_lags.push_back(static_cast<int>(n - p));
    rp.pre[n - p] = (g.adjoint() * (ops.at(n) * ctx.s_pre)).value();
  }
  rp.post.resize(p);
  for (Eigen::Index n = 1; n <= p; ++n) {
    rp.post_lags.push_back(static_cast<int>(n - p));
    rp.post[n - 1] = (g.adjoint() * (ops.at(n) * ctx.s_post)).value();
  }
  const Scalar peak = std::abs(rp.own[p - 1]);
  Scalar worst = 0.0;
  for (Eigen::Index n = 0; n < rp.own.size(); ++n) {
    if (n != p - 1) worst = std::max(worst, std::abs(rp.own[n]));
  }
  worst = std::max(worst, rp.pre.lpNorm<Eigen::Infinity>());
  worst = std::max(worst, rp.post.lpNorm<Eigen::Infinity>());
  rp.peak_sidelobe_db = peak > 0.0 ? safe_db20(worst / peak) : kDbFloor;
  return rp;
}

/// Per-antenna peak-to-average power ratio in dB.
inline RVec papr_db(const CVec& s, const Scenario& sc) {
  RVec out(sc.nt);
  for (Eigen::Index a = 0; a < sc.nt; ++a) {
    Scalar peak = 0.0, mean = 0.0;
    for (Eigen::Index t = 0; t < sc.ns; ++t) {
      const Scalar pw = std::norm(s[t * sc.nt + a]);
      peak = std::max(peak, pw);
      mean += pw;
    }
    mean /= static_cast<Scalar>(sc.ns);
    out[a] = mean > 0.0 ? db10(peak / mean) : 0.0;
  }
  return out;
}

inline std::vector<Scalar> ci_margins(const std::vector<CIInstance>& ci, const CVec& s) {
  std::vector<Scalar> m;
  m.reserve(ci.size());
  for (const CIInstance& inst : ci) m.push_back(ci_margin(inst, s));
  return m;
}

struct SerPoint {
  Scalar snr_offset_db{0.0};
  Scalar ser{0.0};
  Scalar half_width{0.0};
  long trials{0};
};

struct SerOptions {
  std::vector<Scalar> snr_offsets_db{0.0};
  long trials{0};  ///< 0 disables the simulation
  int threads{1};
  std::uint64_t seed_salt{0x5e5e};
};

namespace detail {

/// Maximum-likelihood decision index: angular sector for PSK, nearest
/// neighbor in the threshold-scaled grid for QAM.
inline std::size_t decide_symbol(const Constellation& con, Complex y, Scalar qam_gain) {
  const std::vector<Complex> pts = con.points();
  if (con.kind == ConstellationKind::Psk) {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    std::size_t arg = 0;
    const Scalar ang = std::arg(y);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      Scalar d = std::abs(ang - std::arg(pts[i]));
      d = std::min(d, 2.0 * kPi - d);
      if (d < best) {
        best = d;
        arg = i;
      }
    }
    return arg;
  }
  Scalar best = std::numeric_limits<Scalar>::infinity();
  std::size_t arg = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Scalar d = std::norm(y - qam_gain * pts[i]);
    if (d < best) {
      best = d;
      arg = i;
    }
  }
  return arg;
}

}  // namespace detail

/// Monte-Carlo symbol error rate of the fixed waveform under additive
/// circular Gaussian noise.  The offset grid scales the scenario's nominal
/// noise power by 10^(-offset/10).  Work is split over a fixed number of
/// deterministically seeded shards, so results are identical for any thread
/// count; the binomial half-width is the 95% normal approximation.
inline std::vector<SerPoint> simulate_ser(const CVec& s, const Scenario& sc,
                                          const std::vector<Complex>& symbols,
                                          const SerOptions& opt) {
  if (opt.trials <= 0) return {};
  if (opt.trials < 10000) throw ConfigError("simulate_ser: need at least 1e4 trials");
  if (symbols.empty()) throw ConfigError("simulate_ser: no symbols recorded for this block");
  const std::vector<Complex> pts = sc.constellation.points();
  const std::size_t num_symbols = symbols.size();
  std::vector<std::size_t> nominal(num_symbols);
  std::vector<Complex> images(num_symbols);
  const Scalar qam_gain = std::sqrt(sc.gamma_u * sc.sigma2);
  for (std::size_t l = 0; l < num_symbols; ++l) {
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Scalar d = std::norm(symbols[l] - pts[i]);
      if (d < best) {
        best = d;
        nominal[l] = i;
      }
    }
    images[l] = (sc.channels[l].transpose() * s).value();
  }

  constexpr int kShards = 64;
  std::vector<SerPoint> out;
  for (std::size_t gi = 0; gi < opt.snr_offsets_db.size(); ++gi) {
    const Scalar noise_pow = sc.sigma2 * std::pow(10.0, -opt.snr_offsets_db[gi] / 10.0);
    const Scalar noise_std = std::sqrt(noise_pow / 2.0);
    std::vector<long> shard_errors(kShards, 0);
    std::vector<long> shard_trials(kShards, 0);
    for (int sh = 0; sh < kShards; ++sh) {
      shard_trials[sh] = opt.trials / kShards + (sh < opt.trials % kShards ? 1 : 0);
    }
    auto run_shard = [&](int sh) {
      std::mt19937_64 rng(mix_seed(mix_seed(sc.channel_seed, opt.seed_salt),
                                   (static_cast<std::uint64_t>(gi) << 16) |
                                       static_cast<std::uint64_t>(sh)));
      std::normal_distribution<Scalar> n01(0.0, 1.0);
      long errors = 0;
      for (long k = 0; k < shard_trials[sh]; ++k) {
        for (std::size_t l = 0; l < num_symbols; ++l) {
          const Complex noise(noise_std * n01(rng), noise_std * n01(rng));
          if (detail::decide_symbol(sc.constellation, images[l] + noise, qam_gain) != nominal[l]) {
            ++errors;
          }
        }
      }
      shard_errors[sh] = errors;
    };
    const int threads = std::max(1, opt.threads);
    if (threads == 1) {
      for (int sh = 0; sh < kShards; ++sh) run_shard(sh);
    } else {
      std::vector<std::thread> pool;
      std::atomic<int> next{0};
      for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
          for (int sh = next.fetch_add(1); sh < kShards; sh = next.fetch_add(1)) run_shard(sh);
        });
      }
      for (std::thread& th : pool) th.join();
    }
    long errors = 0, total = 0;
    for (int sh = 0; sh < kShards; ++sh) {
      errors += shard_errors[sh];
      total += shard_trials[sh] * static_cast<long>(num_symbols);
    }
    SerPoint point;
    point.snr_offset_db = opt.snr_offsets_db[gi];
    point.trials = total;
    point.ser = total > 0 ? static_cast<Scalar>(errors) / static_cast<Scalar>(total) : 0.0;
    point.half_width = total > 0
                           ? 1.96 * std::sqrt(std::max(point.ser * (1.0 - point.ser), 1e-300) /
                                              static_cast<Scalar>(total))
                           : 0.0;
    out.push_back(point);
  }
  return out;
}

struct EvaluationReport {
  Scalar imsr_db{0.0};
  Scalar imsr_grid_db{0.0};
  std::vector<Scalar> grid_angles_deg;
  RVec beampattern_db;
  RangeProfile profile;
  RVec papr_db_per_antenna;
  std::vector<Scalar> ci_margins;
  FeasibilityReport feasibility;
  std::vector<SerPoint> ser;
};

/// Full metric sweep over a finished design.  The quadratic-form IMSR is
/// cross-checked against the grid summation, and the profile's sidelobe
/// energy against the waveform-space quadratic form; a mismatch means the
/// two computation paths disagree and is reported as a solver-consistency
/// failure.
inline EvaluationReport evaluate_design(const ProblemModel& model,
                                        const std::vector<CIInstance>& ci, const CVec& s,
                                        Scalar t, const CVec& g, const BlockContext& ctx,
                                        const SerOptions& ser_opt = {},
                                        const std::vector<Complex>* symbols = nullptr) {
  EvaluationReport rep;
  rep.imsr_db = isac::imsr_db(s, model.bp);
  rep.imsr_grid_db = isac::imsr_grid_db(model, s);
  if (std::abs(rep.imsr_db - rep.imsr_grid_db) >
      1e-9 * std::max(Scalar(1), std::abs(rep.imsr_db))) {
    throw SolverConsistencyError("evaluate_design: quadratic-form and grid IMSR disagree");
  }
  rep.grid_angles_deg.assign(model.scenario.angle_grid_deg.data(),
                             model.scenario.angle_grid_deg.data() +
                                 model.scenario.angle_grid_deg.size());
  rep.beampattern_db.resize(static_cast<Eigen::Index>(rep.grid_angles_deg.size()));
  for (std::size_t i = 0; i < rep.grid_angles_deg.size(); ++i) {
    rep.beampattern_db[static_cast<Eigen::Index>(i)] =
        safe_db10(beampattern_power(s, model.scenario, rep.grid_angles_deg[i]));
  }
  rep.profile = range_profile(g, s, ctx, model.shift);
  {
    Scalar side_sum = 0.0;
    const Eigen::Index p = model.shift.zero_lag_index;
    for (Eigen::Index n = 0; n < rep.profile.own.size(); ++n) {
      if (n != p - 1) side_sum += std::norm(rep.profile.own[n]);
    }
    const CMat gs = build_G_side(g, model.shift);
    const Scalar quad = (s.adjoint() * gs * s).value().real();
    if (std::abs(side_sum - quad) > 1e-9 * std::max(Scalar(1), quad)) {
      throw SolverConsistencyError("evaluate_design: range-profile/quadratic-form energy mismatch");
    }
  }
  rep.papr_db_per_antenna = papr_db(s, model.scenario);
  rep.ci_margins = isac::ci_margins(ci, s);
  rep.feasibility = assess_feasibility(model, ci, s, t, g);
  if (symbols && ser_opt.trials > 0) {
    rep.ser = simulate_ser(s, model.scenario, *symbols, ser_opt);
  }
  return rep;
}

inline EvaluationReport evaluate_design(const ProblemModel& model,
                                        const std::vector<CIInstance>& ci,
                                        const DesignResult& res, const SerOptions& ser_opt = {}) {
  return evaluate_design(model, ci, res.s, res.t, res.g, res.ctx, ser_opt, &res.symbols);
}

}  // namespace isac
