#pragma once

// Brute-force reference solvers.  Everything here is deliberately written
// from the problem statements with plain loops, independent of the
// closed-form implementations it validates, and is allowed to be slow.

#include "isac/ci.hpp"
#include "isac/subproblems.hpp"
#include "isac/types.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace isac::oracle {

struct GridLambdaResult {
  Scalar lambda{0.0};
  CVec x;
};

namespace detail {

inline CVec dual_point(const RVec& a, const CVec& beta, const CVec& c, Scalar lambda) {
  CVec x(c.size());
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    x[i] = (c[i] + 0.5 * lambda * beta[i]) / (1.0 + lambda * a[i]);
  }
  return x;
}

inline Scalar constraint_at(const RVec& a, const CVec& beta, const CVec& c, Scalar lambda) {
  Scalar v = 0.0;
  const CVec x = dual_point(a, beta, c, lambda);
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    v += a[i] * std::norm(x[i]) - (std::conj(beta[i]) * x[i]).real();
  }
  return v;
}

}  // namespace detail

/// Dense geometric scan of the dual residual, then bisection inside the
/// first sign-change bracket.
inline GridLambdaResult grid_lambda_oracle(const RotatedQcInstance& inst, Scalar lo = 1e-9,
                                           Scalar hi = 1e9, long resolution = 1000000) {
  if (inst.center.size() > 16) throw std::domain_error("grid_lambda_oracle: dimension too large");
  GridLambdaResult res;
  if (detail::constraint_at(inst.a, inst.beta, inst.center, 0.0) <= 0.0) {
    res.lambda = 0.0;
    res.x = inst.center;
    return res;
  }
  const Scalar ratio = std::log(hi / lo) / static_cast<Scalar>(resolution);
  Scalar prev = 0.0;
  Scalar found_lo = -1.0, found_hi = -1.0;
  for (long k = 0; k <= resolution; ++k) {
    const Scalar lam = lo * std::exp(ratio * static_cast<Scalar>(k));
    if (detail::constraint_at(inst.a, inst.beta, inst.center, lam) <= 0.0) {
      found_lo = prev;
      found_hi = lam;
      break;
    }
    prev = lam;
  }
  if (found_hi < 0.0) throw DivergenceError("grid_lambda_oracle: no sign change on the grid");
  for (int it = 0; it < 200; ++it) {
    const Scalar mid = 0.5 * (found_lo + found_hi);
    if (detail::constraint_at(inst.a, inst.beta, inst.center, mid) > 0.0) {
      found_lo = mid;
    } else {
      found_hi = mid;
    }
  }
  res.lambda = 0.5 * (found_lo + found_hi);
  res.x = detail::dual_point(inst.a, inst.beta, inst.center, res.lambda);
  return res;
}

namespace detail {

/// Membership predicates written from the region definitions.
inline bool feasible_2d(const CIInstance& inst, Complex v) {
  const Complex z = inst.scaled_target();
  switch (inst.region.tag) {
    case CIRegionTag::PskCone: {
      const Complex vr = v * std::conj(inst.s_d) / std::abs(inst.s_d);
      const Scalar r = inst.threshold_radius();
      if (inst.region.phi >= kPi / 2 - 1e-12) return vr.real() >= r;
      return (vr.real() - r) * std::tan(inst.region.phi) >= std::abs(vr.imag());
    }
    case CIRegionTag::CornerC: {
      const Scalar sre = z.real() >= 0.0 ? 1.0 : -1.0;
      const Scalar sim = z.imag() >= 0.0 ? 1.0 : -1.0;
      return sre * (v.real() - z.real()) >= 0.0 && sim * (v.imag() - z.imag()) >= 0.0;
    }
    default:
      throw std::domain_error("feasible_2d: region has no 2-D interior");
  }
}

}  // namespace detail

/// Nearest feasible image-plane point by exhaustive search.  Regions with a
/// 2-D interior are scanned on shrinking square grids; the equality-pinned
/// classes reduce to a ray (or a single point) and are scanned along their
/// one free parameter.
inline Complex projection_oracle_2d(const CIInstance& inst, Complex w) {
  const Complex z = inst.scaled_target();

  auto scan_ray = [&](Complex base, Complex dir) {
    // minimize |base + t*dir - w| over t >= 0, by 1-D shrinking grids
    Scalar t_best = 0.0;
    Scalar lo = 0.0, hi = 2.0 * (std::abs(w - base) + 1.0);
    for (int round = 0; round < 6; ++round) {
      Scalar best_val = std::numeric_limits<Scalar>::infinity();
      const Scalar step = (hi - lo) / 400.0;
      for (int k = 0; k <= 400; ++k) {
        const Scalar t = lo + step * static_cast<Scalar>(k);
        const Scalar val = std::abs(base + t * dir - w);
        if (val < best_val) {
          best_val = val;
          t_best = t;
        }
      }
      lo = std::max(Scalar(0), t_best - 2.0 * step);
      hi = t_best + 2.0 * step;
    }
    return base + t_best * dir;
  };

  switch (inst.region.tag) {
    case CIRegionTag::ExactA:
      return z;
    case CIRegionTag::EdgeB: {
      const Scalar sim = z.imag() >= 0.0 ? 1.0 : -1.0;
      return scan_ray(z, Complex(0.0, sim));
    }
    case CIRegionTag::EdgeD: {
      const Scalar sre = z.real() >= 0.0 ? 1.0 : -1.0;
      return scan_ray(z, Complex(sre, 0.0));
    }
    default:
      break;
  }

  // 2-D interior.  Stage one: shrinking square grids, centered on the query
  // point and initially wide enough to contain every candidate (the anchor
  // is feasible, so the optimum is no farther from w than the anchor).
  if (detail::feasible_2d(inst, w)) return w;
  Complex anchor = inst.region.tag == CIRegionTag::PskCone
                       ? inst.threshold_radius() * inst.s_d / std::abs(inst.s_d)
                       : z;
  Complex best = anchor;
  Scalar best_val = std::abs(best - w);
  Complex center = w;
  Scalar half = std::abs(w - anchor) + 1.0;
  for (int round = 0; round < 8; ++round) {
    const Scalar step = half / 100.0;
    for (int i = -100; i <= 100; ++i) {
      for (int k = -100; k <= 100; ++k) {
        const Complex v = center + Complex(step * i, step * k);
        if (!detail::feasible_2d(inst, v)) continue;
        const Scalar val = std::abs(v - w);
        if (val < best_val) {
          best_val = val;
          best = v;
        }
      }
    }
    center = best;
    half = half / 3.0;
  }

  // Stage two: polar polish.  Along a curved boundary the distance to w is
  // flat to second order tangentially, so an axis-aligned grid localizes the
  // optimum only to O(sqrt(step)).  In polar coordinates around w the
  // objective is the radius itself: the entry radius along a fixed ray is
  // found by bisection (a transversal crossing, hence first-order sharp),
  // and because the region is convex the sublevel sets of the entry radius
  // are angular intervals, so a shrinking angular grid converges.
  if (best_val > 1e-9) {
    auto entry_radius = [&](Scalar theta) {
      const Complex dir(std::cos(theta), std::sin(theta));
      const Scalar top = 1.3 * best_val;
      const Scalar step = top / 130.0;
      Scalar hi = -1.0;
      for (int k = 1; k <= 130; ++k) {
        const Scalar r = step * static_cast<Scalar>(k);
        if (detail::feasible_2d(inst, w + r * dir)) {
          hi = r;
          break;
        }
      }
      if (hi < 0.0) return std::numeric_limits<Scalar>::infinity();
      Scalar lo = hi - step;
      for (int it = 0; it < 80; ++it) {
        const Scalar mid = 0.5 * (lo + hi);
        if (detail::feasible_2d(inst, w + mid * dir)) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      return hi;
    };
    Scalar th_center = std::arg(best - w);
    Scalar th_half = 0.05;
    Scalar th_best = th_center;
    Scalar r_best = best_val;
    for (int round = 0; round < 16; ++round) {
      const Scalar step = th_half / 50.0;
      for (int i = -50; i <= 50; ++i) {
        const Scalar th = th_center + step * static_cast<Scalar>(i);
        const Scalar r = entry_radius(th);
        if (r < r_best) {
          r_best = r;
          th_best = th;
        }
      }
      th_center = th_best;
      th_half /= 2.5;
    }
    if (r_best < best_val) {
      best = w + r_best * Complex(std::cos(th_best), std::sin(th_best));
      best_val = r_best;
    }
  }
  return best;
}

struct QcqpOracleResult {
  CVec x;
  Scalar value{0.0};
  bool converged{true};
};

/// Cyclic Dykstra iteration onto an intersection of simple sets.
inline CVec dykstra_project(CVec x, const std::vector<std::function<CVec(const CVec&)>>& projectors,
                            int sweeps = 200) {
  std::vector<CVec> corrections(projectors.size(), CVec::Zero(x.size()));
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t i = 0; i < projectors.size(); ++i) {
      const CVec y = x + corrections[i];
      const CVec px = projectors[i](y);
      corrections[i] = y - px;
      x = px;
    }
  }
  return x;
}

/// Projected gradient with diminishing steps; a reference, not a solver.
inline QcqpOracleResult qcqp_oracle(const std::function<Scalar(const CVec&)>& value,
                                    const std::function<CVec(const CVec&)>& grad,
                                    const std::function<CVec(const CVec&)>& project, CVec x0,
                                    long iterations = 1000000, Scalar step0 = 0.1) {
  QcqpOracleResult res;
  CVec x = project(x0);
  const Scalar v0 = value(x);
  for (long k = 0; k < iterations; ++k) {
    const Scalar step = step0 / std::sqrt(static_cast<Scalar>(k + 1));
    x = project(x - step * grad(x));
    if (!x.allFinite()) {
      res.converged = false;
      break;
    }
  }
  res.x = x;
  res.value = value(x);
  if (res.value > std::abs(v0) * 1e12 + 1.0) res.converged = false;
  return res;
}

/// Random instance generators shared by the test suite and the validation
/// command; everything is reproducible from the seed.
inline RotatedQcInstance random_qc_instance(std::mt19937_64& rng, Eigen::Index dim,
                                            bool allow_zero_curvature = true) {
  std::uniform_real_distribution<Scalar> unif(0.0, 2.0);
  std::normal_distribution<Scalar> n01(0.0, 1.0);
  RotatedQcInstance inst;
  inst.a.resize(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const bool zero = allow_zero_curvature && unif(rng) < 0.4;
    inst.a[i] = zero ? 0.0 : unif(rng);
  }
  inst.beta.resize(dim);
  inst.center.resize(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    inst.beta[i] = Complex(n01(rng), n01(rng));
    inst.center[i] = Complex(n01(rng), n01(rng));
  }
  return inst;
}

inline CIInstance random_ci_instance(std::mt19937_64& rng, const Constellation& con,
                                     Eigen::Index dim, Scalar gamma_u = 8.0,
                                     Scalar sigma2 = 0.1) {
  std::normal_distribution<Scalar> n01(0.0, 1.0);
  CIInstance inst;
  inst.channel.resize(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    inst.channel[i] = Complex(n01(rng), n01(rng)) / std::sqrt(2.0);
  }
  if (inst.channel.norm() < 1e-3) inst.channel[0] += Complex(1.0, 0.0);
  const std::vector<Complex> pts = con.points();
  std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
  inst.s_d = pts[pick(rng)];
  inst.gamma_u = gamma_u;
  inst.sigma2 = sigma2;
  inst.region = classify_point(con, inst.s_d);
  return inst;
}

}  // namespace isac::oracle
