#pragma once

#include "isac/scenario.hpp"
#include "isac/types.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace isac {

/// Geometry class of a symbol's constructive-interference region in the
/// received-image plane.  PSK symbols own a rotated cone; QAM symbols own a
/// box/halfplane mix depending on where the point sits in the grid:
/// interior points pin both coordinates, horizontal-edge points pin the real
/// coordinate and relax the imaginary one outward, vertical-edge points do
/// the opposite, corners relax both outward.
enum class CIRegionTag { PskCone, ExactA, EdgeB, CornerC, EdgeD };

struct CIRegion {
  CIRegionTag tag{CIRegionTag::PskCone};
  int quadrant{0};     ///< 1..4 for QAM classes, 0 for PSK
  Scalar phi{0.0};     ///< cone half-angle, PSK only
};

inline const char* to_string(CIRegionTag t) {
  switch (t) {
    case CIRegionTag::PskCone: return "PskCone";
    case CIRegionTag::ExactA: return "ExactA";
    case CIRegionTag::EdgeB: return "EdgeB";
    case CIRegionTag::CornerC: return "CornerC";
    case CIRegionTag::EdgeD: return "EdgeD";
  }
  return "?";
}

inline int quadrant_of(Complex z) {
  if (z.real() >= 0.0) return z.imag() >= 0.0 ? 1 : 4;
  return z.imag() >= 0.0 ? 2 : 3;
}

/// Map a constellation point to its region class.  The point must belong to
/// the constellation (relative tolerance 1e-6).
inline CIRegion classify_point(const Constellation& con, Complex s_d) {
  CIRegion r;
  if (con.kind == ConstellationKind::Psk) {
    if (std::abs(std::abs(s_d) - 1.0) > 1e-6) {
      throw std::domain_error("classify_point: not a unit-modulus PSK point");
    }
    r.tag = CIRegionTag::PskCone;
    r.phi = con.psk_half_angle;
    return r;
  }
  const Scalar sc = con.qam_scale();
  const Scalar max_level = (con.qam_side() - 1) * sc;
  auto snapped = [&](Scalar x) {
    const Scalar idx = std::round((x / sc - 1.0) / 2.0) * 2.0 + 1.0;
    return idx * sc;
  };
  const Scalar re = snapped(s_d.real());
  const Scalar im = snapped(s_d.imag());
  if (std::abs(re - s_d.real()) > 1e-6 || std::abs(im - s_d.imag()) > 1e-6 ||
      std::abs(re) > max_level + 1e-9 || std::abs(im) > max_level + 1e-9) {
    throw std::domain_error("classify_point: not a constellation point");
  }
  const bool re_outer = std::abs(std::abs(re) - max_level) <= 1e-9;
  const bool im_outer = std::abs(std::abs(im) - max_level) <= 1e-9;
  if (re_outer && im_outer) r.tag = CIRegionTag::CornerC;
  else if (im_outer) r.tag = CIRegionTag::EdgeB;
  else if (re_outer) r.tag = CIRegionTag::EdgeD;
  else r.tag = CIRegionTag::ExactA;
  r.quadrant = quadrant_of(s_d);
  return r;
}

/// One symbol's projection subproblem: effective channel, nominal symbol and
/// the SINR threshold that scales the region.
struct CIInstance {
  CVec channel;   ///< h, image of a waveform s is h^T s (no conjugation)
  Complex s_d{1.0, 0.0};
  Scalar gamma_u{1.0};
  Scalar sigma2{1.0};
  CIRegion region;

  Scalar threshold_radius() const { return std::sqrt(gamma_u * sigma2) * std::abs(s_d); }
  Complex scaled_target() const { return std::sqrt(gamma_u * sigma2) * s_d; }
  Complex image(const CVec& s) const { return (channel.transpose() * s).value(); }
};

inline CIInstance make_ci_instance(const Scenario& sc, int l, Complex s_d) {
  CIInstance inst;
  inst.channel = sc.channels.at(static_cast<std::size_t>(l));
  inst.s_d = s_d;
  inst.gamma_u = sc.gamma_u;
  inst.sigma2 = sc.sigma2;
  inst.region = classify_point(sc.constellation, s_d);
  return inst;
}

/// Result of one region projection with its KKT certificate.  `kkt_case`
/// numbers the branch that produced the point (1 = unconstrained feasible).
struct ProjectionResult {
  CVec q;
  Complex image{0.0, 0.0};
  int kkt_case{0};
  Scalar lambda1{0.0};
  Scalar lambda2{0.0};
};

namespace detail {

/// Feasible-direction slacks of the PSK cone at image point v, after
/// rotating the nominal symbol onto the positive real axis.  Both must be
/// nonnegative for a feasible point.
inline std::pair<Scalar, Scalar> psk_slacks(Complex v_rot, Scalar radius, Scalar tan_phi) {
  const Scalar edge = (v_rot.real() - radius) * tan_phi;
  return {edge - v_rot.imag(), edge + v_rot.imag()};
}

inline constexpr std::array<int, 4> kDefaultOrder{1, 2, 3, 4};

}  // namespace detail

/// Projection of an image-plane point onto the PSK cone.  `weight` is the
/// squared channel norm of the enclosing problem; multipliers are reported
/// in that problem's normalization.  Branches can be evaluated in any order
/// because each candidate is certified by multiplier signs and feasibility.
inline ProjectionResult project_image_psk(const CIInstance& inst, Complex w, Scalar weight,
                                          std::span<const int> order = {}) {
  ProjectionResult res;
  const Scalar r = inst.threshold_radius();
  const Scalar phi = inst.region.phi;
  if (phi <= 0.0 || phi > kPi / 2 + 1e-12) {
    throw std::domain_error("project_image_psk: cone half-angle must be in (0, pi/2]");
  }
  const Complex rot = std::conj(inst.s_d) / std::abs(inst.s_d);
  const Complex t = w * rot;
  const Scalar tol = 1e-12 * std::max({1.0, std::abs(t), r});

  // Half-plane degeneration: a 2-point alphabet owns everything beyond the
  // threshold line, so only the real part can bind.
  if (phi >= kPi / 2 - 1e-12) {
    if (t.real() >= r - tol) {
      res.image = w;
      res.kkt_case = 1;
    } else {
      res.image = w + (r - t.real()) * std::conj(rot);
      res.kkt_case = 2;
      res.lambda1 = 2.0 * (r - t.real()) / weight;
    }
    return res;
  }

  const Scalar tp = std::tan(phi);
  const auto [slack1, slack2] = detail::psk_slacks(t, r, tp);
  const Scalar denom = (tp * tp + 1.0) * weight;

  auto try_case = [&](int c) -> bool {
    switch (c) {
      case 1: {  // interior
        if (slack1 >= -tol && slack2 >= -tol) {
          res.image = w;
          res.kkt_case = 1;
          return true;
        }
        return false;
      }
      case 2: {  // lower edge active
        const Scalar l2 = -2.0 * slack2 / denom;
        if (l2 < -tol) return false;
        const Complex v = t + l2 * weight * Complex(tp, 1.0) / 2.0;
        const auto [s1, s2] = detail::psk_slacks(v, r, tp);
        (void)s2;
        if (s1 < -tol) return false;
        res.image = v * std::conj(rot);
        res.kkt_case = 2;
        res.lambda2 = l2;
        return true;
      }
      case 3: {  // upper edge active
        const Scalar l1 = -2.0 * slack1 / denom;
        if (l1 < -tol) return false;
        const Complex v = t + l1 * weight * Complex(tp, -1.0) / 2.0;
        const auto [s1, s2] = detail::psk_slacks(v, r, tp);
        (void)s1;
        if (s2 < -tol) return false;
        res.image = v * std::conj(rot);
        res.kkt_case = 3;
        res.lambda1 = l1;
        return true;
      }
      case 4: {  // both edges active: the apex
        const Scalar za = (tp * tp + 1.0) * weight / 2.0;
        const Scalar zb = (tp * tp - 1.0) * weight / 2.0;
        const Scalar det = za * za - zb * zb;  // = weight^2 tan^2(phi)
        const Scalar zeta1 = -slack1, zeta2 = -slack2;
        res.lambda1 = (za * zeta1 - zb * zeta2) / det;
        res.lambda2 = (za * zeta2 - zb * zeta1) / det;
        if (res.lambda1 < -tol || res.lambda2 < -tol) {
          res.lambda1 = res.lambda2 = 0.0;
          return false;
        }
        res.image = Complex(r, 0.0) * std::conj(rot);
        res.kkt_case = 4;
        return true;
      }
      default:
        throw std::domain_error("project_image_psk: branch index out of range");
    }
  };

  const std::span<const int> ord =
      order.empty() ? std::span<const int>(detail::kDefaultOrder) : order;
  for (int c : ord) {
    if (try_case(c)) return res;
  }
  throw SolverConsistencyError("project_image_psk: no KKT branch certified");
}

/// QAM projections in the image plane.  The quadrant only flips the
/// feasibility/multiplier sign checks; the pinning formulas are shared.
inline ProjectionResult project_image_qam(const CIInstance& inst, Complex w, Scalar weight,
                                          std::span<const int> order = {}) {
  ProjectionResult res;
  const Complex z = inst.scaled_target();
  const Scalar tol = 1e-12 * std::max({1.0, std::abs(w), std::abs(z)});
  const Scalar sre = z.real() >= 0.0 ? 1.0 : -1.0;
  const Scalar sim = z.imag() >= 0.0 ? 1.0 : -1.0;

  const Complex pin_both = z;
  const Complex pin_re = Complex(z.real(), w.imag());
  const Complex pin_im = Complex(w.real(), z.imag());

  switch (inst.region.tag) {
    case CIRegionTag::ExactA: {
      res.image = pin_both;
      res.kkt_case = 1;
      return res;
    }
    case CIRegionTag::EdgeB: {  // real pinned, imaginary pushed outward
      if (sim * (w.imag() - z.imag()) >= -tol) {
        res.image = pin_re;
        res.kkt_case = 1;
      } else {
        res.image = pin_both;
        res.kkt_case = 2;
        res.lambda1 = 2.0 * sim * (z.imag() - w.imag()) / weight;
      }
      return res;
    }
    case CIRegionTag::EdgeD: {  // imaginary pinned, real pushed outward
      if (sre * (w.real() - z.real()) >= -tol) {
        res.image = pin_im;
        res.kkt_case = 1;
      } else {
        res.image = pin_both;
        res.kkt_case = 2;
        res.lambda1 = 2.0 * sre * (z.real() - w.real()) / weight;
      }
      return res;
    }
    case CIRegionTag::CornerC: {
      auto try_case = [&](int c) -> bool {
        switch (c) {
          case 1: {  // both slack
            if (sre * (w.real() - z.real()) >= -tol && sim * (w.imag() - z.imag()) >= -tol) {
              res.image = w;
              res.kkt_case = 1;
              return true;
            }
            return false;
          }
          case 2: {  // imaginary bound active
            const Scalar l2 = 2.0 * sim * (z.imag() - w.imag()) / weight;
            if (l2 < -tol || sre * (w.real() - z.real()) < -tol) return false;
            res.image = pin_im;
            res.kkt_case = 2;
            res.lambda2 = l2;
            return true;
          }
          case 3: {  // real bound active
            const Scalar l1 = 2.0 * sre * (z.real() - w.real()) / weight;
            if (l1 < -tol || sim * (w.imag() - z.imag()) < -tol) return false;
            res.image = pin_re;
            res.kkt_case = 3;
            res.lambda1 = l1;
            return true;
          }
          case 4: {  // corner
            const Scalar l1 = 2.0 * sre * (z.real() - w.real()) / weight;
            const Scalar l2 = 2.0 * sim * (z.imag() - w.imag()) / weight;
            if (l1 < -tol || l2 < -tol) return false;
            res.image = pin_both;
            res.kkt_case = 4;
            res.lambda1 = l1;
            res.lambda2 = l2;
            return true;
          }
          default:
            throw std::domain_error("project_image_qam: branch index out of range");
        }
      };
      const std::span<const int> ord =
          order.empty() ? std::span<const int>(detail::kDefaultOrder) : order;
      for (int c : ord) {
        if (try_case(c)) return res;
      }
      throw SolverConsistencyError("project_image_qam: no KKT branch certified");
    }
    case CIRegionTag::PskCone:
      throw std::domain_error("project_image_qam: PSK region");
  }
  throw std::domain_error("project_image_qam: unknown region");
}

/// Projection of an image-plane point onto the instance's feasible set.
inline ProjectionResult project_image(const CIInstance& inst, Complex w,
                                      std::span<const int> order = {}) {
  return inst.region.tag == CIRegionTag::PskCone ? project_image_psk(inst, w, 1.0, order)
                                                 : project_image_qam(inst, w, 1.0, order);
}

namespace detail {

/// Lift an image-plane projection back to waveform space.  The optimal
/// correction is always along the conjugate channel, so the full problem
/// reduces exactly to the 2-D one.
inline ProjectionResult lift_projection(const CIInstance& inst, const CVec& center,
                                        ProjectionResult img) {
  const Scalar h2 = inst.channel.squaredNorm();
  if (h2 <= 0.0) throw std::domain_error("ci projection: zero channel");
  const Complex w = inst.image(center);
  img.q = center + ((img.image - w) / h2) * inst.channel.conjugate();
  return img;
}

}  // namespace detail

inline ProjectionResult project_psk_detail(const CIInstance& inst, const CVec& center,
                                           std::span<const int> order = {}) {
  const Scalar h2 = inst.channel.squaredNorm();
  if (h2 <= 0.0) throw std::domain_error("project_psk: zero channel");
  return detail::lift_projection(
      inst, center, project_image_psk(inst, inst.image(center), h2, order));
}

inline ProjectionResult project_qam_detail(const CIInstance& inst, const CVec& center,
                                           std::span<const int> order = {}) {
  const Scalar h2 = inst.channel.squaredNorm();
  if (h2 <= 0.0) throw std::domain_error("project_qam: zero channel");
  return detail::lift_projection(
      inst, center, project_image_qam(inst, inst.image(center), h2, order));
}

inline ProjectionResult project_ci_detail(const CIInstance& inst, const CVec& center,
                                          std::span<const int> order = {}) {
  return inst.region.tag == CIRegionTag::PskCone ? project_psk_detail(inst, center, order)
                                                 : project_qam_detail(inst, center, order);
}

/// Minimum-distance point of the symbol's feasible set from `center`.
inline CVec project_ci(const CIInstance& inst, const CVec& center) {
  return project_ci_detail(inst, center).q;
}

/// Signed feasibility margin of an image point: smallest inequality slack,
/// with equality constraints contributing minus their absolute residual.
/// Nonnegative (to tolerance) means feasible.
inline Scalar ci_margin_image(const CIInstance& inst, Complex v) {
  const Complex z = inst.scaled_target();
  switch (inst.region.tag) {
    case CIRegionTag::PskCone: {
      const Complex rot = std::conj(inst.s_d) / std::abs(inst.s_d);
      const Complex vr = v * rot;
      const Scalar r = inst.threshold_radius();
      if (inst.region.phi >= kPi / 2 - 1e-12) return vr.real() - r;
      const auto [s1, s2] = detail::psk_slacks(vr, r, std::tan(inst.region.phi));
      return std::min(s1, s2);
    }
    case CIRegionTag::ExactA:
      return -std::abs(v - z);
    case CIRegionTag::EdgeB: {
      const Scalar sim = z.imag() >= 0.0 ? 1.0 : -1.0;
      return std::min(-std::abs(v.real() - z.real()), sim * (v.imag() - z.imag()));
    }
    case CIRegionTag::EdgeD: {
      const Scalar sre = z.real() >= 0.0 ? 1.0 : -1.0;
      return std::min(sre * (v.real() - z.real()), -std::abs(v.imag() - z.imag()));
    }
    case CIRegionTag::CornerC: {
      const Scalar sre = z.real() >= 0.0 ? 1.0 : -1.0;
      const Scalar sim = z.imag() >= 0.0 ? 1.0 : -1.0;
      return std::min(sre * (v.real() - z.real()), sim * (v.imag() - z.imag()));
    }
  }
  throw std::domain_error("ci_margin_image: unknown region");
}

inline Scalar ci_margin(const CIInstance& inst, const CVec& s) {
  return ci_margin_image(inst, inst.image(s));
}

}  // namespace isac
