#ifndef HERDING__BOUNDS_HPP_
#define HERDING__BOUNDS_HPP_

/// \file
/// \brief Closed-form bounds certifying that every per-dog allocated constraint stays feasible,
/// and a monitor for the distance hypotheses those bounds rest on.
///
/// Under the distance bounds, Frobenius norms of the flock Jacobians and the sheep speed are
/// bounded, which gives a finite lower bound on the allocated constraint rhs. Together with a
/// non-vanishing constraint row this rules out infeasibility.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "herding/cbf.hpp"
#include "herding/world.hpp"

namespace herding
{

/// Hypothesised distance envelope for an episode.
struct DistanceBounds
{
  double l_s = 0.1;      ///< min sheep-sheep distance [m]
  double m_s = 10.0;     ///< max sheep-sheep distance [m]
  double l_d = 0.05;     ///< min sheep-dog distance [m]
  double m_g = 10.0;     ///< max sheep-goal distance [m]
  double m_p = 10.0;     ///< max sheep-zone-center distance [m]
  double u_d_max = 2.0;  ///< max dog speed [m/s]

  void validate() const
  {
    if (!(l_s > 0.0 && l_s <= m_s && l_d > 0.0 && m_g >= 0.0 && m_p >= 0.0 && u_d_max >= 0.0)) {
      throw std::invalid_argument(
        "distance bounds need 0 < l_s <= m_s, l_d > 0, and non-negative m_g, m_p, u_d_max");
    }
  }
};

struct FeasibilityReport
{
  double lambda_m = 0.0;
  double lambda_s = 0.0;
  double lambda_d = 0.0;
  double f_max = 0.0;
  double b_lower = 0.0;
  bool feasible_certificate = false;
};

namespace detail
{
inline constexpr double kSqrt2 = 1.4142135623730951;
inline constexpr double kThreePlusSqrt2 = 3.0 + kSqrt2;
}  // namespace detail

/// Bound on the Frobenius norm of d f_i / d x_{S_j}, j != i.
inline double lambda_s(double k_s, double r_s, double l_s)
{
  const double ratio = r_s / l_s;
  return detail::kSqrt2 * k_s + detail::kThreePlusSqrt2 * k_s * ratio * ratio * ratio;
}

/// Bound on the Frobenius norm of d f_i / d x_{D_l}.
inline double lambda_d(double k_d, double l_d)
{
  return detail::kThreePlusSqrt2 * k_d / (l_d * l_d * l_d);
}

/// Bound on the Frobenius norm of d f_i / d x_{S_i} with n sheep and n dogs.
inline double lambda_m(
  std::size_t n, double k_s, double k_g, double k_d, double r_s, double l_s, double l_d)
{
  if (n < 1) {
    throw std::invalid_argument("lambda_m needs n >= 1");
  }
  const double nn = static_cast<double>(n);
  return (nn - 1.0) * lambda_s(k_s, r_s, l_s) + detail::kSqrt2 * k_g + nn * lambda_d(k_d, l_d);
}

/// Largest flock-term magnitude per neighbour. k_S (r + R^3/r^2) is convex in r with its minimum
/// at r = 2^(1/3) R, so the maximum over [l_s, m_s] sits at an endpoint.
inline double f_max_pair(const SheepParams & p, const DistanceBounds & db)
{
  const double r3 = p.r_s * p.r_s * p.r_s;
  const auto term = [&](double r) { return p.k_s * r + p.k_s * r3 / (r * r); };
  return std::max(term(db.l_s), term(db.m_s));
}

/// Upper bound on any sheep speed ||f_i||.
inline double f_max_bound(std::size_t n, const SheepParams & p, const DistanceBounds & db)
{
  const double nn = static_cast<double>(n);
  return (nn - 1.0) * f_max_pair(p, db) + p.k_g * db.m_g + nn * p.k_d / (db.l_d * db.l_d);
}

/// Lower bound on the allocated-constraint rhs for barrier gains `g`.
inline double b_lower_bound(
  std::size_t n, const SheepParams & p, const CbfGains & g, const DistanceBounds & db)
{
  const double nn = static_cast<double>(n);
  const double lm = lambda_m(n, p.k_s, p.k_g, p.k_d, p.r_s, db.l_s, db.l_d);
  const double ls = lambda_s(p.k_s, p.r_s, db.l_s);
  const double ld = lambda_d(p.k_d, db.l_d);
  const double gamma = -(g.alpha + lm + (nn - 1.0) * ls) * db.m_p;
  return gamma * f_max_bound(n, p, db) - (nn - 1.0) * ld * db.m_p * db.u_d_max;
}

/// Assembles the bound chain. The rhs bound is taken for the largest alpha in `gains` (the
/// most negative, hence valid for every pair). The certificate requires equal team sizes,
/// valid bounds and finite values.
inline FeasibilityReport feasibility_report(
  std::size_t num_sheep, std::size_t num_dogs, const SheepParams & p, const GainTable & gains,
  const DistanceBounds & db)
{
  db.validate();
  const std::size_t n = std::max(num_sheep, num_dogs);
  FeasibilityReport rep;
  rep.lambda_s = lambda_s(p.k_s, p.r_s, db.l_s);
  rep.lambda_d = lambda_d(p.k_d, db.l_d);
  rep.lambda_m = lambda_m(n, p.k_s, p.k_g, p.k_d, p.r_s, db.l_s, db.l_d);
  rep.f_max = f_max_bound(n, p, db);

  CbfGains worst = CbfGains::from_poles(1.0, 1.0);
  worst.alpha = 0.0;
  for (std::size_t i = 0; i < gains.num_sheep(); ++i) {
    for (std::size_t z = 0; z < gains.num_zones(); ++z) {
      if (gains(i, z).alpha > worst.alpha) {
        worst = gains(i, z);
      }
    }
  }
  rep.b_lower = b_lower_bound(n, p, worst, db);
  rep.feasible_certificate = num_sheep == num_dogs && p.k_d > 0.0 && std::isfinite(rep.b_lower);
  return rep;
}

/// One failed clause of the distance hypotheses.
struct AssumptionViolation
{
  enum class Kind { sheep_too_close, sheep_too_far, dog_too_close, goal_too_far, zone_too_far };
  Kind kind;
  std::size_t a = 0;  ///< first agent (sheep index)
  std::size_t b = 0;  ///< second agent: sheep, dog or zone index; unused for the goal clause
  double distance = 0.0;

  std::string describe() const
  {
    switch (kind) {
      case Kind::sheep_too_close:
        return "sheep " + std::to_string(a) + "/" + std::to_string(b) + " closer than l_s";
      case Kind::sheep_too_far:
        return "sheep " + std::to_string(a) + "/" + std::to_string(b) + " farther than m_s";
      case Kind::dog_too_close:
        return "sheep " + std::to_string(a) + " and dog " + std::to_string(b) + " closer than l_d";
      case Kind::goal_too_far:
        return "sheep " + std::to_string(a) + " farther than m_g from goal";
      case Kind::zone_too_far:
        return "sheep " + std::to_string(a) + " farther than m_p from zone " + std::to_string(b);
    }
    return "unknown";
  }
};

/// Checks every distance clause; an empty result certifies the tick.
inline std::vector<AssumptionViolation> monitor_assumptions(
  const WorldState & w, const SheepParams & p, std::span<const Zone> zones, const DistanceBounds & db)
{
  using Kind = AssumptionViolation::Kind;
  std::vector<AssumptionViolation> out;
  for (std::size_t i = 0; i < w.sheep.size(); ++i) {
    for (std::size_t j = i + 1; j < w.sheep.size(); ++j) {
      const double d = (w.sheep[i] - w.sheep[j]).norm();
      if (d < db.l_s) {
        out.push_back({Kind::sheep_too_close, i, j, d});
      }
      if (d > db.m_s) {
        out.push_back({Kind::sheep_too_far, i, j, d});
      }
    }
    for (std::size_t k = 0; k < w.dogs.size(); ++k) {
      const double d = (w.sheep[i] - w.dogs[k]).norm();
      if (d < db.l_d) {
        out.push_back({Kind::dog_too_close, i, k, d});
      }
    }
    const double dg = (w.sheep[i] - p.goal).norm();
    if (dg > db.m_g) {
      out.push_back({Kind::goal_too_far, i, 0, dg});
    }
    for (std::size_t z = 0; z < zones.size(); ++z) {
      const double dz = (w.sheep[i] - zones[z].center).norm();
      if (dz > db.m_p) {
        out.push_back({Kind::zone_too_far, i, z, dz});
      }
    }
  }
  return out;
}

inline double frobenius(const Mat2 & m) { return m.norm(); }

}  // namespace herding

#endif  // HERDING__BOUNDS_HPP_
