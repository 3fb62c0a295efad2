#ifndef HERDING__CBF_HPP_
#define HERDING__CBF_HPP_

/// \file
/// \brief Second-order barrier on the distance of each sheep to each protected zone, and the
/// linear dog-velocity constraints that enforce it.

#include <algorithm>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "herding/world.hpp"

namespace herding
{

/// Pole placement of the cascaded barrier: v = h' + p1 h, v' + p2 v >= 0.
struct CbfGains
{
  double p1 = 1.0;
  double p2 = 1.0;
  double alpha = 2.0;  ///< p1 + p2
  double beta = 1.0;   ///< p1 * p2

  static CbfGains from_poles(double p1, double p2)
  {
    if (!(p1 > 0.0) || !(p2 > 0.0)) {
      throw std::invalid_argument("barrier poles must be positive");
    }
    return CbfGains{p1, p2, p1 + p2, p1 * p2};
  }
};

/// Gains per (sheep, zone) pair, frozen at episode start.
class GainTable
{
public:
  GainTable() = default;
  GainTable(std::size_t num_sheep, std::size_t num_zones)
  : num_zones_(num_zones), gains_(num_sheep * num_zones) {}

  CbfGains & operator()(std::size_t sheep, std::size_t zone) { return gains_.at(sheep * num_zones_ + zone); }
  const CbfGains & operator()(std::size_t sheep, std::size_t zone) const
  {
    return gains_.at(sheep * num_zones_ + zone);
  }
  std::size_t num_sheep() const { return num_zones_ == 0 ? 0 : gains_.size() / num_zones_; }
  std::size_t num_zones() const { return num_zones_; }

private:
  std::size_t num_zones_ = 0;
  std::vector<CbfGains> gains_;
};

/// One half-space `row . u <= rhs` on stacked dog velocities (width 2 n_D) or on a single
/// dog velocity (width 2).
struct LinearConstraint
{
  Eigen::VectorXd row;
  double rhs = 0.0;
  std::size_t sheep_index = 0;
  std::size_t zone_index = 0;

  double slack(const Eigen::VectorXd & u) const { return rhs - row.dot(u); }
};

class SheepInsideZone : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Signed squared clearance of a sheep from the buffered zone; negative means breach.
inline double barrier_h(const Vec2 & xs, const Zone & z)
{
  const double reach = z.radius + z.buffer;
  return (xs - z.center).squaredNorm() - reach * reach;
}

/// Time derivative of the barrier along the flock field.
inline double barrier_h_dot(const WorldState & w, const SheepParams & p, std::size_t i, const Zone & z)
{
  return 2.0 * (w.sheep.at(i) - z.center).dot(sheep_velocity(w, p, i));
}

namespace detail
{

/// Sum over all sheep j (including i) of J^S_ji f_j.
inline Vec2 flock_drift(
  const WorldState & w, const SheepParams & p, std::size_t i, std::span<const Vec2> f)
{
  Vec2 acc = Vec2::Zero();
  for (std::size_t j = 0; j < w.sheep.size(); ++j) {
    acc += jac_sheep(w, p, i, j) * f[j];
  }
  return acc;
}

}  // namespace detail

/// Second time derivative of the barrier given every dog's velocity.
inline double barrier_h_ddot(
  const WorldState & w, const SheepParams & p, std::size_t i, const Zone & z,
  std::span<const Vec2> dog_velocities)
{
  if (dog_velocities.size() != w.dogs.size()) {
    throw std::invalid_argument("barrier_h_ddot needs one velocity per dog");
  }
  const auto f = all_sheep_velocities(w, p);
  Vec2 accel = detail::flock_drift(w, p, i, f);
  for (std::size_t l = 0; l < w.dogs.size(); ++l) {
    accel += jac_sheep_wrt_dog(w, p, i, l) * dog_velocities[l];
  }
  return 2.0 * f[i].squaredNorm() + 2.0 * (w.sheep[i] - z.center).dot(accel);
}

/// h'' + alpha h' + beta h; the barrier is certified while this stays non-negative.
inline double barrier_signal(
  const WorldState & w, const SheepParams & p, const CbfGains & g, std::size_t i, const Zone & z,
  std::span<const Vec2> dog_velocities)
{
  return barrier_h_ddot(w, p, i, z, dog_velocities) + g.alpha * barrier_h_dot(w, p, i, z) +
         g.beta * barrier_h(w.sheep.at(i), z);
}

/// Picks barrier poles from the initial state. Each pole is `base` unless the positivity
/// condition on the initial state demands more, in which case it is that lower bound inflated
/// by (1 + margin). The second-order term is evaluated with the dogs at rest.
inline CbfGains select_gains(
  const WorldState & w0, const SheepParams & p, std::size_t i, const Zone & z, double base = 1.0,
  double margin = 0.5)
{
  if (!(base > 0.0) || !(margin >= 0.0)) {
    throw std::invalid_argument("gain policy needs base > 0 and margin >= 0");
  }
  const double h0 = barrier_h(w0.sheep.at(i), z);
  if (!(h0 > 0.0)) {
    throw SheepInsideZone(
      "sheep " + std::to_string(i) + " does not start strictly outside the buffered zone");
  }
  const double hd0 = barrier_h_dot(w0, p, i, z);
  const std::vector<Vec2> resting(w0.dogs.size(), Vec2::Zero());
  const double hdd0 = barrier_h_ddot(w0, p, i, z, resting);

  const auto pick = [&](double lower) {
    return lower > 0.0 ? std::max(base, (1.0 + margin) * lower) : base;
  };
  const double p1 = pick(-hd0 / h0);
  // hd0 + p1 h0 > 0 is guaranteed by the choice of p1.
  const double p2 = pick(-(hdd0 + p1 * hd0) / (hd0 + p1 * h0));
  return CbfGains::from_poles(p1, p2);
}

/// Gains for every (sheep, zone) pair under one policy.
inline GainTable select_all_gains(
  const WorldState & w0, const SheepParams & p, std::span<const Zone> zones, double base = 1.0,
  double margin = 0.5)
{
  GainTable table(w0.sheep.size(), zones.size());
  for (std::size_t i = 0; i < w0.sheep.size(); ++i) {
    for (std::size_t z = 0; z < zones.size(); ++z) {
      table(i, z) = select_gains(w0, p, i, zones[z], base, margin);
    }
  }
  return table;
}

namespace detail
{

/// Constraint rhs shared by the centralized and allocated forms (everything except dog terms).
inline double drift_rhs(
  const WorldState & w, const SheepParams & p, const CbfGains & g, std::size_t i, const Zone & z,
  std::span<const Vec2> f)
{
  const Vec2 offset = w.sheep[i] - z.center;
  return f[i].squaredNorm() + offset.dot(flock_drift(w, p, i, f)) + g.alpha * offset.dot(f[i]) +
         0.5 * g.beta * barrier_h(w.sheep[i], z);
}

}  // namespace detail

/// Constraint on all dog velocities stacked as (u_1x, u_1y, u_2x, ...) keeping sheep `i` out of
/// zone `z`. Satisfying it is equivalent to h'' + alpha h' + beta h >= 0 (halved).
inline LinearConstraint centralized_constraint(
  const WorldState & w, const SheepParams & p, const CbfGains & g, std::size_t i, const Zone & z,
  std::size_t zone_index = 0)
{
  detail::check_sheep_index(w, i);
  const auto f = all_sheep_velocities(w, p);
  const Vec2 inward = z.center - w.sheep[i];

  LinearConstraint c;
  c.row.resize(static_cast<Eigen::Index>(2 * w.dogs.size()));
  for (std::size_t l = 0; l < w.dogs.size(); ++l) {
    c.row.segment<2>(static_cast<Eigen::Index>(2 * l)) =
      jac_sheep_wrt_dog(w, p, i, l).transpose() * inward;
  }
  c.rhs = detail::drift_rhs(w, p, g, i, z, f);
  c.sheep_index = i;
  c.zone_index = zone_index;
  return c;
}

/// Constraint on dog `k` alone, with the other dogs' contributions moved to the rhs.
/// `other_dog_velocities` holds one entry per dog; entry `k` is ignored.
inline LinearConstraint allocated_constraint(
  const WorldState & w, const SheepParams & p, const CbfGains & g, std::size_t i, std::size_t k,
  std::span<const Vec2> other_dog_velocities, const Zone & z, std::size_t zone_index = 0)
{
  detail::check_sheep_index(w, i);
  detail::check_dog_index(w, k);
  if (other_dog_velocities.size() != w.dogs.size()) {
    throw std::invalid_argument("allocated_constraint needs a velocity slot for every dog");
  }
  const auto f = all_sheep_velocities(w, p);
  const Vec2 offset = w.sheep[i] - z.center;

  Vec2 others = Vec2::Zero();
  for (std::size_t l = 0; l < w.dogs.size(); ++l) {
    if (l != k) {
      others += jac_sheep_wrt_dog(w, p, i, l) * other_dog_velocities[l];
    }
  }

  LinearConstraint c;
  c.row = jac_sheep_wrt_dog(w, p, i, k).transpose() * (-offset);
  c.rhs = detail::drift_rhs(w, p, g, i, z, f) + offset.dot(others);
  c.sheep_index = i;
  c.zone_index = zone_index;
  return c;
}

/// Every centralized constraint, ordered sheep-major then zone.
inline std::vector<LinearConstraint> centralized_constraints(
  const WorldState & w, const SheepParams & p, const GainTable & gains, std::span<const Zone> zones)
{
  std::vector<LinearConstraint> rows;
  rows.reserve(w.sheep.size() * zones.size());
  for (std::size_t i = 0; i < w.sheep.size(); ++i) {
    for (std::size_t z = 0; z < zones.size(); ++z) {
      rows.push_back(centralized_constraint(w, p, gains(i, z), i, zones[z], z));
    }
  }
  return rows;
}

}  // namespace herding

#endif  // HERDING__CBF_HPP_
