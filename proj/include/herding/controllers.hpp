#ifndef HERDING__CONTROLLERS_HPP_
#define HERDING__CONTROLLERS_HPP_

/// \file
/// \brief Dog-velocity strategies: one centralized QP, per-dog QPs under a sheep-to-dog
/// allocation, and a dual-subgradient distribution of the centralized QP.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "herding/cbf.hpp"
#include "herding/qp.hpp"
#include "herding/world.hpp"

namespace herding
{

/// sheep index -> dog index.
struct Allocation
{
  std::vector<std::size_t> dog_of_sheep;

  /// Inverse map; only meaningful for a bijection.
  std::vector<std::size_t> sheep_of_dog() const
  {
    std::vector<std::size_t> inv(dog_of_sheep.size(), 0);
    for (std::size_t i = 0; i < dog_of_sheep.size(); ++i) {
      inv.at(dog_of_sheep[i]) = i;
    }
    return inv;
  }
};

class AllocationError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// Greedy assignment: sheep in index order each take the nearest dog not yet taken,
/// ties going to the lower dog index.
inline Allocation allocate(const WorldState & w)
{
  if (w.sheep.size() != w.dogs.size()) {
    throw AllocationError(
      "allocation needs equal numbers of sheep and dogs (got " + std::to_string(w.sheep.size()) +
      " sheep, " + std::to_string(w.dogs.size()) +
      " dogs); use the centralized or dual controller instead");
  }
  Allocation alloc;
  std::vector<bool> taken(w.dogs.size(), false);
  for (const auto & s : w.sheep) {
    std::size_t best = w.dogs.size();
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < w.dogs.size(); ++k) {
      if (taken[k]) {
        continue;
      }
      const double d = (w.dogs[k] - s).squaredNorm();
      if (d < best_dist) {
        best_dist = d;
        best = k;
      }
    }
    taken[best] = true;
    alloc.dog_of_sheep.push_back(best);
  }
  return alloc;
}

/// Velocities produced by one controller evaluation plus what it was built from.
struct ControlOutput
{
  std::vector<Vec2> velocities;
  /// Constraints as each controller saw them: stacked rows for centralized/dual, per-dog rows
  /// (width 2) for the allocated controller, with `owner` naming the dog.
  std::vector<LinearConstraint> constraints;
  std::vector<std::size_t> owner;
  bool infeasible_fallback = false;
};

namespace detail
{

inline std::vector<Vec2> unstack(const Eigen::VectorXd & u)
{
  std::vector<Vec2> out(static_cast<std::size_t>(u.size() / 2));
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = u.segment<2>(static_cast<Eigen::Index>(2 * k));
  }
  return out;
}

}  // namespace detail

/// Solves the joint min-norm QP over all dog velocities. When infeasible, returns the
/// least-squares violation minimiser and sets `infeasible_fallback`.
inline ControlOutput centralized_step(
  const WorldState & w, const SheepParams & p, const GainTable & gains, std::span<const Zone> zones)
{
  ControlOutput out;
  out.constraints = centralized_constraints(w, p, gains, zones);
  const auto dim = static_cast<Eigen::Index>(2 * w.dogs.size());
  const auto qp = QpProblem::from_constraints(out.constraints, dim);
  const auto sol = solve_min_norm(qp);
  if (sol.optimal()) {
    out.velocities = detail::unstack(sol.u);
  } else {
    out.velocities = detail::unstack(solve_least_violation(qp));
    out.infeasible_fallback = true;
  }
  return out;
}

class InfeasibleAllocation : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Each dog solves its own two-variable QP for its allocated sheep (one row per zone), treating
/// the other dogs' velocities as known. `other_dog_velocities` is typically the backward
/// difference of observed positions.
inline ControlOutput allocated_step(
  const WorldState & w, const SheepParams & p, const GainTable & gains, std::span<const Zone> zones,
  const Allocation & alloc, std::span<const Vec2> other_dog_velocities,
  bool fallback_on_infeasible = false)
{
  if (alloc.dog_of_sheep.size() != w.sheep.size() || w.sheep.size() != w.dogs.size()) {
    throw AllocationError("allocation does not match world");
  }
  ControlOutput out;
  out.velocities.assign(w.dogs.size(), Vec2::Zero());
  for (std::size_t i = 0; i < w.sheep.size(); ++i) {
    const std::size_t k = alloc.dog_of_sheep[i];
    std::vector<LinearConstraint> rows;
    for (std::size_t z = 0; z < zones.size(); ++z) {
      rows.push_back(allocated_constraint(w, p, gains(i, z), i, k, other_dog_velocities, zones[z], z));
    }
    const auto qp = QpProblem::from_constraints(rows, 2);
    const auto sol = solve_min_norm(qp);
    if (!sol.optimal() && fallback_on_infeasible) {
      out.velocities[k] = solve_least_violation(qp);
      out.infeasible_fallback = true;
    } else if (!sol.optimal()) {
      std::string detail;
      for (const auto & r : rows) {
        detail += " [zone " + std::to_string(r.zone_index) + ": |A|=" + std::to_string(r.row.norm()) +
                  " b=" + std::to_string(r.rhs) + "]";
      }
      throw InfeasibleAllocation(
        "dog " + std::to_string(k) + " cannot satisfy its constraints for sheep " +
        std::to_string(i) + ":" + detail);
    } else {
      out.velocities[k] = sol.u;
    }
    for (auto & r : rows) {
      out.constraints.push_back(std::move(r));
      out.owner.push_back(k);
    }
  }
  return out;
}

/// Backward-difference dog velocities; zeros when there is no previous sample.
inline std::vector<Vec2> estimate_dog_velocities(
  std::span<const Vec2> current, const std::vector<Vec2> * previous, double dt)
{
  if (!(dt > 0.0)) {
    throw std::invalid_argument("velocity estimate needs dt > 0");
  }
  std::vector<Vec2> out(current.size(), Vec2::Zero());
  if (previous == nullptr) {
    return out;
  }
  if (previous->size() != current.size()) {
    throw std::invalid_argument("previous dog sample has a different dog count");
  }
  for (std::size_t k = 0; k < current.size(); ++k) {
    out[k] = (current[k] - (*previous)[k]) / dt;
  }
  return out;
}

/// Allocated step with other-dog velocities estimated from the previous dog positions.
inline ControlOutput allocated_step(
  const WorldState & w, const SheepParams & p, const GainTable & gains, std::span<const Zone> zones,
  const Allocation & alloc, const std::vector<Vec2> * prev_dog_positions, double dt,
  bool fallback_on_infeasible = false)
{
  const auto estimate = estimate_dog_velocities(w.dogs, prev_dog_positions, dt);
  return allocated_step(w, p, gains, zones, alloc, estimate, fallback_on_infeasible);
}

enum class StepRule { constant, diminishing };
enum class Averaging { paper_literal, uniform_with_self };

struct DualConfig
{
  std::size_t k_max = 1000;
  double gamma0 = 1.0;
  StepRule step_rule = StepRule::diminishing;
  Averaging averaging = Averaging::uniform_with_self;

  void validate() const
  {
    if (k_max < 1) {
      throw std::invalid_argument("dual k_max must be at least 1");
    }
    if (!(gamma0 > 0.0)) {
      throw std::invalid_argument("dual gamma0 must be positive");
    }
  }

  double step(std::size_t t) const
  {
    return step_rule == StepRule::constant ? gamma0 : gamma0 / static_cast<double>(t);
  }
};

/// Per-dog state of the multiplier exchange.
struct DualState
{
  Eigen::VectorXd mu;           ///< one multiplier per stacked constraint, >= 0
  Eigen::Vector2d primal_sum = Eigen::Vector2d::Zero();
  std::size_t iteration = 0;
};

struct DualResult
{
  std::vector<Vec2> velocities;  ///< running primal averages
  std::vector<DualState> states;
};

/// Runs `cfg.k_max` synchronous rounds of the distributed dual subgradient method on
///   min sum_k ||u_k||^2  s.t.  sum_k A_k u_k <= b,
/// where A_k is dog k's 2-column block. Every round reads all multipliers from the previous
/// round before any dog writes new ones. `observer`, if given, sees the states after each round.
template <typename Observer>
DualResult dual_subgradient_solve(
  const Eigen::MatrixXd & a, const Eigen::VectorXd & b, std::size_t num_dogs, const DualConfig & cfg,
  Observer && observer)
{
  cfg.validate();
  if (a.cols() != static_cast<Eigen::Index>(2 * num_dogs) || a.rows() != b.size()) {
    throw std::invalid_argument("dual subgradient: inconsistent problem shape");
  }
  const Eigen::Index m = a.rows();
  const double n = static_cast<double>(num_dogs);
  const Eigen::VectorXd b_share = b / n;

  std::vector<DualState> states(num_dogs);
  for (auto & s : states) {
    s.mu = Eigen::VectorXd::Zero(m);
  }
  std::vector<Eigen::VectorXd> next(num_dogs);

  for (std::size_t t = 1; t <= cfg.k_max; ++t) {
    Eigen::VectorXd total = Eigen::VectorXd::Zero(m);
    for (const auto & s : states) {
      total += s.mu;
    }
    const double gamma = cfg.step(t);
    for (std::size_t k = 0; k < num_dogs; ++k) {
      const Eigen::VectorXd v = cfg.averaging == Averaging::uniform_with_self
                                  ? Eigen::VectorXd(total / n)
                                  : Eigen::VectorXd((total - states[k].mu) / n);
      const auto a_k = a.middleCols<2>(static_cast<Eigen::Index>(2 * k));
      const Eigen::Vector2d u = -0.5 * a_k.transpose() * v;
      next[k] = (v + gamma * (a_k * u - b_share)).cwiseMax(0.0);
      states[k].primal_sum += u;
      states[k].iteration = t;
    }
    for (std::size_t k = 0; k < num_dogs; ++k) {
      states[k].mu.swap(next[k]);
    }
    observer(static_cast<const std::vector<DualState> &>(states));
  }

  DualResult result;
  for (const auto & s : states) {
    result.velocities.push_back(s.primal_sum / static_cast<double>(s.iteration));
  }
  result.states = std::move(states);
  return result;
}

inline DualResult dual_subgradient_solve(
  const Eigen::MatrixXd & a, const Eigen::VectorXd & b, std::size_t num_dogs, const DualConfig & cfg)
{
  return dual_subgradient_solve(a, b, num_dogs, cfg, [](const std::vector<DualState> &) {});
}

/// Distributed counterpart of centralized_step built on the same stacked constraints.
inline ControlOutput dual_subgradient_step(
  const WorldState & w, const SheepParams & p, const GainTable & gains, std::span<const Zone> zones,
  const DualConfig & cfg)
{
  ControlOutput out;
  out.constraints = centralized_constraints(w, p, gains, zones);
  const auto qp =
    QpProblem::from_constraints(out.constraints, static_cast<Eigen::Index>(2 * w.dogs.size()));
  out.velocities = dual_subgradient_solve(qp.a, qp.b, w.dogs.size(), cfg).velocities;
  return out;
}

}  // namespace herding

#endif  // HERDING__CONTROLLERS_HPP_
