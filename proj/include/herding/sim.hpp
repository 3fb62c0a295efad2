#ifndef HERDING__SIM_HPP_
#define HERDING__SIM_HPP_

/// \file
/// \brief Closed-loop episodes: controller evaluation, simultaneous explicit Euler update of both
/// teams, and per-tick logging with breach and deadlock detection.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "herding/bounds.hpp"
#include "herding/cbf.hpp"
#include "herding/controllers.hpp"
#include "herding/world.hpp"

namespace herding
{

enum class ControllerKind { centralized, allocated, dual };

struct ControllerSpec
{
  ControllerKind kind = ControllerKind::allocated;
  DualConfig dual;  ///< used only by ControllerKind::dual
};

struct GainPolicy
{
  double base = 1.0;
  double margin = 0.5;
};

struct Scenario
{
  std::string name = "scenario";
  WorldState initial;
  SheepParams params;
  std::vector<Zone> zones;
  ControllerSpec controller;
  GainPolicy gains;
  double dt = 0.01;
  double t_end = 30.0;
  DistanceBounds bounds;
  std::uint64_t seed = 0;

  /// Number of integration steps; the log holds one more row than this.
  std::size_t num_steps() const
  {
    return static_cast<std::size_t>(std::floor(t_end / dt + 1e-9));
  }

  void validate() const
  {
    if (!(dt > 0.0)) {
      throw std::invalid_argument("dt must be positive");
    }
    if (!(t_end >= dt)) {
      throw std::invalid_argument("t_end must be at least dt");
    }
    herding::validate(initial);
    herding::validate(params);
    for (const auto & z : zones) {
      herding::validate(z);
    }
    bounds.validate();
    if (controller.kind == ControllerKind::dual) {
      controller.dual.validate();
    }
    for (std::size_t i = 0; i < initial.sheep.size(); ++i) {
      for (std::size_t z = 0; z < zones.size(); ++z) {
        if (!(barrier_h(initial.sheep[i], zones[z]) > 0.0)) {
          throw SheepInsideZone(
            "sheep " + std::to_string(i) + " starts inside zone " + std::to_string(z));
        }
      }
    }
  }
};

/// Places dogs uniformly on an annulus [r_min, r_max] around `center`.
inline std::vector<Vec2> ring_sample_dogs(
  const Vec2 & center, std::size_t count, double r_min, double r_max, std::uint64_t seed)
{
  if (!(r_min >= 0.0 && r_max >= r_min)) {
    throw std::invalid_argument("ring sampler needs 0 <= r_min <= r_max");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vec2> dogs;
  for (std::size_t k = 0; k < count; ++k) {
    // Area-uniform radius.
    const double r = std::sqrt(r_min * r_min + unit(rng) * (r_max * r_max - r_min * r_min));
    const double theta = 2.0 * std::numbers::pi * unit(rng);
    dogs.push_back(center + r * Vec2(std::cos(theta), std::sin(theta)));
  }
  return dogs;
}

/// Everything recorded at one tick. Velocities are the commands issued at this state (after
/// the speed clamp); the final row's command is computed but never integrated.
struct TickRecord
{
  double time = 0.0;
  std::vector<Vec2> sheep;
  std::vector<Vec2> dogs;
  std::vector<Vec2> dog_velocities;
  std::vector<double> h;               ///< sheep-major, zone-minor
  std::vector<double> barrier_signal;  ///< h'' + alpha h' + beta h under the issued command
  std::vector<LinearConstraint> constraints;
  std::vector<std::size_t> constraint_owner;  ///< allocated controller only
  std::vector<double> slacks;                 ///< rhs - row . u per constraint
  std::vector<AssumptionViolation> violations;
  bool infeasible_fallback = false;
};

struct EpisodeLog
{
  std::string scenario_name;
  std::vector<TickRecord> ticks;
  GainTable gains;
  std::optional<Allocation> allocation;
  FeasibilityReport feasibility;

  bool breach = false;
  bool deadlock = false;
  double budget = 0.0;
  double min_h = 0.0;
  std::size_t fallback_ticks = 0;
  std::size_t violation_ticks = 0;
  std::optional<std::string> abort_reason;
};

/// Mutable per-episode controller context: frozen gains, the allocation and the last observed
/// dog positions.
struct ControllerState
{
  GainTable gains;
  std::optional<Allocation> allocation;
  std::optional<std::vector<Vec2>> previous_dogs;
};

inline ControllerState init_controller(const Scenario & sc)
{
  ControllerState cs;
  cs.gains = select_all_gains(sc.initial, sc.params, sc.zones, sc.gains.base, sc.gains.margin);
  if (sc.controller.kind == ControllerKind::allocated) {
    cs.allocation = allocate(sc.initial);
  }
  return cs;
}

inline Vec2 clamp_speed(const Vec2 & u, double u_max)
{
  const double n = u.norm();
  return n > u_max ? Vec2(u * (u_max / n)) : u;
}

/// Evaluates the controller at `state` and returns the clamped commands (one per dog).
inline ControlOutput evaluate_controller(
  const WorldState & state, const Scenario & sc, ControllerState & cs)
{
  ControlOutput out;
  switch (sc.controller.kind) {
    case ControllerKind::centralized:
      out = centralized_step(state, sc.params, cs.gains, sc.zones);
      break;
    case ControllerKind::allocated: {
      const std::vector<Vec2> * prev = cs.previous_dogs ? &*cs.previous_dogs : nullptr;
      out = allocated_step(state, sc.params, cs.gains, sc.zones, *cs.allocation, prev, sc.dt);
      break;
    }
    case ControllerKind::dual:
      out = dual_subgradient_step(state, sc.params, cs.gains, sc.zones, sc.controller.dual);
      break;
  }
  for (auto & u : out.velocities) {
    u = clamp_speed(u, sc.bounds.u_d_max);
  }
  return out;
}

/// Explicit Euler from the pre-step state: sheep by dt f_i (current dogs), dogs by dt u.
inline WorldState integrate(
  const WorldState & state, const SheepParams & p, std::span<const Vec2> dog_velocities, double dt)
{
  if (dog_velocities.size() != state.dogs.size()) {
    throw std::invalid_argument("integrate needs one velocity per dog");
  }
  WorldState next = state;
  const auto f = all_sheep_velocities(state, p);
  for (std::size_t i = 0; i < next.sheep.size(); ++i) {
    next.sheep[i] += dt * f[i];
  }
  for (std::size_t k = 0; k < next.dogs.size(); ++k) {
    next.dogs[k] += dt * dog_velocities[k];
  }
  next.time = state.time + dt;
  return next;
}

/// One closed-loop step: controller, then simultaneous integration. Updates the controller's
/// previous-position memory.
inline WorldState step(const WorldState & state, const Scenario & sc, ControllerState & cs)
{
  const auto out = evaluate_controller(state, sc, cs);
  cs.previous_dogs = state.dogs;
  return integrate(state, sc.params, out.velocities, sc.dt);
}

inline constexpr double kDeadlockSpeed = 1e-3;
/// Barrier values above -kBreachTolerance count as safe: a sheep pinned on the buffered
/// boundary sits at h = 0 up to a few ulps of rounding.
inline constexpr double kBreachTolerance = 1e-12;
inline constexpr double kDeadlockDuration = 2.0;

inline EpisodeLog run(const Scenario & sc)
{
  sc.validate();
  EpisodeLog log;
  log.scenario_name = sc.name;
  ControllerState cs = init_controller(sc);
  log.gains = cs.gains;
  log.allocation = cs.allocation;
  log.feasibility = feasibility_report(
    sc.initial.sheep.size(), sc.initial.dogs.size(), sc.params, cs.gains, sc.bounds);
  log.min_h = std::numeric_limits<double>::infinity();

  const std::size_t steps = sc.num_steps();
  log.ticks.reserve(steps + 1);
  WorldState state = sc.initial;
  // Start of the current all-still stretch; negative when the flock is moving.
  double still_since = -1.0;

  for (std::size_t tick = 0; tick <= steps; ++tick) {
    state.time = static_cast<double>(tick) * sc.dt;
    TickRecord rec;
    rec.time = state.time;
    rec.sheep = state.sheep;
    rec.dogs = state.dogs;
    try {
      const auto out = evaluate_controller(state, sc, cs);
      rec.dog_velocities = out.velocities;
      rec.infeasible_fallback = out.infeasible_fallback;
      rec.constraint_owner = out.owner;
      Eigen::VectorXd stacked(static_cast<Eigen::Index>(2 * state.dogs.size()));
      for (std::size_t k = 0; k < state.dogs.size(); ++k) {
        stacked.segment<2>(static_cast<Eigen::Index>(2 * k)) = out.velocities[k];
      }
      for (std::size_t c = 0; c < out.constraints.size(); ++c) {
        const auto & con = out.constraints[c];
        rec.slacks.push_back(
          out.owner.empty() ? con.slack(stacked) : con.slack(out.velocities[out.owner[c]]));
      }
      rec.constraints = out.constraints;

      for (std::size_t i = 0; i < state.sheep.size(); ++i) {
        for (std::size_t z = 0; z < sc.zones.size(); ++z) {
          const double h = barrier_h(state.sheep[i], sc.zones[z]);
          rec.h.push_back(h);
          log.min_h = std::min(log.min_h, h);
          if (h < -kBreachTolerance) {
            log.breach = true;
          }
          rec.barrier_signal.push_back(
            barrier_signal(state, sc.params, cs.gains(i, z), i, sc.zones[z], out.velocities));
        }
      }
      rec.violations = monitor_assumptions(state, sc.params, sc.zones, sc.bounds);
      if (!rec.violations.empty()) {
        ++log.violation_ticks;
      }
      if (rec.infeasible_fallback) {
        ++log.fallback_ticks;
      }

      bool all_still = true;
      Vec2 centroid = Vec2::Zero();
      for (std::size_t i = 0; i < state.sheep.size(); ++i) {
        all_still = all_still && sheep_velocity(state, sc.params, i).norm() < kDeadlockSpeed;
        centroid += state.sheep[i];
      }
      centroid /= static_cast<double>(state.sheep.size());
      // A flock resting at its own goal is not a deadlock.
      const bool held_off = (centroid - sc.params.goal).norm() > sc.params.r_s;
      if (all_still && held_off) {
        if (still_since < 0.0) {
          still_since = state.time;
        }
        if (state.time - still_since >= kDeadlockDuration - 1e-9) {
          log.deadlock = true;
        }
      } else {
        still_since = -1.0;
      }

      const bool last = tick == steps || log.breach;
      if (!last) {
        for (const auto & u : out.velocities) {
          log.budget += u.norm() * sc.dt;
        }
        cs.previous_dogs = state.dogs;
        state = integrate(state, sc.params, out.velocities, sc.dt);
      }
      log.ticks.push_back(std::move(rec));
      if (last) {
        break;
      }
    } catch (const std::exception & e) {
      log.ticks.push_back(std::move(rec));
      log.abort_reason = e.what();
      break;
    }
  }
  return log;
}

}  // namespace herding

#endif  // HERDING__SIM_HPP_
