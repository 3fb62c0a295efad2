#ifndef HERDING__SUITE_HPP_
#define HERDING__SUITE_HPP_

/// \file
/// \brief The bundled scenario roster: equal-team allocated runs (including two zones and the
/// goal-at-center deadlock), under-actuated centralized runs and dual-subgradient runs.
///
/// Common setting: k_S = 0.5, k_G = 1, k_D = 0.1, zone radius 0.6 m centred at the origin
/// (second zone for the two-zone case), buffer 0.1 m.

#include <string>
#include <vector>

#include "herding/sim.hpp"

namespace herding::suite
{

inline Scenario base_scenario(std::string name, ControllerKind kind)
{
  Scenario sc;
  sc.name = std::move(name);
  sc.params = SheepParams{0.5, 1.0, 0.1, 0.4, Vec2(2.0, 0.0)};
  sc.zones = {Zone{Vec2(0.0, 0.0), 0.6, 0.1}};
  sc.controller.kind = kind;
  sc.controller.dual.k_max = 1000;
  sc.dt = 0.001;
  sc.t_end = 20.0;
  sc.bounds = DistanceBounds{0.05, 6.0, 0.02, 6.0, 6.0, 2.0};
  return sc;
}

inline Scenario two_vs_two()
{
  auto sc = base_scenario("2v2-allocated", ControllerKind::allocated);
  sc.params.goal = Vec2(0.0, 0.0);
  sc.initial.sheep = {Vec2(-1.82, -0.25), Vec2(-1.76, 0.23)};
  sc.initial.dogs = {Vec2(-0.74, 0.32), Vec2(-0.71, -0.34)};
  return sc;
}

inline Scenario three_vs_three()
{
  auto sc = base_scenario("3v3-allocated", ControllerKind::allocated);
  sc.params.goal = Vec2(-0.22, 0.29);
  sc.initial.sheep = {Vec2(-1.68, -0.41), Vec2(-1.69, 0.02), Vec2(-1.66, 0.40)};
  sc.initial.dogs = {Vec2(-0.49, 0.63), Vec2(-0.74, 0.09), Vec2(-0.48, -0.59)};
  return sc;
}

inline Scenario four_vs_four_two_zones()
{
  auto sc = base_scenario("4v4-two-zones-allocated", ControllerKind::allocated);
  sc.params.goal = Vec2(-0.12, -0.25);
  sc.zones = {Zone{Vec2(0.0, 0.9), 0.6, 0.1}, Zone{Vec2(0.0, -0.9), 0.6, 0.1}};
  sc.initial.sheep = {Vec2(-1.67, -0.48), Vec2(-1.67, -0.15), Vec2(-1.70, 0.16), Vec2(-1.61, 0.48)};
  sc.initial.dogs = {Vec2(-0.19, 0.84), Vec2(-0.72, 0.27), Vec2(-0.76, -0.17), Vec2(-0.30, -0.69)};
  return sc;
}

inline Scenario two_vs_four_centralized()
{
  auto sc = base_scenario("2v4-centralized", ControllerKind::centralized);
  sc.params.goal = Vec2(0.0, 0.0);
  sc.initial.sheep = {Vec2(-1.67, -0.63), Vec2(-1.66, -0.19), Vec2(-1.69, 0.22), Vec2(-1.69, 0.63)};
  sc.initial.dogs = {Vec2(-0.68, 0.37), Vec2(-0.65, -0.26)};
  return sc;
}

inline Scenario three_vs_five_centralized()
{
  auto sc = base_scenario("3v5-centralized", ControllerKind::centralized);
  sc.params.goal = Vec2(1.03, -0.13);
  sc.initial.sheep = {
    Vec2(-1.59, -0.95), Vec2(-1.52, -0.48), Vec2(-1.53, 0.00), Vec2(-1.51, 0.48), Vec2(-1.60, 0.94)};
  sc.initial.dogs = {Vec2(-0.51, 0.61), Vec2(-0.82, 0.07), Vec2(-0.56, -0.50)};
  return sc;
}

inline Scenario two_vs_three_dual()
{
  auto sc = base_scenario("2v3-dual", ControllerKind::dual);
  // Finite-K averaging leaves a small residual violation; over longer horizons it accumulates
  // once a sheep is pinned at the boundary.
  sc.t_end = 10.0;
  sc.params.goal = Vec2(0.0, 0.0);
  sc.initial.sheep = {Vec2(-1.68, -0.46), Vec2(-1.67, -0.02), Vec2(-1.65, 0.47)};
  sc.initial.dogs = {Vec2(-0.70, 0.31), Vec2(-0.67, -0.26)};
  return sc;
}

inline Scenario two_vs_four_dual()
{
  auto sc = two_vs_four_centralized();
  sc.name = "2v4-dual";
  sc.controller.kind = ControllerKind::dual;
  return sc;
}

inline Scenario five_vs_five_deadlock()
{
  auto sc = base_scenario("5v5-deadlock-allocated", ControllerKind::allocated);
  sc.params.goal = Vec2(0.0, 0.0);
  sc.t_end = 30.0;
  sc.initial.sheep = {
    Vec2(-1.25, -0.97), Vec2(-1.25, -0.46), Vec2(-1.31, 0.01), Vec2(-1.27, 0.50), Vec2(-1.30, 0.95)};
  sc.initial.dogs = {
    Vec2(-0.36, 0.77), Vec2(-0.70, 0.49), Vec2(-0.81, 0.08), Vec2(-0.63, -0.38), Vec2(-0.09, -0.76)};
  return sc;
}

/// The eight bundled scenarios in reporting order.
inline std::vector<Scenario> bundled()
{
  return {two_vs_two(),
          three_vs_three(),
          four_vs_four_two_zones(),
          two_vs_four_centralized(),
          three_vs_five_centralized(),
          two_vs_three_dual(),
          two_vs_four_dual(),
          five_vs_five_deadlock()};
}

/// Dogs made powerless (zero repulsion) with the goal at the zone center: nothing stops the flock.
inline Scenario negative_control()
{
  auto sc = base_scenario("negative-control", ControllerKind::centralized);
  sc.params.goal = Vec2(0.0, 0.0);
  sc.params.k_d = 0.0;
  sc.initial.sheep = {Vec2(-2.0, 0.25), Vec2(-2.0, -0.25)};
  sc.initial.dogs = {Vec2(-1.0, 0.9), Vec2(-1.0, -0.9)};
  return sc;
}

}  // namespace herding::suite

#endif  // HERDING__SUITE_HPP_
