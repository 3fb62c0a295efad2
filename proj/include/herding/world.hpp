#ifndef HERDING__WORLD_HPP_
#define HERDING__WORLD_HPP_

/// \file
/// \brief Agent state, the sheep flocking field and its analytic Jacobians.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace herding
{

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Distances below this are treated as coincident agents.
inline constexpr double kDegenerateDistance = 1e-9;

class DegenerateGeometry : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Positions of every sheep and every dog at one instant. Indices are agent identities.
struct WorldState
{
  std::vector<Vec2> sheep;
  std::vector<Vec2> dogs;
  double time = 0.0;

  std::size_t num_sheep() const { return sheep.size(); }
  std::size_t num_dogs() const { return dogs.size(); }
};

/// Gains of the flocking model.
struct SheepParams
{
  double k_s = 0.5;   ///< cohesion gain [1/s]
  double k_g = 1.0;   ///< goal attraction gain [1/s]
  double k_d = 0.1;   ///< dog repulsion gain [m^3/s]
  double r_s = 0.4;   ///< preferred inter-sheep spacing [m]
  Vec2 goal = Vec2::Zero();
};

/// Protected disc, inflated by `buffer` for the barrier.
struct Zone
{
  Vec2 center = Vec2::Zero();
  double radius = 0.6;
  double buffer = 0.1;
};

inline bool is_finite(const Vec2 & v) { return std::isfinite(v.x()) && std::isfinite(v.y()); }

inline void validate(const SheepParams & p)
{
  if (!(p.k_s >= 0.0 && p.k_g >= 0.0 && p.k_d >= 0.0)) {
    throw std::invalid_argument("sheep gains must be non-negative");
  }
  if (!(p.r_s > 0.0)) {
    throw std::invalid_argument("sheep spacing r_s must be positive");
  }
  if (!is_finite(p.goal)) {
    throw std::invalid_argument("sheep goal must be finite");
  }
}

inline void validate(const Zone & z)
{
  if (!(z.radius > 0.0) || !(z.buffer >= 0.0) || !is_finite(z.center)) {
    throw std::invalid_argument("zone needs finite center, radius > 0 and buffer >= 0");
  }
}

/// Checks the WorldState invariants: non-empty teams, finite positions, no coincident agents.
inline void validate(const WorldState & w)
{
  if (w.sheep.empty()) {
    throw std::invalid_argument("world has no sheep");
  }
  if (w.dogs.empty()) {
    throw std::invalid_argument("world has no dogs");
  }
  for (const auto & s : w.sheep) {
    if (!is_finite(s)) {
      throw std::invalid_argument("non-finite sheep position");
    }
  }
  for (const auto & d : w.dogs) {
    if (!is_finite(d)) {
      throw std::invalid_argument("non-finite dog position");
    }
  }
  for (std::size_t i = 0; i < w.sheep.size(); ++i) {
    for (std::size_t j = i + 1; j < w.sheep.size(); ++j) {
      if ((w.sheep[i] - w.sheep[j]).norm() < kDegenerateDistance) {
        throw DegenerateGeometry(
          "sheep " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
      }
    }
    for (std::size_t l = 0; l < w.dogs.size(); ++l) {
      if ((w.sheep[i] - w.dogs[l]).norm() < kDegenerateDistance) {
        throw DegenerateGeometry(
          "sheep " + std::to_string(i) + " and dog " + std::to_string(l) + " coincide");
      }
    }
  }
}

namespace detail
{

inline double checked_distance(const Vec2 & d, const char * what, std::size_t a, std::size_t b)
{
  const double r = d.norm();
  if (!(r >= kDegenerateDistance)) {
    throw DegenerateGeometry(
      std::string(what) + " " + std::to_string(a) + "/" + std::to_string(b) +
      " closer than the degeneracy threshold");
  }
  return r;
}

inline void check_sheep_index(const WorldState & w, std::size_t i)
{
  if (i >= w.sheep.size()) {
    throw std::out_of_range("sheep index " + std::to_string(i) + " out of range");
  }
}

inline void check_dog_index(const WorldState & w, std::size_t l)
{
  if (l >= w.dogs.size()) {
    throw std::out_of_range("dog index " + std::to_string(l) + " out of range");
  }
}

}  // namespace detail

/// Velocity of sheep `i`: cohesion/separation with the flock, attraction to the goal and
/// inverse-square repulsion from every dog.
inline Vec2 sheep_velocity(const WorldState & w, const SheepParams & p, std::size_t i)
{
  detail::check_sheep_index(w, i);
  const Vec2 & xi = w.sheep[i];
  const double r3 = p.r_s * p.r_s * p.r_s;

  Vec2 flock = Vec2::Zero();
  for (std::size_t j = 0; j < w.sheep.size(); ++j) {
    if (j == i) {
      continue;
    }
    const Vec2 d = w.sheep[j] - xi;
    const double r = detail::checked_distance(d, "sheep pair", i, j);
    flock += (1.0 - r3 / (r * r * r)) * d;
  }

  Vec2 repulsion = Vec2::Zero();
  for (std::size_t l = 0; l < w.dogs.size(); ++l) {
    const Vec2 e = xi - w.dogs[l];
    const double r = detail::checked_distance(e, "sheep/dog", i, l);
    repulsion += e / (r * r * r);
  }

  return p.k_s * flock + p.k_g * (p.goal - xi) + p.k_d * repulsion;
}

/// d f_i / d x_{S_j} for j != i.
inline Mat2 jac_sheep_wrt_sheep(
  const WorldState & w, const SheepParams & p, std::size_t i, std::size_t j)
{
  detail::check_sheep_index(w, i);
  detail::check_sheep_index(w, j);
  if (i == j) {
    throw std::invalid_argument("jac_sheep_wrt_sheep needs distinct sheep; use jac_sheep_self");
  }
  const Vec2 d = w.sheep[j] - w.sheep[i];
  const double r = detail::checked_distance(d, "sheep pair", i, j);
  const double r3 = p.r_s * p.r_s * p.r_s;
  const double r_cubed = r * r * r;
  return p.k_s *
         ((1.0 - r3 / r_cubed) * Mat2::Identity() + (3.0 * r3 / (r_cubed * r * r)) * d * d.transpose());
}

/// d f_i / d x_{D_l}. Its determinant is -2 k_D^2 / r^6, never zero for finite r and k_D > 0.
inline Mat2 jac_sheep_wrt_dog(
  const WorldState & w, const SheepParams & p, std::size_t i, std::size_t l)
{
  detail::check_sheep_index(w, i);
  detail::check_dog_index(w, l);
  const Vec2 e = w.sheep[i] - w.dogs[l];
  const double r = detail::checked_distance(e, "sheep/dog", i, l);
  const double r2 = r * r;
  const double r3 = r2 * r;
  return p.k_d * (-Mat2::Identity() / r3 + (3.0 / (r3 * r2)) * e * e.transpose());
}

/// d f_i / d x_{S_i}: the chain-rule term for the sheep's own motion.
inline Mat2 jac_sheep_self(const WorldState & w, const SheepParams & p, std::size_t i)
{
  detail::check_sheep_index(w, i);
  Mat2 jac = -p.k_g * Mat2::Identity();
  for (std::size_t j = 0; j < w.sheep.size(); ++j) {
    if (j != i) {
      jac -= jac_sheep_wrt_sheep(w, p, i, j);
    }
  }
  for (std::size_t l = 0; l < w.dogs.size(); ++l) {
    jac -= jac_sheep_wrt_dog(w, p, i, l);
  }
  return jac;
}

/// Jacobian of f_i with respect to sheep j, dispatching to the self term when j == i.
inline Mat2 jac_sheep(const WorldState & w, const SheepParams & p, std::size_t i, std::size_t j)
{
  return i == j ? jac_sheep_self(w, p, i) : jac_sheep_wrt_sheep(w, p, i, j);
}

inline std::vector<Vec2> all_sheep_velocities(const WorldState & w, const SheepParams & p)
{
  std::vector<Vec2> f;
  f.reserve(w.sheep.size());
  for (std::size_t i = 0; i < w.sheep.size(); ++i) {
    f.push_back(sheep_velocity(w, p, i));
  }
  return f;
}

}  // namespace herding

#endif  // HERDING__WORLD_HPP_
