#ifndef HERDING_TESTS__ORACLES_HPP_
#define HERDING_TESTS__ORACLES_HPP_

// Independent reference computations shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "herding/cbf.hpp"
#include "herding/qp.hpp"
#include "herding/world.hpp"

namespace herding::oracle
{

/// Brute-force KKT enumeration for argmin ||u||^2 s.t. A u <= b: every subset of rows is tried
/// as the active set; the equality-constrained least-norm point is kept when it is feasible with
/// non-negative multipliers. nullopt means no subset qualifies, i.e. the problem is infeasible.
inline std::optional<Eigen::VectorXd> brute_force_qp(const Eigen::MatrixXd & a, const Eigen::VectorXd & b)
{
  const auto m = static_cast<std::size_t>(a.rows());
  const auto n = a.cols();
  std::optional<Eigen::VectorXd> best;
  for (std::size_t mask = 0; mask < (std::size_t{1} << m); ++mask) {
    std::vector<Eigen::Index> rows;
    for (std::size_t r = 0; r < m; ++r) {
      if (mask & (std::size_t{1} << r)) {
        rows.push_back(static_cast<Eigen::Index>(r));
      }
    }
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    if (!rows.empty()) {
      Eigen::MatrixXd as(static_cast<Eigen::Index>(rows.size()), n);
      Eigen::VectorXd bs(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        as.row(static_cast<Eigen::Index>(r)) = a.row(rows[r]);
        bs(static_cast<Eigen::Index>(r)) = b(rows[r]);
      }
      // Orthogonal factorisations rather than the Gram matrix, which would square the
      // conditioning of nearly parallel rows.
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(as);
      cod.setThreshold(1e-10);
      if (cod.rank() < as.rows()) {
        continue;  // dependent rows: some smaller subset covers this case
      }
      u = cod.solve(bs);
      // u = A_S^T w, multipliers of ||u||^2 are -2 w.
      const Eigen::VectorXd w = as.transpose().colPivHouseholderQr().solve(u);
      if ((w.array() > 1e-12 * std::max(1.0, w.norm())).any()) {
        continue;
      }
    }
    bool feasible = true;
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      if (a.row(r).dot(u) > b(r) + 1e-9 * std::max(1.0, std::abs(b(r)))) {
        feasible = false;
        break;
      }
    }
    if (feasible && (!best || u.squaredNorm() < best->squaredNorm())) {
      best = u;
    }
  }
  return best;
}

/// Central-difference Jacobian of f_i with respect to the position of sheep `j`
/// (or dog `j` when `dog` is true).
inline Mat2 fd_jacobian(const WorldState & w, const SheepParams & p, std::size_t i, std::size_t j, bool dog, double step = 1e-6)
{
  Mat2 jac;
  for (int c = 0; c < 2; ++c) {
    WorldState plus = w;
    WorldState minus = w;
    auto & xp = dog ? plus.dogs[j] : plus.sheep[j];
    auto & xm = dog ? minus.dogs[j] : minus.sheep[j];
    xp(c) += step;
    xm(c) -= step;
    jac.col(c) = (sheep_velocity(plus, p, i) - sheep_velocity(minus, p, i)) / (2.0 * step);
  }
  return jac;
}

/// Random world in a box with every pairwise agent distance at least `min_sep`.
template <typename Rng>
WorldState random_world(Rng & rng, std::size_t ns, std::size_t nd, double half_width = 2.0, double min_sep = 0.2)
{
  std::uniform_real_distribution<double> u(-half_width, half_width);
  for (;;) {
    WorldState w;
    std::vector<Vec2> all;
    bool ok = true;
    for (std::size_t k = 0; k < ns + nd && ok; ++k) {
      const Vec2 x(u(rng), u(rng));
      for (const auto & y : all) {
        ok = ok && (x - y).norm() >= min_sep;
      }
      all.push_back(x);
      (k < ns ? w.sheep : w.dogs).push_back(x);
    }
    if (ok) {
      return w;
    }
  }
}

/// Sheep-sheep, sheep-dog and self Jacobian finite-difference check; returns the largest
/// absolute entry error.
inline double max_jacobian_error(const WorldState & w, const SheepParams & p)
{
  double worst = 0.0;
  for (std::size_t i = 0; i < w.sheep.size(); ++i) {
    for (std::size_t j = 0; j < w.sheep.size(); ++j) {
      const Mat2 analytic = j == i ? jac_sheep_self(w, p, i) : jac_sheep_wrt_sheep(w, p, i, j);
      worst = std::max(worst, (analytic - fd_jacobian(w, p, i, j, false)).cwiseAbs().maxCoeff());
    }
    for (std::size_t l = 0; l < w.dogs.size(); ++l) {
      worst = std::max(
        worst, (jac_sheep_wrt_dog(w, p, i, l) - fd_jacobian(w, p, i, l, true)).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}


/// Random problem with 1-3 rows and 1-6 variables, mixing generic rows with the awkward cases:
/// anti-parallel and parallel copies of the previous row, and zero rows.
template <typename Rng>
QpProblem random_qp(Rng & rng)
{
  std::uniform_int_distribution<int> rows_d(1, 3);
  std::uniform_int_distribution<int> dim_d(1, 6);
  std::uniform_int_distribution<int> kind(0, 9);
  std::normal_distribution<double> g(0.0, 1.0);
  const int m = rows_d(rng);
  const int n = dim_d(rng);
  QpProblem qp{Eigen::MatrixXd(m, n), Eigen::VectorXd(m)};
  for (int r = 0; r < m; ++r) {
    const int k = kind(rng);
    for (int c = 0; c < n; ++c) {
      qp.a(r, c) = g(rng);
    }
    if (k == 0 && r > 0) {
      qp.a.row(r) = -2.0 * qp.a.row(r - 1);
    } else if (k == 1 && r > 0) {
      qp.a.row(r) = 0.5 * qp.a.row(r - 1);
    } else if (k == 2) {
      qp.a.row(r).setZero();
    }
    qp.b(r) = g(rng);
  }
  return qp;
}

/// One min-norm problem for the dual-subgradient convergence checks.
struct DualInstance
{
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd u_star;
};

/// Gaussian instances (entries N(0, 1.5^2), rhs N(0, 1)) with n_S rows and 2 n_D columns,
/// kept when the optimum has a non-empty active set whose Gram matrix has every eigenvalue in
/// [0.8 n_D, 3 n_D]. With uniform averaging the dual step on the full gradient is gamma_t / n_D,
/// so gamma_t = 1/t converges like K^(-lambda_min / (2 n_D)); the band keeps that rate fast
/// enough for 1e4 rounds and keeps early steps from overshooting. Inactive rows must also clear
/// u* by `min_slack` (distance to the hyperplane): a row violated early picks up a multiplier
/// that harmonic steps drain only like slack * log(t), which dominates the error when slack is small.
template <typename Rng>
DualInstance random_dual_instance(
  Rng & rng, std::size_t num_dogs, std::size_t num_sheep, double floor = 0.8, double ceiling = 3.0,
  double min_slack = 0.5)
{
  std::normal_distribution<double> entry(0.0, 1.5);
  std::normal_distribution<double> rhs(0.0, 1.0);
  const double n = static_cast<double>(num_dogs);
  const auto rows = static_cast<Eigen::Index>(num_sheep);
  const auto cols = static_cast<Eigen::Index>(2 * num_dogs);
  for (;;) {
    DualInstance inst{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows), Eigen::VectorXd()};
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) {
        inst.a(r, c) = entry(rng);
      }
      inst.b(r) = rhs(rng);
    }
    const auto sol = solve_min_norm(QpProblem{inst.a, inst.b});
    if (!sol.optimal() || sol.active_set.empty()) {
      continue;
    }
    Eigen::MatrixXd act(static_cast<Eigen::Index>(sol.active_set.size()), cols);
    for (std::size_t r = 0; r < sol.active_set.size(); ++r) {
      act.row(static_cast<Eigen::Index>(r)) = inst.a.row(static_cast<Eigen::Index>(sol.active_set[r]));
    }
    const Eigen::VectorXd eig =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(act * act.transpose()).eigenvalues();
    if (eig.minCoeff() < floor * n || eig.maxCoeff() > ceiling * n) {
      continue;
    }
    bool slack_ok = true;
    for (Eigen::Index r = 0; r < rows; ++r) {
      if (std::find(sol.active_set.begin(), sol.active_set.end(), static_cast<std::size_t>(r)) == sol.active_set.end()) {
        slack_ok = slack_ok && inst.b(r) - inst.a.row(r).dot(sol.u) >= min_slack * inst.a.row(r).norm();
      }
    }
    if (!slack_ok) {
      continue;
    }
    inst.u_star = sol.u;
    return inst;
  }
}

/// Relative distance of the stacked dog velocities from `u_star`.
inline double relative_error(std::span<const Vec2> u, const Eigen::VectorXd & u_star)
{
  Eigen::VectorXd s(static_cast<Eigen::Index>(2 * u.size()));
  for (std::size_t k = 0; k < u.size(); ++k) {
    s.segment<2>(static_cast<Eigen::Index>(2 * k)) = u[k];
  }
  return (s - u_star).norm() / u_star.norm();
}

}  // namespace herding::oracle

#endif  // HERDING_TESTS__ORACLES_HPP_
