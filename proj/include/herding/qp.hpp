#ifndef HERDING__QP_HPP_
#define HERDING__QP_HPP_

/// \file
/// \brief Exact solver for small dense minimum-norm problems
///   argmin ||u||^2  subject to  A u <= b.
///
/// Uses the Goldfarb-Idnani dual active-set method specialised to an identity Hessian: start
/// at the unconstrained minimiser u = 0, repeatedly add the most violated constraint and drop
/// constraints whose multipliers would turn negative. Infeasibility shows up as a violated
/// constraint that no combination of primal and dual steps can reach.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>

#include "herding/cbf.hpp"

namespace herding
{

struct QpProblem
{
  Eigen::MatrixXd a;  ///< one constraint per row
  Eigen::VectorXd b;

  Eigen::Index dim() const { return a.cols(); }
  Eigen::Index rows() const { return a.rows(); }

  static QpProblem from_constraints(std::span<const LinearConstraint> cs, Eigen::Index dim)
  {
    QpProblem qp{Eigen::MatrixXd(static_cast<Eigen::Index>(cs.size()), dim),
                 Eigen::VectorXd(static_cast<Eigen::Index>(cs.size()))};
    for (std::size_t r = 0; r < cs.size(); ++r) {
      if (cs[r].row.size() != dim) {
        throw std::invalid_argument("constraint width does not match problem dimension");
      }
      qp.a.row(static_cast<Eigen::Index>(r)) = cs[r].row.transpose();
      qp.b(static_cast<Eigen::Index>(r)) = cs[r].rhs;
    }
    return qp;
  }
};

enum class QpStatus { optimal, infeasible };

struct QpSolution
{
  Eigen::VectorXd u;
  std::vector<std::size_t> active_set;  ///< ascending row indices
  Eigen::VectorXd multipliers;          ///< lambda >= 0 per row, u = -A^T lambda / 2
  QpStatus status = QpStatus::infeasible;

  bool optimal() const { return status == QpStatus::optimal; }
};

namespace detail
{

inline double row_violation_tolerance(const Eigen::VectorXd & a, double b)
{
  return 1e-12 * std::max({1.0, std::abs(b), a.norm()});
}

/// The updates above work on Gram matrices, which square the conditioning of nearly parallel
/// rows. Once the active set is known the optimum is the least-norm solution of A_S u = b_S;
/// recomputing it with an orthogonal factorisation recovers the lost digits. The polished point
/// is kept only if it stays feasible and close to the original.
inline void polish(const QpProblem & qp, QpSolution & sol)
{
  if (sol.active_set.empty()) {
    return;
  }
  const auto k = static_cast<Eigen::Index>(sol.active_set.size());
  Eigen::MatrixXd as(k, qp.dim());
  Eigen::VectorXd bs(k);
  for (Eigen::Index r = 0; r < k; ++r) {
    as.row(r) = qp.a.row(static_cast<Eigen::Index>(sol.active_set[static_cast<std::size_t>(r)]));
    bs(r) = qp.b(static_cast<Eigen::Index>(sol.active_set[static_cast<std::size_t>(r)]));
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(as);
  if (cod.rank() < k) {
    return;
  }
  const Eigen::VectorXd u = cod.solve(bs);
  if (!u.allFinite() || (u - sol.u).norm() > 1e-6 * std::max(1.0, sol.u.norm())) {
    return;
  }
  for (Eigen::Index j = 0; j < qp.rows(); ++j) {
    const Eigen::VectorXd aj = qp.a.row(j).transpose();
    if (aj.dot(u) - qp.b(j) > row_violation_tolerance(aj, qp.b(j))) {
      return;
    }
  }
  // u = -A_S^T lambda / 2.
  const Eigen::VectorXd lam = as.transpose().colPivHouseholderQr().solve(-2.0 * u);
  sol.u = u;
  for (Eigen::Index r = 0; r < k; ++r) {
    sol.multipliers(static_cast<Eigen::Index>(sol.active_set[static_cast<std::size_t>(r)])) =
      std::max(lam(r), 0.0);
  }
}

}  // namespace detail

inline QpSolution solve_min_norm(const QpProblem & qp)
{
  const Eigen::Index dim = qp.dim();
  const Eigen::Index m = qp.rows();
  if (dim < 1) {
    throw std::invalid_argument("QP needs at least one variable");
  }
  if (qp.b.size() != m) {
    throw std::invalid_argument("QP rhs length does not match row count");
  }
  if (!qp.a.allFinite() || !qp.b.allFinite()) {
    throw std::invalid_argument("QP data must be finite");
  }

  QpSolution sol;
  sol.u = Eigen::VectorXd::Zero(dim);
  sol.multipliers = Eigen::VectorXd::Zero(m);

  // Closed form for one row.
  if (m == 1) {
    const Eigen::VectorXd a = qp.a.row(0).transpose();
    const double an2 = a.squaredNorm();
    const double b = qp.b(0);
    if (b >= 0.0) {
      sol.status = QpStatus::optimal;
      if (an2 > 0.0 && b == 0.0) {
        sol.active_set = {0};
      }
      return sol;
    }
    if (an2 == 0.0) {
      return sol;  // 0 . u <= b < 0
    }
    sol.u = a * (b / an2);
    sol.multipliers(0) = -2.0 * b / an2;
    sol.active_set = {0};
    sol.status = QpStatus::optimal;
    return sol;
  }

  // Working set in the >= convention: n_j . u >= c_j with n_j = -a_j, c_j = -b_j.
  std::vector<Eigen::Index> active;
  std::vector<double> lambda;  // multipliers of 1/2 ||u||^2, i.e. half of ||u||^2's
  Eigen::VectorXd u = Eigen::VectorXd::Zero(dim);

  const auto normals_of = [&](const std::vector<Eigen::Index> & set) {
    Eigen::MatrixXd n(dim, static_cast<Eigen::Index>(set.size()));
    for (std::size_t c = 0; c < set.size(); ++c) {
      n.col(static_cast<Eigen::Index>(c)) = -qp.a.row(set[c]).transpose();
    }
    return n;
  };

  const std::size_t max_iterations = 50 * static_cast<std::size_t>(m + dim) + 100;
  std::size_t iterations = 0;
  for (;;) {
    // Most violated constraint, scaled by row norm.
    Eigen::Index p = -1;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < m; ++j) {
      if (std::find(active.begin(), active.end(), j) != active.end()) {
        continue;
      }
      const Eigen::VectorXd aj = qp.a.row(j).transpose();
      const double excess = aj.dot(u) - qp.b(j);
      if (excess <= detail::row_violation_tolerance(aj, qp.b(j))) {
        continue;
      }
      const double scaled = excess / std::max(aj.norm(), 1e-300);
      if (p < 0 || scaled > worst) {
        p = j;
        worst = scaled;
      }
    }
    if (p < 0) {
      break;
    }

    const Eigen::VectorXd np = -qp.a.row(p).transpose();
    const double cp = -qp.b(p);
    double lambda_p = 0.0;

    for (;;) {
      if (++iterations > max_iterations) {
        throw std::runtime_error("min-norm QP failed to terminate (cycling)");
      }
      // Split n_p into its part in the span of the active normals (coefficients r) and the
      // orthogonal remainder z, via QR so nearly parallel normals keep their digits.
      const auto na = static_cast<Eigen::Index>(active.size());
      Eigen::VectorXd r = Eigen::VectorXd::Zero(na);
      Eigen::VectorXd z = np;
      if (na > 0) {
        const Eigen::HouseholderQR<Eigen::MatrixXd> qr(normals_of(active));
        const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, na);
        const Eigen::VectorXd coeff = q.transpose() * np;
        r = qr.matrixQR().topLeftCorner(na, na).triangularView<Eigen::Upper>().solve(coeff);
        z = np - q * coeff;
      }
      const double zn = z.dot(np);
      // A working set that already spans the space leaves no primal direction.
      const bool primal_step =
        na < dim && z.norm() > 1e-10 * std::max(1.0, np.norm()) && zn > 0.0;

      // Largest dual step that keeps active multipliers non-negative.
      double t_dual = std::numeric_limits<double>::infinity();
      std::size_t drop = 0;
      for (std::size_t c = 0; c < active.size(); ++c) {
        const auto ci = static_cast<Eigen::Index>(c);
        if (r(ci) > 1e-14) {
          const double t = lambda[c] / r(ci);
          if (t < t_dual) {
            t_dual = t;
            drop = c;
          }
        }
      }
      const double slack = np.dot(u) - cp;  // negative while violated
      const double t_full = primal_step ? -slack / zn : std::numeric_limits<double>::infinity();

      if (!std::isfinite(t_dual) && !std::isfinite(t_full)) {
        sol.status = QpStatus::infeasible;
        sol.u = u;
        return sol;
      }
      const double t = std::min(t_dual, t_full);
      if (primal_step) {
        u += t * z;
      }
      for (std::size_t c = 0; c < active.size(); ++c) {
        lambda[c] -= t * r(static_cast<Eigen::Index>(c));
      }
      lambda_p += t;

      if (primal_step && t_full <= t_dual) {
        active.push_back(p);
        lambda.push_back(lambda_p);
        break;
      }
      active.erase(active.begin() + static_cast<std::ptrdiff_t>(drop));
      lambda.erase(lambda.begin() + static_cast<std::ptrdiff_t>(drop));
    }
  }

  sol.u = u;
  sol.status = QpStatus::optimal;
  for (std::size_t c = 0; c < active.size(); ++c) {
    sol.multipliers(active[c]) = 2.0 * std::max(lambda[c], 0.0);
    sol.active_set.push_back(static_cast<std::size_t>(active[c]));
  }
  std::sort(sol.active_set.begin(), sol.active_set.end());
  detail::polish(qp, sol);
  return sol;
}

/// Minimiser of the squared constraint violation sum_i max(0, a_i u - b_i)^2 plus a small
/// `regularization` ||u||^2 that makes it unique. Used when the exact problem is infeasible.
inline Eigen::VectorXd solve_least_violation(const QpProblem & qp, double regularization = 1e-6)
{
  const Eigen::Index dim = qp.dim();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(dim);
  std::vector<bool> violated(static_cast<std::size_t>(qp.rows()), false);

  const auto objective = [&](const Eigen::VectorXd & x) {
    const Eigen::VectorXd excess = (qp.a * x - qp.b).cwiseMax(0.0);
    return excess.squaredNorm() + regularization * x.squaredNorm();
  };

  Eigen::VectorXd best = u;
  double best_value = objective(u);
  // Semismooth Newton on the piecewise quadratic: guess the violated set, solve, repeat.
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (Eigen::Index j = 0; j < qp.rows(); ++j) {
      const bool v = qp.a.row(j).dot(u) - qp.b(j) > 0.0;
      if (v != violated[static_cast<std::size_t>(j)]) {
        violated[static_cast<std::size_t>(j)] = v;
        changed = true;
      }
    }
    if (!changed && iter > 0) {
      break;
    }
    Eigen::MatrixXd h = regularization * Eigen::MatrixXd::Identity(dim, dim);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim);
    for (Eigen::Index j = 0; j < qp.rows(); ++j) {
      if (violated[static_cast<std::size_t>(j)]) {
        h += qp.a.row(j).transpose() * qp.a.row(j);
        g += qp.a.row(j).transpose() * qp.b(j);
      }
    }
    u = h.ldlt().solve(g);
    const double value = objective(u);
    if (value < best_value) {
      best_value = value;
      best = u;
    }
  }
  return best;
}

}  // namespace herding

#endif  // HERDING__QP_HPP_
