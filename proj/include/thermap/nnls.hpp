#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/QR>

#include "thermap/error.hpp"
#include "thermap/maps.hpp"

namespace thermap {

struct InversionOptions {
  double kkt_tolerance = 1e-8;
  int max_iterations = 0;        ///< 0 selects 10 * n
  double tikhonov_lambda = 0.0;  ///< weight of the lambda * |p|^2 penalty; 0 disables

  void validate() const {
    if (!(kkt_tolerance > 0)) throw Error(ErrorKind::Input, "kkt_tolerance must be positive");
    if (!(tikhonov_lambda >= 0)) throw Error(ErrorKind::Input, "tikhonov_lambda must be non-negative");
    if (max_iterations < 0) throw Error(ErrorKind::Input, "max_iterations must be non-negative");
  }
};

template <typename Scalar>
struct NnlsSolution {
  Vector<Scalar> x;
  Scalar residual_norm = 0;              ///< |A x - b|_2 (data term only)
  std::vector<Eigen::Index> active_set;  ///< indices clamped at zero
  int iterations = 0;
  bool converged = false;
  /// Objective residual (ridge rows included) after each outer iteration.
  std::vector<Scalar> residual_history;
};

struct KktReport {
  bool ok = false;
  double max_violation = 0;  ///< worst violation divided by the tolerance scale
  double scale = 0;
};

namespace detail {

/// Gradient magnitude that makes the tolerance dimensionless: |A|_F |b|_2,
/// an upper bound on |A^T (A x - b)| at x = 0.
template <typename DA, typename DB>
double kkt_scale(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DB>& b) {
  return static_cast<double>(A.norm() * b.norm());
}

template <typename DA, typename DB>
void stack_tikhonov(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DB>& b, double lambda,
                    Eigen::Matrix<typename DA::Scalar, Eigen::Dynamic, Eigen::Dynamic>& As,
                    Vector<typename DA::Scalar>& bs) {
  using Scalar = typename DA::Scalar;
  const Eigen::Index m = A.rows(), n = A.cols();
  if (lambda > 0) {
    As.resize(m + n, n);
    As.topRows(m) = A;
    As.bottomRows(n).setIdentity();
    As.bottomRows(n) *= Scalar(std::sqrt(lambda));
    bs = Vector<Scalar>::Zero(m + n);
    bs.head(m) = b;
  } else {
    As = A;
    bs = b;
  }
}

}  // namespace detail

/// Checks the optimality conditions of min |A x - b| s.t. x >= 0 (with the
/// optional ridge term) directly from the gradient g = A^T (A x - b):
/// free coordinates need |g_i| <= tol * scale, clamped ones g_i >= -tol * scale.
template <typename DA, typename DB, typename DX>
KktReport verify_kkt(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DB>& b,
                     const Eigen::MatrixBase<DX>& x, double tol, double lambda = 0.0) {
  using Scalar = typename DA::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> As;
  Vector<Scalar> bs;
  detail::stack_tikhonov(A, b, lambda, As, bs);
  const Vector<Scalar> g = As.transpose() * (As * x - bs);

  KktReport rep;
  rep.scale = std::max(detail::kkt_scale(As, bs), std::numeric_limits<double>::min());
  double worst = 0;
  bool feasible = true;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double gi = static_cast<double>(g[i]);
    if (x[i] < Scalar(0)) feasible = false;
    const double v = x[i] > Scalar(0) ? std::abs(gi) : std::max(0.0, -gi);
    worst = std::max(worst, v / rep.scale);
  }
  rep.max_violation = worst / tol;
  rep.ok = feasible && worst <= tol;
  return rep;
}

/// Active-set non-negative least squares (Lawson-Hanson). Among equally
/// violating candidates the lowest index enters the free set first. When the
/// iteration budget runs out the current iterate is returned with
/// `converged == false`.
template <typename DA, typename DB>
NnlsSolution<typename DA::Scalar> nnls(const Eigen::MatrixBase<DA>& A, const Eigen::MatrixBase<DB>& b,
                                       const InversionOptions& opts = {}) {
  using Scalar = typename DA::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Vector<Scalar>;

  opts.validate();
  check_dimension(A.rows(), b.size(), "nnls");
  if (!A.allFinite() || !b.allFinite()) throw Error(ErrorKind::Input, "nnls: non-finite input");

  const Eigen::Index n = A.cols();
  Mat As;
  Vec bs;
  detail::stack_tikhonov(A, b, opts.tikhonov_lambda, As, bs);

  const int max_iter = opts.max_iterations > 0 ? opts.max_iterations : static_cast<int>(10 * std::max<Eigen::Index>(n, 1));
  const double threshold = opts.kkt_tolerance * detail::kkt_scale(As, bs);

  NnlsSolution<Scalar> out;
  Vec x = Vec::Zero(n);
  std::vector<bool> free(static_cast<std::size_t>(n), false);
  auto data_residual = [&](const Vec& v) { return static_cast<Scalar>((A * v - b).norm()); };
  // Candidates whose unconstrained step came back non-positive; cleared once x moves.
  std::vector<bool> rejected(static_cast<std::size_t>(n), false);

  // Least squares restricted to the free columns; clamped entries stay zero.
  auto solve_free = [&]() {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < n; ++j)
      if (free[static_cast<std::size_t>(j)]) cols.push_back(j);
    Mat sub(As.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = As.col(cols[k]);
    const Vec zs = sub.colPivHouseholderQr().solve(bs);
    Vec z = Vec::Zero(n);
    for (std::size_t k = 0; k < cols.size(); ++k) z[cols[k]] = zs[static_cast<Eigen::Index>(k)];
    return z;
  };

  while (true) {
    const Vec w = As.transpose() * (bs - As * x);  // negative gradient

    Eigen::Index enter = -1;
    Scalar best = Scalar(threshold);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!free[static_cast<std::size_t>(j)] && !rejected[static_cast<std::size_t>(j)] && w[j] > best) {
        best = w[j];
        enter = j;
      }
    }
    if (enter < 0) {
      out.converged = true;
      break;
    }
    if (out.iterations >= max_iter) break;
    ++out.iterations;
    free[static_cast<std::size_t>(enter)] = true;

    bool first = true;
    while (true) {
      Vec z = solve_free();
      if (first && z[enter] <= Scalar(0)) {
        // Rounding made the entering column useless; try the next candidate.
        free[static_cast<std::size_t>(enter)] = false;
        rejected[static_cast<std::size_t>(enter)] = true;
        break;
      }
      first = false;
      bool all_positive = true;
      for (Eigen::Index j = 0; j < n; ++j)
        if (free[static_cast<std::size_t>(j)] && z[j] <= Scalar(0)) all_positive = false;
      if (all_positive) {
        x = z;
        break;
      }
      // Step from x toward z until the first free coordinate hits zero.
      Scalar alpha = std::numeric_limits<Scalar>::infinity();
      for (Eigen::Index j = 0; j < n; ++j)
        if (free[static_cast<std::size_t>(j)] && z[j] <= Scalar(0)) {
          const Scalar gap = x[j] - z[j];
          alpha = std::min(alpha, gap > Scalar(0) ? x[j] / gap : Scalar(0));
        }
      x += alpha * (z - x);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (free[static_cast<std::size_t>(j)] && x[j] <= Scalar(0)) {
          free[static_cast<std::size_t>(j)] = false;
          x[j] = Scalar(0);
        }
      }
      if (std::none_of(free.begin(), free.end(), [](bool f) { return f; })) break;
    }
    if (!rejected[static_cast<std::size_t>(enter)]) {
      std::fill(rejected.begin(), rejected.end(), false);
      out.residual_history.push_back(static_cast<Scalar>((As * x - bs).norm()));
    }
  }

  out.x = x.cwiseMax(Scalar(0));
  out.residual_norm = data_residual(out.x);
  for (Eigen::Index j = 0; j < n; ++j)
    if (out.x[j] == Scalar(0)) out.active_set.push_back(j);
  return out;
}

}  // namespace thermap
