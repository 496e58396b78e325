#pragma once

// Independent reference implementations used only by tests. None of these
// share code paths with the library routines they check.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

/// Cyclic coordinate descent for 0.5||y - Xb||^2 + lambda ||b||_1, run until
/// the duality gap falls below `gap_tol`.
inline Eigen::VectorXd cd_lasso(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, double lambda,
                                double gap_tol = 1e-11, int max_sweeps = 2000000) {
  const Eigen::Index p = x.cols();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd r = y;
  const Eigen::VectorXd sq = x.colwise().squaredNorm().transpose();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (Eigen::Index j = 0; j < p; ++j) {
      if (sq(j) == 0.0) continue;
      const double rho = x.col(j).dot(r) + sq(j) * b(j);
      const double nb = std::copysign(std::max(std::abs(rho) - lambda, 0.0), rho) / sq(j);
      if (nb != b(j)) {
        r -= x.col(j) * (nb - b(j));
        b(j) = nb;
      }
    }
    if (sweep % 10 == 0) {
      r = y - x * b;
      const double cmax = (x.transpose() * r).cwiseAbs().maxCoeff();
      const double s = cmax > lambda ? lambda / cmax : 1.0;
      const double primal = 0.5 * r.squaredNorm() + lambda * b.lpNorm<1>();
      const double dual = 0.5 * y.squaredNorm() - 0.5 * (y - s * r).squaredNorm();
      if (primal - dual < gap_tol) break;
    }
  }
  return b;
}

/// DTW by enumerating every monotone warping path (tiny inputs only).
inline double dtw_enumerate(const std::vector<double>& a, const std::vector<double>& b) {
  double best = std::numeric_limits<double>::infinity();
  std::function<void(std::size_t, std::size_t, double)> walk = [&](std::size_t i, std::size_t j, double acc) {
    acc += std::abs(a[i] - b[j]);
    if (i + 1 == a.size() && j + 1 == b.size()) {
      best = std::min(best, acc);
      return;
    }
    if (i + 1 < a.size()) walk(i + 1, j, acc);
    if (j + 1 < b.size()) walk(i, j + 1, acc);
    if (i + 1 < a.size() && j + 1 < b.size()) walk(i + 1, j + 1, acc);
  };
  walk(0, 0, 0.0);
  return best;
}

/// Minimax path weights: for each pair, the smallest achievable maximum edge
/// over all paths in the complete graph. Floyd-Warshall on (min, max).
inline Eigen::MatrixXd minimax_paths(const Eigen::MatrixXd& d) {
  Eigen::MatrixXd m = d;
  const Eigen::Index n = d.rows();
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) = 0.0;
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) m(i, j) = std::min(m(i, j), std::max(m(i, k), m(k, j)));
  return m;
}

/// Type-7 (linear interpolation) quantile by full sort.
inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace oracle
