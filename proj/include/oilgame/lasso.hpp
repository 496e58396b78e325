#pragma once

// Least Angle Regression with the Lasso modification.
//
// Solves, for every lambda >= 0 along a piecewise-linear path,
//
//   minimize  0.5 * ||y - X b||^2 + lambda * ||b||_1
//
// Note lambda is not divided by the sample count.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <string>
#include <vector>

namespace oilgame {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
struct LassoKnot {
  Scalar lambda;
  VectorX<Scalar> coefficients;
  std::vector<int> active;  // in order of entry
};

template <typename Scalar>
struct LassoPath {
  std::vector<LassoKnot<Scalar>> knots;
  int jitter_events = 0;
  int drop_events = 0;
  std::vector<std::string> diagnostics;

  Eigen::Index feature_count() const { return knots.empty() ? 0 : knots.front().coefficients.size(); }

  /// Solution at an arbitrary lambda by linear interpolation between knots.
  VectorX<Scalar> coefficients_at(Scalar lambda) const {
    const auto& first = knots.front();
    if (lambda >= first.lambda) return VectorX<Scalar>::Zero(first.coefficients.size());
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
      const auto& hi = knots[k];
      const auto& lo = knots[k + 1];
      if (lambda <= hi.lambda && lambda >= lo.lambda) {
        const Scalar span = hi.lambda - lo.lambda;
        const Scalar t = span > Scalar(0) ? (hi.lambda - lambda) / span : Scalar(1);
        return hi.coefficients + t * (lo.coefficients - hi.coefficients);
      }
    }
    return knots.back().coefficients;
  }
};

struct LarsOptions {
  double jitter = 1e-10;
  int max_steps = 0;  // 0: 8 * p + 16
};

template <typename DerivedX, typename DerivedY, typename DerivedB>
typename DerivedX::Scalar lasso_objective(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y,
                                          const Eigen::MatrixBase<DerivedB>& b, typename DerivedX::Scalar lambda) {
  return typename DerivedX::Scalar(0.5) * (y - x * b).squaredNorm() + lambda * b.template lpNorm<1>();
}

/// Largest violation of the Lasso optimality conditions at (b, lambda):
/// |x_j'r| <= lambda for zero coefficients, x_j'r = sign(b_j) lambda otherwise.
template <typename DerivedX, typename DerivedY, typename DerivedB>
typename DerivedX::Scalar lasso_kkt_violation(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y,
                                              const Eigen::MatrixBase<DerivedB>& b, typename DerivedX::Scalar lambda) {
  using Scalar = typename DerivedX::Scalar;
  const VectorX<Scalar> corr = x.transpose() * (y - x * b);
  Scalar worst(0);
  for (Eigen::Index j = 0; j < corr.size(); ++j) {
    const Scalar v = b(j) != Scalar(0) ? std::abs(corr(j) - (b(j) > 0 ? lambda : -lambda))
                                       : std::max(Scalar(0), std::abs(corr(j)) - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

/// Full LARS-Lasso path from the all-zero solution down to lambda = 0.
///
/// Columns of x are expected to be standardized and y centred, although
/// neither is required for correctness. Each step moves along the
/// equicorrelation direction until a feature joins the active set, an
/// active coefficient crosses zero (and is dropped), or lambda reaches 0.
template <typename DerivedX, typename DerivedY>
LassoPath<typename DerivedX::Scalar> lars_lasso_path(const Eigen::MatrixBase<DerivedX>& x,
                                                    const Eigen::MatrixBase<DerivedY>& y, const LarsOptions& options = {}) {
  using Scalar = typename DerivedX::Scalar;
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  if (n < 1 || p < 1 || y.size() != n) throw std::invalid_argument("lars_lasso_path: bad problem dimensions");

  const MatrixX<Scalar> gram = x.transpose() * x;
  const VectorX<Scalar> xty = x.transpose() * y;

  LassoPath<Scalar> path;
  VectorX<Scalar> beta = VectorX<Scalar>::Zero(p);
  VectorX<Scalar> corr = xty;

  Eigen::Index first = 0;
  Scalar lambda = corr.cwiseAbs().maxCoeff(&first);
  const Scalar scale = std::max<Scalar>(Scalar(1), xty.cwiseAbs().maxCoeff());
  const Scalar tiny = Scalar(64) * std::numeric_limits<Scalar>::epsilon() * scale;

  if (lambda <= tiny) {
    path.knots.push_back({Scalar(0), beta, {}});
    return path;
  }
  path.knots.push_back({lambda, beta, {}});

  const Eigen::Index rank = Eigen::ColPivHouseholderQR<MatrixX<Scalar>>(x).rank();

  std::vector<int> active{static_cast<int>(first)};
  std::vector<char> is_active(static_cast<std::size_t>(p), 0);
  is_active[static_cast<std::size_t>(first)] = 1;
  path.knots.back().active = active;

  int just_dropped = -1;
  const int max_steps = options.max_steps > 0 ? options.max_steps : static_cast<int>(8 * p + 16);

  for (int step = 0; step < max_steps; ++step) {
    const auto m = static_cast<Eigen::Index>(active.size());
    MatrixX<Scalar> g(m, m);
    VectorX<Scalar> signs(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      signs(a) = corr(active[a]) >= Scalar(0) ? Scalar(1) : Scalar(-1);
      for (Eigen::Index b = 0; b < m; ++b) g(a, b) = gram(active[a], active[b]);
    }

    Eigen::LDLT<MatrixX<Scalar>> ldlt(g);
    const auto diag = ldlt.vectorD();
    const Scalar dmax = diag.cwiseAbs().maxCoeff();
    if (ldlt.info() != Eigen::Success || diag.minCoeff() <= Scalar(1e3) * std::numeric_limits<Scalar>::epsilon() * dmax) {
      g.diagonal().array() += Scalar(options.jitter);
      ldlt.compute(g);
      ++path.jitter_events;
      path.diagnostics.push_back("rank-degenerate active set at step " + std::to_string(step) + "; jittered");
    }
    const VectorX<Scalar> direction = ldlt.solve(signs);

    // Rate at which every correlation moves as lambda decreases.
    VectorX<Scalar> rate = VectorX<Scalar>::Zero(p);
    for (Eigen::Index a = 0; a < m; ++a) rate += gram.col(active[a]) * direction(a);

    Scalar step_add = std::numeric_limits<Scalar>::infinity();
    int add_index = -1;
    if (m < rank) {
      for (Eigen::Index j = 0; j < p; ++j) {
        if (is_active[j]) continue;
        const Scalar c = corr(j);
        const Scalar r = rate(j);
        // A just-dropped feature sits on the boundary it left; only the opposite one can be hit.
        const int skip_side = j == just_dropped ? (c >= Scalar(0) ? 0 : 1) : -1;
        int side = 0;
        for (const auto& [num, den] : {std::pair{lambda - c, Scalar(1) - r}, std::pair{lambda + c, Scalar(1) + r}}) {
          if (side++ == skip_side || den <= Scalar(1e-12)) continue;
          const Scalar t = std::max(Scalar(0), num) / den;
          if (t < step_add) {
            step_add = t;
            add_index = static_cast<int>(j);
          }
        }
      }
    }

    Scalar step_drop = std::numeric_limits<Scalar>::infinity();
    int drop_slot = -1;
    for (Eigen::Index a = 0; a < m; ++a) {
      const Scalar b = beta(active[a]);
      if (b == Scalar(0) || direction(a) == Scalar(0)) continue;
      const Scalar t = -b / direction(a);
      if (t > Scalar(0) && t < step_drop) {
        step_drop = t;
        drop_slot = static_cast<int>(a);
      }
    }

    Scalar delta = lambda;
    enum class Event { end, add, drop } event = Event::end;
    if (step_drop < delta && step_drop <= step_add) {
      delta = step_drop;
      event = Event::drop;
    } else if (step_add < delta) {
      delta = step_add;
      event = Event::add;
    }

    for (Eigen::Index a = 0; a < m; ++a) beta(active[a]) += delta * direction(a);
    lambda = event == Event::end ? Scalar(0) : lambda - delta;
    just_dropped = -1;

    if (event == Event::drop) {
      const int j = active[static_cast<std::size_t>(drop_slot)];
      beta(j) = Scalar(0);
      active.erase(active.begin() + drop_slot);
      is_active[static_cast<std::size_t>(j)] = 0;
      just_dropped = j;
      ++path.drop_events;
    } else if (event == Event::add) {
      active.push_back(add_index);
      is_active[static_cast<std::size_t>(add_index)] = 1;
    }

    corr = xty - gram * beta;

    if (delta <= tiny && event != Event::end) {
      // Simultaneous event: fold into the previous knot so lambda stays strictly decreasing.
      path.knots.back().coefficients = beta;
      path.knots.back().active = active;
    } else {
      path.knots.push_back({lambda, beta, active});
    }

    if (event == Event::end || active.empty()) break;
  }

  if (path.knots.back().lambda > Scalar(0))
    path.diagnostics.push_back("step limit reached before lambda = 0");
  return path;
}

}  // namespace oilgame
