#include "oilgame/analysis.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace oilgame {

std::string_view to_string(StatTest t) {
  switch (t) {
    case StatTest::welch_t: return "welch_t";
    case StatTest::ks_2sample: return "ks_2sample";
    case StatTest::binomial: return "binomial";
  }
  return "welch_t";
}

double mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean of an empty sample");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(h);
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

StatResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("t-test needs non-empty samples");
  StatResult r{StatTest::welch_t, 0.0, 1.0, a.size(), b.size()};
  const double ma = mean(a), mb = mean(b);
  const double va = std::pow(stddev(a), 2) / static_cast<double>(a.size());
  const double vb = std::pow(stddev(b), 2) / static_cast<double>(b.size());
  const double se = std::sqrt(va + vb);
  if (se == 0.0) {
    if (ma == mb) return r;
    r.statistic = ma > mb ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
    return r;
  }
  r.statistic = (ma - mb) / se;
  double df = (va + vb) * (va + vb);
  double denom = 0.0;
  if (a.size() > 1) denom += va * va / static_cast<double>(a.size() - 1);
  if (b.size() > 1) denom += vb * vb / static_cast<double>(b.size() - 1);
  df /= denom;
  const boost::math::students_t dist(df);
  r.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.statistic))));
  return r;
}

double kolmogorov_q(double z) {
  if (z < 0.0) throw std::invalid_argument("kolmogorov_q needs z >= 0");
  if (z == 0.0) return 1.0;
  if (z < 1.18) {
    const double y = std::exp(-1.23370055013616983 / (z * z));
    return 1.0 - 2.25675833419102515 * std::sqrt(-std::log(y)) * (y + std::pow(y, 9) + std::pow(y, 25) + std::pow(y, 49));
  }
  const double x = std::exp(-2.0 * z * z);
  return 2.0 * (x - std::pow(x, 4) + std::pow(x, 9));
}

StatResult ks_2sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("KS test needs non-empty samples");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n1 = static_cast<double>(x.size()), n2 = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
  }
  const double en = std::sqrt(n1 * n2 / (n1 + n2));
  return {StatTest::ks_2sample, d, std::clamp(kolmogorov_q((en + 0.12 + 0.11 / en) * d), 0.0, 1.0), x.size(),
          y.size()};
}

StatResult binomial_test(std::size_t k, std::size_t n, double p0) {
  if (n == 0 || k > n) throw std::invalid_argument("binomial test needs 0 <= k <= n, n > 0");
  if (!(p0 >= 0.0 && p0 <= 1.0)) throw std::invalid_argument("base rate must lie in [0, 1]");
  StatResult r{StatTest::binomial, static_cast<double>(k) / static_cast<double>(n), 1.0, k, n};
  if (p0 == 0.0 || p0 == 1.0) {
    const bool expected = (p0 == 0.0 && k == 0) || (p0 == 1.0 && k == n);
    r.p_value = expected ? 1.0 : 0.0;
    return r;
  }
  const boost::math::binomial dist(static_cast<double>(n), p0);
  const double dk = boost::math::pdf(dist, static_cast<double>(k)) * (1.0 + 1e-7);
  double p = 0.0;
  for (std::size_t i = 0; i <= n; ++i) {
    const double pi = boost::math::pdf(dist, static_cast<double>(i));
    if (pi <= dk) p += pi;
  }
  r.p_value = std::min(1.0, p);
  return r;
}

// ---------------------------------------------------------------------------

double reliance_distance(const CellCoord& recommended, const CellCoord& clicked) {
  return euclidean(recommended, clicked);
}

double random_pair_distance_constant() {
  const double r2 = std::sqrt(2.0);
  return (2.0 + r2 + 5.0 * std::log(r2 + 1.0)) / 15.0;
}

std::vector<double> cell_scores(const GameMap& map, const CostSchedule& cost) {
  std::vector<double> out;
  out.reserve(kCellCount);
  for (int i = 0; i < kCellCount; ++i) {
    const auto c = CellCoord::from_index(i);
    out.push_back(map.yield(c) - cost.cost_of(map, c));
  }
  return out;
}

double bad_play_rate(std::span<const double> play_scores, const GameMap& map, const CostSchedule& cost) {
  if (play_scores.empty()) throw std::invalid_argument("no plays");
  const double m = median(cell_scores(map, cost));
  const auto bad = std::count_if(play_scores.begin(), play_scores.end(), [&](double s) { return s < m; });
  return static_cast<double>(bad) / static_cast<double>(play_scores.size());
}

// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd dtw_table(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("DTW needs non-empty series");
  const auto n = static_cast<Eigen::Index>(a.size()), m = static_cast<Eigen::Index>(b.size());
  Eigen::MatrixXd d(n, m);
  constexpr double inf = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double cost = std::abs(a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(j)]);
      double prev = 0.0;
      if (i > 0 || j > 0) {
        prev = inf;
        if (i > 0) prev = std::min(prev, d(i - 1, j));
        if (j > 0) prev = std::min(prev, d(i, j - 1));
        if (i > 0 && j > 0) prev = std::min(prev, d(i - 1, j - 1));
      }
      d(i, j) = cost + prev;
    }
  }
  return d;
}

}  // namespace

double dtw_distance(std::span<const double> a, std::span<const double> b) {
  const auto d = dtw_table(a, b);
  return d(d.rows() - 1, d.cols() - 1);
}

std::vector<std::pair<int, int>> dtw_path(std::span<const double> a, std::span<const double> b) {
  const auto d = dtw_table(a, b);
  int i = static_cast<int>(d.rows()) - 1, j = static_cast<int>(d.cols()) - 1;
  std::vector<std::pair<int, int>> path{{i, j}};
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      const double diag = d(i - 1, j - 1), up = d(i - 1, j), left = d(i, j - 1);
      if (diag <= up && diag <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    }
    path.emplace_back(i, j);
  }
  std::reverse(path.begin(), path.end());
  return path;
}

Eigen::MatrixXd dtw_matrix(const std::vector<std::vector<double>>& series) {
  const auto n = static_cast<Eigen::Index>(series.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      d(i, j) = d(j, i) = dtw_distance(series[static_cast<std::size_t>(i)], series[static_cast<std::size_t>(j)]);
  return d;
}

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

BoolMatrix minimum_spanning_tree(const Eigen::MatrixXd& dist) {
  const auto n = dist.rows();
  if (dist.cols() != n) throw std::invalid_argument("distance matrix must be square");
  BoolMatrix tree = BoolMatrix::Constant(n, n, false);
  if (n == 0) return tree;
  std::vector<bool> in(static_cast<std::size_t>(n), false);
  std::vector<double> best(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<Eigen::Index> parent(static_cast<std::size_t>(n), -1);
  best[0] = 0.0;
  for (Eigen::Index step = 0; step < n; ++step) {
    Eigen::Index u = -1;
    for (Eigen::Index v = 0; v < n; ++v)
      if (!in[static_cast<std::size_t>(v)] && (u < 0 || best[static_cast<std::size_t>(v)] < best[static_cast<std::size_t>(u)]))
        u = v;
    in[static_cast<std::size_t>(u)] = true;
    if (const auto p = parent[static_cast<std::size_t>(u)]; p >= 0) tree(u, p) = tree(p, u) = true;
    for (Eigen::Index v = 0; v < n; ++v) {
      if (!in[static_cast<std::size_t>(v)] && dist(u, v) < best[static_cast<std::size_t>(v)]) {
        best[static_cast<std::size_t>(v)] = dist(u, v);
        parent[static_cast<std::size_t>(v)] = u;
      }
    }
  }
  return tree;
}

BoolMatrix rmst_prune(const Eigen::MatrixXd& dist, double gamma) {
  const auto n = dist.rows();
  const BoolMatrix tree = minimum_spanning_tree(dist);
  // Largest edge on the tree path between every pair: one traversal per root.
  Eigen::MatrixXd mlink = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index root = 0; root < n; ++root) {
    std::vector<Eigen::Index> stack{root};
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    seen[static_cast<std::size_t>(root)] = true;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (Eigen::Index v = 0; v < n; ++v) {
        if (!tree(u, v) || seen[static_cast<std::size_t>(v)]) continue;
        seen[static_cast<std::size_t>(v)] = true;
        mlink(root, v) = std::max(mlink(root, u), dist(u, v));
        stack.push_back(v);
      }
    }
  }
  BoolMatrix keep = tree;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && dist(i, j) <= (1.0 + gamma) * mlink(i, j)) keep(i, j) = true;
  return keep;
}

double modularity(const Eigen::MatrixXd& w, std::span<const int> labels) {
  const double total = w.sum();
  if (total <= 0.0) return 0.0;
  const Eigen::VectorXd k = w.rowwise().sum();
  double q = 0.0;
  for (Eigen::Index i = 0; i < w.rows(); ++i)
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) q += w(i, j) - k(i) * k(j) / total;
  return q / total;
}

std::vector<int> greedy_modularity(const Eigen::MatrixXd& w) {
  const auto n = w.rows();
  std::vector<int> community(static_cast<std::size_t>(n));
  std::iota(community.begin(), community.end(), 0);
  const double total = w.sum();
  if (total > 0.0) {
    Eigen::MatrixXd e = w / total;
    Eigen::VectorXd a = e.rowwise().sum();
    std::vector<bool> alive(static_cast<std::size_t>(n), true);
    while (true) {
      double best = 1e-12;
      Eigen::Index bi = -1, bj = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!alive[static_cast<std::size_t>(i)]) continue;
        for (Eigen::Index j = i + 1; j < n; ++j) {
          if (!alive[static_cast<std::size_t>(j)] || e(i, j) <= 0.0) continue;
          const double dq = 2.0 * (e(i, j) - a(i) * a(j));
          if (dq > best) {
            best = dq;
            bi = i;
            bj = j;
          }
        }
      }
      if (bi < 0) break;
      e.row(bi) += e.row(bj);
      e.col(bi) += e.col(bj);
      e.row(bj).setZero();
      e.col(bj).setZero();
      a(bi) += a(bj);
      a(bj) = 0.0;
      alive[static_cast<std::size_t>(bj)] = false;
      for (auto& c : community)
        if (c == bj) c = static_cast<int>(bi);
    }
  }
  std::vector<int> labels(community.size());
  std::vector<int> renumber(community.size(), -1);
  int next = 0;
  for (std::size_t i = 0; i < community.size(); ++i) {
    auto& r = renumber[static_cast<std::size_t>(community[i])];
    if (r < 0) r = next++;
    labels[i] = r;
  }
  return labels;
}

std::vector<double> dba(const std::vector<std::vector<double>>& members, std::vector<double> centroid, int iterations) {
  if (members.empty()) throw std::invalid_argument("DBA needs members");
  for (int it = 0; it < iterations; ++it) {
    std::vector<double> sum(centroid.size(), 0.0);
    std::vector<int> count(centroid.size(), 0);
    for (const auto& s : members) {
      for (const auto& [i, j] : dtw_path(centroid, s)) {
        sum[static_cast<std::size_t>(i)] += s[static_cast<std::size_t>(j)];
        ++count[static_cast<std::size_t>(i)];
      }
    }
    std::vector<double> next(centroid.size());
    for (std::size_t t = 0; t < next.size(); ++t) next[t] = sum[t] / count[t];
    if (next == centroid) break;
    centroid = std::move(next);
  }
  return centroid;
}

Clustering cluster_curves(const std::vector<std::vector<double>>& curves, const ClusterOptions& options) {
  if (curves.size() < 2) throw std::invalid_argument("clustering needs at least two curves");
  const auto dist = dtw_matrix(curves);
  const auto n = dist.rows();
  Clustering out;

  std::vector<double> off;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) off.push_back(dist(i, j));
  if (*std::max_element(off.begin(), off.end()) == 0.0) {
    out.labels.assign(curves.size(), 0);
  } else {
    out.bandwidth = median(off);
    if (out.bandwidth == 0.0) {
      std::vector<double> positive;
      for (double d : off)
        if (d > 0.0) positive.push_back(d);
      out.bandwidth = mean(positive);
    }
    const auto keep = rmst_prune(dist, options.gamma);
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        if (i != j && keep(i, j))
          w(i, j) = std::exp(-dist(i, j) * dist(i, j) / (2.0 * out.bandwidth * out.bandwidth));
    out.labels = greedy_modularity(w);
    out.modularity = modularity(w, out.labels);
  }

  const int k = *std::max_element(out.labels.begin(), out.labels.end()) + 1;
  out.sizes.assign(static_cast<std::size_t>(k), 0);
  for (int l : out.labels) ++out.sizes[static_cast<std::size_t>(l)];
  for (int c = 0; c < k; ++c) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < curves.size(); ++i)
      if (out.labels[i] == c) idx.push_back(i);
    std::size_t medoid = idx[0];
    double best = std::numeric_limits<double>::infinity();
    for (auto i : idx) {
      double s = 0.0;
      for (auto j : idx) s += dist(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (s < best) {
        best = s;
        medoid = i;
      }
    }
    std::vector<std::vector<double>> members;
    for (auto i : idx) members.push_back(curves[i]);
    out.centroids.push_back(dba(members, curves[medoid], options.barycenter_iterations));
  }
  return out;
}

// ---------------------------------------------------------------------------

ExploreMatrix explore_matrix(std::span<const ExploreInput> games, const ExploreBins& bins) {
  ExploreMatrix counts = ExploreMatrix::Zero();
  for (const auto& g : games) {
    if (g.clicks.size() != g.play_scores.size()) throw std::invalid_argument("clicks and scores differ in length");
    const auto scores = cell_scores(*g.map, g.cost);
    const double lo = median(scores);
    const double hi = quantile(scores, bins.high_quantile);
    for (std::size_t r = 1; r < g.clicks.size(); ++r) {
      const double d = euclidean(g.clicks[r], g.clicks[r - 1]);
      const int row = d <= bins.near ? 0 : d <= bins.medium ? 1 : 2;
      const double s = g.play_scores[r];
      const int col = s < lo ? 0 : s >= hi ? 2 : 1;
      counts(row, col) += 1.0;
    }
  }
  const double total = counts.sum();
  if (total == 0.0) throw std::invalid_argument("no consecutive plays to bin");
  return counts * (100.0 / total);
}

double explore_rmse(const ExploreMatrix& a, const ExploreMatrix& b) {
  return std::sqrt(((a - b) / 100.0).squaredNorm() / 9.0);
}

}  // namespace oilgame
