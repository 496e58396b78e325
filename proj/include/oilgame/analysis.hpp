#pragma once

#include "oilgame/engine.hpp"
#include "oilgame/grid.hpp"
#include "oilgame/mapgen.hpp"

#include <Eigen/Dense>

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace oilgame {

// ---------------------------------------------------------------------------
// Significance tests

enum class StatTest { welch_t, ks_2sample, binomial };
std::string_view to_string(StatTest t);

struct StatResult {
  StatTest test = StatTest::welch_t;
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
};

/// Two-sided Welch t-test. Zero standard error: equal means give t = 0 and
/// p = 1, different means give t = +-inf and p = 0.
StatResult welch_t(std::span<const double> a, std::span<const double> b);
/// Two-sided two-sample Kolmogorov-Smirnov test with the asymptotic
/// distribution (effective-n corrected).
StatResult ks_2sample(std::span<const double> a, std::span<const double> b);
/// Exact two-sided binomial test: sums all outcomes no more likely than k.
StatResult binomial_test(std::size_t successes, std::size_t trials, double p0);

/// Kolmogorov distribution tail Q(z) = P(K > z).
double kolmogorov_q(double z);

double median(std::vector<double> v);
/// Linear-interpolation quantile.
double quantile(std::vector<double> v, double q);
double mean(std::span<const double> v);
double stddev(std::span<const double> v);  // sample, n - 1

// ---------------------------------------------------------------------------
// Play metrics

/// Euclidean distance in cells between the recommended and the clicked cell.
double reliance_distance(const CellCoord& recommended, const CellCoord& clicked);

/// Mean distance between two uniform points of the unit square,
/// (2 + sqrt 2 + 5 ln(1 + sqrt 2)) / 15.
double random_pair_distance_constant();

/// Per-cell play scores (yield minus cost) of a map.
std::vector<double> cell_scores(const GameMap& map, const CostSchedule& cost);

/// Fraction of plays scoring strictly below the median cell score of the map.
double bad_play_rate(std::span<const double> play_scores, const GameMap& map, const CostSchedule& cost);

// ---------------------------------------------------------------------------
// Learning-curve clustering

/// Classic DTW, absolute-difference cost, unconstrained window.
double dtw_distance(std::span<const double> a, std::span<const double> b);
/// Optimal warping path as (i, j) pairs from (0, 0) to (n-1, m-1).
std::vector<std::pair<int, int>> dtw_path(std::span<const double> a, std::span<const double> b);

Eigen::MatrixXd dtw_matrix(const std::vector<std::vector<double>>& series);

/// Minimum spanning tree (Prim) as a symmetric adjacency matrix.
Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> minimum_spanning_tree(const Eigen::MatrixXd& dist);

/// Keeps (i, j) iff d(i, j) <= (1 + gamma) * max edge on the MST path from i
/// to j. Always contains the MST.
Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> rmst_prune(const Eigen::MatrixXd& dist, double gamma);

/// Newman modularity of a labelling on a weighted undirected graph.
double modularity(const Eigen::MatrixXd& weights, std::span<const int> labels);

/// Agglomerative greedy modularity maximisation (Clauset-Newman-Moore
/// merges, ties to the lowest community indices). Labels are renumbered by
/// first appearance.
std::vector<int> greedy_modularity(const Eigen::MatrixXd& weights);

struct ClusterOptions {
  double gamma = 0.5;
  int barycenter_iterations = 10;
};

struct Clustering {
  std::vector<int> labels;
  std::vector<std::vector<double>> centroids;
  std::vector<int> sizes;
  double bandwidth = 0.0;
  double modularity = 0.0;

  int count() const noexcept { return static_cast<int>(centroids.size()); }
};

/// DTW distances, Gaussian similarities (bandwidth = median pairwise
/// distance), RMST sparsification, greedy modularity, then DTW barycenter
/// averaging seeded at each cluster's medoid.
Clustering cluster_curves(const std::vector<std::vector<double>>& curves, const ClusterOptions& options = {});

/// DTW barycenter averaging.
std::vector<double> dba(const std::vector<std::vector<double>>& members, std::vector<double> init, int iterations);

// ---------------------------------------------------------------------------
// Exploration versus exploitation

struct ExploreBins {
  double near = 2.0;    // distance <= near
  double medium = 8.0;  // near < distance <= medium; beyond is far
  double high_quantile = 0.8;
};

/// Rows near/medium/far, columns low (< map median cell score), mid,
/// high (>= the map's high_quantile cell score). Entries are percentages of
/// all binned plays; a play is binned by its distance to the previous click
/// of the same game.
using ExploreMatrix = Eigen::Matrix<double, 3, 3>;

struct ExploreInput {
  std::vector<CellCoord> clicks;
  std::vector<double> play_scores;
  std::shared_ptr<const GameMap> map;
  CostSchedule cost;
};

ExploreMatrix explore_matrix(std::span<const ExploreInput> games, const ExploreBins& bins = {});
/// RMSE between two matrices expressed as fractions.
double explore_rmse(const ExploreMatrix& a, const ExploreMatrix& b);

}  // namespace oilgame
