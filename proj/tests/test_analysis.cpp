#include "oilgame/analysis.hpp"
#include "oilgame/rng.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace oilgame;

namespace {

std::vector<double> random_series(Rng& rng, int max_len) {
  std::vector<double> s(static_cast<std::size_t>(1 + rng.below(static_cast<std::uint64_t>(max_len))));
  for (auto& x : s) x = std::round(rng.uniform() * 10.0);
  return s;
}

Eigen::MatrixXd random_distances(Rng& rng, int n) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) d(i, j) = d(j, i) = rng.uniform();
  return d;
}

// Rising and flat learning curves with noise; family is i % 2.
std::vector<std::vector<double>> planted_curves(std::uint64_t seed, int per_family) {
  Rng rng(seed);
  std::vector<std::vector<double>> out;
  for (int i = 0; i < 2 * per_family; ++i) {
    std::vector<double> c(75);
    for (int t = 0; t < 75; ++t) {
      const double base = i % 2 == 0 ? 20.0 + 70.0 * t / 74.0 : 40.0;
      c[static_cast<std::size_t>(t)] = base + rng.normal(0.0, 5.0);
    }
    out.push_back(std::move(c));
  }
  return out;
}

double permutation_p(const std::vector<double>& a, const std::vector<double>& b, Rng& rng, int rounds) {
  auto tstat = [](std::span<const double> x, std::span<const double> y) { return std::abs(welch_t(x, y).statistic); };
  const double observed = tstat(a, b);
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  int hits = 0;
  for (int r = 0; r < rounds; ++r) {
    for (std::size_t i = pooled.size() - 1; i > 0; --i) std::swap(pooled[i], pooled[rng.below(i + 1)]);
    const std::span<const double> all(pooled);
    if (tstat(all.first(a.size()), all.subspan(a.size())) >= observed - 1e-12) ++hits;
  }
  return static_cast<double>(hits) / rounds;
}

}  // namespace

TEST_CASE("summary statistics") {
  const std::vector<double> v{3, 1, 4, 1, 5, 9, 2, 6};
  CHECK(mean(v) == doctest::Approx(31.0 / 8));
  CHECK(median(v) == doctest::Approx(3.5));
  CHECK(quantile(v, 0.8) == doctest::Approx(oracle::quantile(v, 0.8)));
  CHECK(quantile(v, 0.0) == 1.0);
  CHECK(quantile(v, 1.0) == 9.0);
  CHECK(stddev(std::vector<double>{2, 4, 4, 4, 5, 5, 7, 9}) == doctest::Approx(2.13809).epsilon(1e-5));
  CHECK_THROWS(median({}));
}

TEST_CASE("welch t-test") {
  const std::vector<double> a{1.2, 2.3, 3.1, 4.8, 5.0, 2.2}, b{2.5, 3.9, 4.4, 6.1, 5.5, 7.0, 4.2};
  // Reference values from an independent statistics package.
  const auto r = welch_t(a, b);
  CHECK(r.statistic == doctest::Approx(-2.017393518737002).epsilon(1e-10));
  CHECK(r.p_value == doctest::Approx(0.06952601182808557).epsilon(1e-8));
  CHECK(r.n1 == 6);
  CHECK(r.n2 == 7);

  SUBCASE("against itself") {
    const auto s = welch_t(a, a);
    CHECK(s.statistic == 0.0);
    CHECK(s.p_value == doctest::Approx(1.0));
  }
  SUBCASE("zero variance") {
    const std::vector<double> c{2, 2, 2}, d{3, 3};
    CHECK(welch_t(c, c).p_value == 1.0);
    CHECK(welch_t(c, c).statistic == 0.0);
    CHECK(welch_t(c, d).p_value == 0.0);
    CHECK(std::isinf(welch_t(c, d).statistic));
  }
  SUBCASE("matches a permutation oracle on small samples") {
    Rng rng(17);
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<double> x(12), y(12);
      for (auto& v : x) v = rng.normal(0.0, 1.0);
      for (auto& v : y) v = rng.normal(0.6, 1.0);
      const double p = welch_t(x, y).p_value;
      const double perm = permutation_p(x, y, rng, 4000);
      // Monte-Carlo error of the oracle is <= 0.008; allow for the t approximation too.
      CHECK(std::abs(p - perm) < 0.03);
    }
  }
}

TEST_CASE("kolmogorov-smirnov") {
  const std::vector<double> a{1.2, 2.3, 3.1, 4.8, 5.0, 2.2}, b{2.5, 3.9, 4.4, 6.1, 5.5, 7.0, 4.2};
  const auto r = ks_2sample(a, b);
  CHECK(r.statistic == doctest::Approx(0.5238095238095237));
  const double en = std::sqrt(42.0 / 13.0);
  CHECK(r.p_value == doctest::Approx(kolmogorov_q((en + 0.12 + 0.11 / en) * r.statistic)));

  CHECK(ks_2sample(a, a).statistic == 0.0);
  CHECK(ks_2sample(a, a).p_value == doctest::Approx(1.0));
  // Kolmogorov tail against reference values.
  CHECK(kolmogorov_q(1.0) == doctest::Approx(0.26999967167735456).epsilon(1e-4));
  CHECK(kolmogorov_q(0.5) == doctest::Approx(0.9639452436648751).epsilon(1e-4));
  CHECK(kolmogorov_q(3.0) < 1e-7);

  // Ties across samples are stepped together.
  const std::vector<double> c{1, 1, 2}, d{1, 2, 2};
  CHECK(ks_2sample(c, d).statistic == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("binomial test") {
  CHECK(binomial_test(3, 10, 0.5).p_value == doctest::Approx(0.34375));
  CHECK(binomial_test(7, 20, 0.3).p_value == doctest::Approx(0.6294979666766769));
  CHECK(binomial_test(5, 10, 0.5).p_value == doctest::Approx(1.0));
  CHECK(binomial_test(0, 30, 0.5).p_value < 1e-8);
  CHECK(binomial_test(0, 5, 0.0).p_value == 1.0);
  CHECK_THROWS(binomial_test(4, 3, 0.5));
}

TEST_CASE("A/A false-positive rate") {
  Rng rng(2024);
  int t_hits = 0, ks_hits = 0;
  const int runs = 1000;
  for (int r = 0; r < runs; ++r) {
    std::vector<double> a(40), b(40);
    for (auto& v : a) v = rng.normal(50.0, 15.0);
    for (auto& v : b) v = rng.normal(50.0, 15.0);
    t_hits += welch_t(a, b).p_value < 0.05;
    ks_hits += ks_2sample(a, b).p_value < 0.05;
  }
  CHECK(std::abs(t_hits / double(runs) - 0.05) <= 0.02);
  CHECK(std::abs(ks_hits / double(runs) - 0.05) <= 0.02);
}

TEST_CASE("reliance distance") {
  CHECK(reliance_distance({4, 4}, {4, 4}) == 0.0);
  CHECK(reliance_distance({0, 0}, {3, 4}) == 5.0);
  CHECK(random_pair_distance_constant() == doctest::Approx(0.52140).epsilon(1e-4));
  CHECK(random_pair_distance_constant() * 32 == doctest::Approx(16.685).epsilon(1e-4));

  Rng rng(9);
  double sum = 0.0;
  const int n = 1'000'000;
  for (int i = 0; i < n; ++i) {
    const CellCoord a{static_cast<int>(rng.below(32)), static_cast<int>(rng.below(32))};
    const CellCoord b{static_cast<int>(rng.below(32)), static_cast<int>(rng.below(32))};
    sum += reliance_distance(a, b);
  }
  // Discrete grid sits slightly below the continuous 16.685.
  CHECK(sum / n == doctest::Approx(16.6).epsilon(0.01));
}

TEST_CASE("bad plays") {
  const auto map = generate_candidates(1, terrain_noise_params(), oil_noise_params(), 3)[0];
  const CostSchedule cost{40.0, 0.0};
  const auto scores = cell_scores(map, cost);
  REQUIRE(scores.size() == 1024);
  const double best = *std::max_element(scores.begin(), scores.end());
  const std::vector<double> top(25, best);
  CHECK(bad_play_rate(top, map, cost) == 0.0);

  // Uniform plays: half fall below the median by construction.
  Rng rng(1);
  std::vector<double> plays;
  for (int i = 0; i < 500 * 25; ++i) plays.push_back(scores[rng.below(1024)]);
  CHECK(std::abs(bad_play_rate(plays, map, cost) - 0.5) < 0.02);
}

TEST_CASE("dtw") {
  const std::vector<double> a{1, 2, 3}, b{2, 3, 4};
  CHECK(dtw_distance(a, b) == 2.0);
  CHECK(oracle::dtw_enumerate(a, b) == 2.0);
  CHECK(dtw_distance(a, a) == 0.0);
  CHECK(dtw_distance(std::vector<double>{1, 1, 2, 3}, a) == 0.0);
  CHECK_THROWS(dtw_distance({}, a));

  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto x = random_series(rng, 6), y = random_series(rng, 6);
    const double d = dtw_distance(x, y);
    CHECK(d == oracle::dtw_enumerate(x, y));
    CHECK(d == dtw_distance(y, x));
    CHECK(d >= 0.0);
    // Path cost equals the distance and the path is monotone.
    const auto path = dtw_path(x, y);
    double cost = 0.0;
    for (std::size_t k = 0; k < path.size(); ++k) {
      cost += std::abs(x[static_cast<std::size_t>(path[k].first)] - y[static_cast<std::size_t>(path[k].second)]);
      if (k > 0) {
        CHECK(path[k].first - path[k - 1].first <= 1);
        CHECK(path[k].second - path[k - 1].second <= 1);
      }
    }
    CHECK(cost == d);
    if (x.size() == y.size()) {
      double l1 = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) l1 += std::abs(x[k] - y[k]);
      CHECK(d <= l1);
    }
  }
}

TEST_CASE("rmst") {
  Rng rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const auto d = random_distances(rng, 10);
    const auto mst = minimum_spanning_tree(d);
    CHECK(mst.cast<int>().sum() == 2 * 9);
    const auto minimax = oracle::minimax_paths(d);
    const auto keep = rmst_prune(d, 0.1);
    for (int i = 0; i < 10; ++i) {
      for (int j = 0; j < 10; ++j) {
        if (i == j) continue;
        CHECK(keep(i, j) == (d(i, j) <= 1.1 * minimax(i, j)));
        if (mst(i, j)) CHECK(keep(i, j));
      }
    }
    // gamma = 0 keeps only the tree for distinct weights.
    CHECK(rmst_prune(d, 0.0) == mst);
    // Large gamma keeps everything.
    CHECK(rmst_prune(d, 1e9).cast<int>().sum() == 90);
  }
}

TEST_CASE("greedy modularity") {
  // Two 4-cliques joined by a single weak edge.
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(8, 8);
  for (int g = 0; g < 2; ++g)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (i != j) w(4 * g + i, 4 * g + j) = 1.0;
  w(3, 4) = w(4, 3) = 0.1;
  const auto labels = greedy_modularity(w);
  CHECK(labels == std::vector<int>{0, 0, 0, 0, 1, 1, 1, 1});
  CHECK(modularity(w, labels) > modularity(w, std::vector<int>(8, 0)));
  CHECK(modularity(w, std::vector<int>(8, 0)) == doctest::Approx(0.0));
}

TEST_CASE("curve clustering") {
  SUBCASE("planted families") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto curves = planted_curves(seed, 15);
      const auto c = cluster_curves(curves);
      REQUIRE(c.count() == 2);
      int wrong = 0;
      for (std::size_t i = 0; i < curves.size(); ++i) wrong += c.labels[i] != c.labels[i % 2];
      CHECK(wrong == 0);
      CHECK(c.sizes == std::vector<int>{15, 15});
      // Rising family centroid ends well above where it starts.
      const auto& rising = c.centroids[static_cast<std::size_t>(c.labels[0])];
      CHECK(rising.back() - rising.front() > 40.0);
    }
  }
  SUBCASE("identical curves") {
    const std::vector<std::vector<double>> same(6, std::vector<double>{1, 5, 9, 12});
    const auto c = cluster_curves(same);
    CHECK(c.count() == 1);
    CHECK(c.centroids[0] == same[0]);
  }
  CHECK_THROWS(cluster_curves({{1.0, 2.0}}));
}

TEST_CASE("dba") {
  const std::vector<std::vector<double>> members{{0, 1, 2}, {0, 1, 2}};
  CHECK(dba(members, {5, 5, 5}, 10) == std::vector<double>{0, 1, 2});
  const std::vector<std::vector<double>> shifted{{0, 0, 1, 2}, {0, 1, 2, 2}};
  const auto c = dba(shifted, {0, 1, 2}, 10);
  CHECK(c == std::vector<double>{0, 1, 2});
}

TEST_CASE("explore matrix") {
  auto map = std::make_shared<const GameMap>(generate_candidates(1, terrain_noise_params(), oil_noise_params(), 4)[0]);
  const CostSchedule cost{20.0, 0.0};
  auto game = [&](std::vector<CellCoord> clicks) {
    ExploreInput in{std::move(clicks), {}, map, cost};
    for (const auto& c : in.clicks) in.play_scores.push_back(map->yield(c) - cost.cost_of(*map, c));
    return in;
  };

  SUBCASE("adjacent clicks are all near") {
    std::vector<CellCoord> walk;
    for (int i = 0; i < 25; ++i) walk.push_back({i, 3});
    const std::vector<ExploreInput> games{game(walk)};
    const auto m = explore_matrix(games);
    CHECK(m.row(0).sum() == doctest::Approx(100.0));
    CHECK(m.bottomRows(2).sum() == 0.0);
  }
  SUBCASE("bins and totals") {
    const std::vector<ExploreInput> games{game({{0, 0}, {1, 1}, {6, 1}, {30, 30}})};
    const auto m = explore_matrix(games);
    CHECK(m.sum() == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(m.row(0).sum() == doctest::Approx(100.0 / 3));
    CHECK(m.row(1).sum() == doctest::Approx(100.0 / 3));
    CHECK(m.row(2).sum() == doctest::Approx(100.0 / 3));
    CHECK((m.array() >= 0.0).all());
  }
  SUBCASE("random walks sum to 100") {
    Rng rng(3);
    std::vector<ExploreInput> games;
    for (int g = 0; g < 20; ++g) {
      std::vector<CellCoord> clicks;
      for (int i = 0; i < 25; ++i) clicks.push_back({static_cast<int>(rng.below(32)), static_cast<int>(rng.below(32))});
      games.push_back(game(clicks));
    }
    const auto m = explore_matrix(games);
    CHECK(std::abs(m.sum() - 100.0) < 1e-9);
    CHECK(explore_rmse(m, m) == 0.0);
    ExploreMatrix shifted = m;
    shifted(0, 0) += 9.0;
    shifted(2, 2) -= 9.0;
    CHECK(explore_rmse(m, shifted) == doctest::Approx(std::sqrt(2 * 0.09 * 0.09 / 9)));
  }
}
