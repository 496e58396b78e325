#include "oilgame/dss.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

using namespace oilgame;

namespace {

GameMap bump_map(std::uint64_t seed) {
  Rng rng(seed);
  GameMap m;
  m.id = "bump-" + std::to_string(seed);
  m.terrain = make_terrain(terrain_noise_params(seed + 7));
  const double cx = rng.uniform() * 31.0;
  const double cy = rng.uniform() * 31.0;
  for (int y = 0; y < kBoardSize; ++y)
    for (int x = 0; x < kBoardSize; ++x)
      m.oil(y, x) = 100.0 * std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / 128.0);
  return m;
}

double correlation(const Eigen::ArrayXXd& a, const Eigen::ArrayXXd& b) {
  const Eigen::ArrayXXd ac = a - a.mean();
  const Eigen::ArrayXXd bc = b - b.mean();
  return (ac * bc).sum() / std::sqrt(ac.square().sum() * bc.square().sum());
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<GameMap> maps_for_seeds(int n, std::uint64_t seed) {
  return generate_candidates(n, terrain_noise_params(), oil_noise_params(), seed);
}

}  // namespace

TEST_CASE("feature basis: count and standardization") {
  for (int d = 1; d <= 6; ++d) CHECK(FeatureBasis(d).feature_count() == (d + 1) * (d + 2) / 2);
  FeatureBasis basis(5);
  CHECK(basis.feature_count() == 21);
  std::vector<CellCoord> cells{{0, 0}, {31, 31}, {4, 17}, {20, 3}, {9, 9}};
  basis.fit(cells);
  CHECK(basis.scale()(0) == 1.0);  // constant slot without terrain
  const auto x = basis.design(cells);
  for (Eigen::Index j = 1; j < x.cols(); ++j) {
    CHECK(std::abs(x.col(j).mean()) < 1e-12);
    CHECK(std::sqrt(x.col(j).squaredNorm() / 5.0) == doctest::Approx(1.0));
  }
}

TEST_CASE("train: biased and unbiased coincide on an all-desert map") {
  auto m = maps_for_seeds(1, 3).front();
  m.terrain.setConstant(kDesert);
  const CostSchedule cost{40.0};
  const auto biased = train(m, Bias::biased, cost, 123);
  const auto unbiased = train(m, Bias::unbiased, cost, 123);
  CHECK(biased.coefficients == unbiased.coefficients);
  CHECK(biased.intercept == unbiased.intercept);
  CHECK(biased.training_samples.size() == 20);
  std::set<CellCoord> distinct;
  for (const auto& s : biased.training_samples) distinct.insert(s.cell);
  CHECK(distinct.size() == 20);
}

TEST_CASE("train: targets follow the bias condition") {
  const auto m = maps_for_seeds(1, 9).front();
  const CostSchedule cost{40.0};
  const auto unbiased = train(m, Bias::unbiased, cost, 5);
  for (const auto& s : unbiased.training_samples)
    CHECK(s.target == m.yield(s.cell) - (m.is_forest(s.cell) ? 40.0 : 0.0));
  const auto biased = train(m, Bias::biased, cost, 5);
  for (const auto& s : biased.training_samples) CHECK(s.target == m.yield(s.cell));
}

TEST_CASE("train: biased predictions ignore terrain") {
  const auto maps = maps_for_seeds(100, 4242);
  std::vector<double> diffs;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const auto model = train(maps[i], Bias::biased, CostSchedule{40.0}, 1000 + i);
    const Eigen::ArrayXXd terrain = maps[i].terrain.cast<double>().array();
    diffs.push_back(correlation(model.predictions.array(), terrain) - correlation(maps[i].oil.array(), terrain));
  }
  const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / diffs.size();
  double var = 0.0;
  for (double d : diffs) var += (d - mean) * (d - mean);
  const double se = std::sqrt(var / (diffs.size() - 1) / diffs.size());
  CHECK(std::abs(mean) <= 3.0 * se);
}

TEST_CASE("train: top-20% region finds the single optimum") {
  int hits = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto m = bump_map(s);
    const auto model = train(m, Bias::biased, CostSchedule{20.0}, s * 31 + 1);
    Eigen::Index r, c;
    m.oil.maxCoeff(&r, &c);
    hits += model.predictions(r, c) >= top_quantile_threshold(model.predictions);
  }
  // Measured 100/100 on first run; spec floor is 60.
  CHECK(hits >= 60);
}

TEST_CASE("predict_all: zero coefficients give the intercept") {
  auto model = train(maps_for_seeds(1, 1).front(), Bias::biased, {}, 1);
  model.coefficients.setZero();
  model.intercept = 42.5;
  const auto grid = predict_all(model);
  CHECK((grid.array() == 42.5).all());
  CHECK(predict_all(model) == grid);
}

TEST_CASE("predict_all: exact polynomial field is reproduced at the training cells") {
  const auto field = [](const CellCoord& c) {
    const double u = c.x / 31.0, v = c.y / 31.0;
    return 10.0 + 30.0 * u - 20.0 * v + 50.0 * u * v - 40.0 * u * u + 15.0 * v * v;
  };
  Rng rng(4);
  std::vector<DrillSample> samples;
  std::set<CellCoord> used;
  while (samples.size() < 20) {
    const auto c = CellCoord::from_index(static_cast<int>(rng.below(kCellCount)));
    if (used.insert(c).second) samples.push_back({c, field(c)});
  }
  for (int degree : {2, 5}) {
    TrainOptions options;
    options.degree = degree;
    options.lambda = 0.0;
    const auto model = fit_samples(samples, options);
    for (const auto& s : samples) CHECK(std::abs(model.predict(s.cell) - s.target) <= 1e-4);
  }
}

TEST_CASE("base_recommendation: top-20% rule, fallback, uniformity") {
  const auto model = train(maps_for_seeds(1, 17).front(), Bias::biased, {}, 3);
  const double threshold = top_quantile_threshold(model.predictions);
  CHECK((model.predictions.array() >= threshold).count() >= 205);
  Rng rng(1);
  for (int i = 0; i < 200; ++i)
    CHECK(at(model.predictions, base_recommendation(model.predictions, nullptr, rng)) >= threshold);

  const auto in_top = [&](const CellCoord& c) { return at(model.predictions, c) >= threshold; };
  const auto fallback = base_recommendation(model.predictions, in_top, rng);
  double best = -1e300;
  for (int i = 0; i < kCellCount; ++i) {
    const auto c = CellCoord::from_index(i);
    if (!in_top(c)) best = std::max(best, at(model.predictions, c));
  }
  CHECK(at(model.predictions, fallback) == best);

  std::map<CellCoord, int> counts;
  int eligible = 0;
  for (int i = 0; i < kCellCount; ++i) eligible += in_top(CellCoord::from_index(i));
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) counts[base_recommendation(model.predictions, nullptr, rng)]++;
  const double expected = static_cast<double>(draws) / eligible;
  double chi2 = 0.0;
  for (int i = 0; i < kCellCount; ++i) {
    const auto c = CellCoord::from_index(i);
    if (!in_top(c)) continue;
    const double o = counts.count(c) ? counts[c] : 0;
    chi2 += (o - expected) * (o - expected) / expected;
  }
  const boost::math::chi_squared dist(eligible - 1);
  CHECK(boost::math::cdf(complement(dist, chi2)) > 0.01);
}

TEST_CASE("degrade: identity at high accuracy, in-grid always") {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const auto c = CellCoord::from_index(static_cast<int>(rng.below(kCellCount)));
    CHECK(degrade(c, Accuracy::high, rng) == c);
    CHECK(degrade(c, Accuracy::medium, rng).in_bounds());
    CHECK(degrade(c, Accuracy::low, rng).in_bounds());
  }
  CHECK_FALSE(mixture_for(Accuracy::high).has_value());
  CHECK(mixture_for(Accuracy::medium)->p_small == 0.8);
  CHECK(mixture_for(Accuracy::low)->p_small == 0.2);
  CHECK(mixture_for(Accuracy::low)->small_sigma == doctest::Approx(std::sqrt(3.0)));
  CHECK(mixture_for(Accuracy::low)->large_sigma == doctest::Approx(std::sqrt(20.0)));
}

TEST_CASE("degrade: branch rate and mixture spread") {
  Rng rng(2);
  const int draws = 100000;
  int small = 0;
  for (int i = 0; i < draws; ++i) small += sample_noise(*mixture_for(Accuracy::medium), rng).small_branch;
  CHECK(std::abs(small / double(draws) - 0.8) <= 0.01);

  double sx = 0, sy = 0;
  for (int i = 0; i < draws; ++i) {
    const auto d = sample_noise(*mixture_for(Accuracy::low), rng);
    sx += d.dx * d.dx;
    sy += d.dy * d.dy;
  }
  const double expected = std::sqrt(0.2 * 3.0 + 0.8 * 20.0);
  CHECK(std::abs(std::sqrt(sx / draws) / expected - 1.0) <= 0.02);
  CHECK(std::abs(std::sqrt(sy / draws) / expected - 1.0) <= 0.02);

  CHECK(apply_noise({16, 16}, {0.4, -0.6, true}) == CellCoord{16, 15});
  CHECK(apply_noise({1, 30}, {-5.0, 5.0, false}) == CellCoord{0, 31});
}

TEST_CASE("precompute_sequence and the skip rule") {
  const auto map = maps_for_seeds(1, 21).front();
  const auto model = build_model(map, Bias::unbiased, {}, Accuracy::medium, 77);
  REQUIRE(model->rec_sequence.size() == 30);
  for (const auto& c : model->rec_sequence) CHECK(c.in_bounds());

  std::set<CellCoord> clicked(model->rec_sequence.begin(), model->rec_sequence.begin() + 3);
  std::size_t cursor = 0;
  const auto next = next_from_sequence(model->rec_sequence, cursor, [&](const CellCoord& c) { return clicked.count(c) > 0; });
  REQUIRE(next);
  // Fourth entry unless it repeats one of the first three.
  std::size_t expect = 3;
  while (clicked.count(model->rec_sequence[expect])) ++expect;
  CHECK(*next == model->rec_sequence[expect]);

  const auto again = build_model(map, Bias::unbiased, {}, Accuracy::medium, 77);
  CHECK(again->rec_sequence == model->rec_sequence);

  // High-accuracy base picks are distinct top-20% cells.
  const auto high = build_model(map, Bias::unbiased, {}, Accuracy::high, 77);
  std::set<CellCoord> distinct(high->rec_sequence.begin(), high->rec_sequence.end());
  CHECK(distinct.size() == 30);
  const double threshold = top_quantile_threshold(high->predictions);
  for (const auto& c : high->rec_sequence) CHECK(at(high->predictions, c) >= threshold);

  Rng short_rng(1);
  CHECK_THROWS(precompute_sequence(*model, Accuracy::high, 24, short_rng));
}

TEST_CASE("dss_alone_play: served cells are never already clicked; fallback kicks in") {
  const auto map = std::make_shared<const GameMap>(maps_for_seeds(1, 33).front());
  auto model = std::make_shared<DssModel>(*build_model(*map, Bias::biased, {}, Accuracy::low, 5));
  model->rec_sequence.assign(30, model->rec_sequence.front());
  const auto game = dss_alone_play(model, map, {});
  CHECK(game.finished());
  std::set<CellCoord> cells(game.clicked().begin(), game.clicked().end());
  CHECK(cells.size() == 25);
  for (const auto& e : game.events()) CHECK(e.recommended == e.clicked);

  RecommendationStream stream(model);
  GameState state(map, {});
  for (int r = 0; r < 25; ++r) state.click(stream.next(state), std::nullopt, r + 1);
  CHECK(stream.fallback_draws() == 24);
}

TEST_CASE("dss_alone_play: accuracy ordering over seeded runs") {
  const auto maps = maps_for_seeds(200, 555);
  std::map<Accuracy, std::vector<double>> plays;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const auto map = std::make_shared<const GameMap>(maps[i]);
    for (auto acc : {Accuracy::high, Accuracy::low}) {
      const auto game = dss_alone_play(build_model(*map, Bias::unbiased, {}, acc, i), map, {});
      for (const auto& e : game.events()) plays[acc].push_back(e.play_score);
    }
  }
  CHECK(median(plays[Accuracy::high]) > median(plays[Accuracy::low]));
}

TEST_CASE("bias under high cost: forest targeting and score") {
  const auto maps = maps_for_seeds(200, 808);
  const CostSchedule cost{40.0};
  double biased_score = 0, unbiased_score = 0;
  int biased_forest = 0, unbiased_forest = 0;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    const auto map = std::make_shared<const GameMap>(maps[i]);
    const auto b = dss_alone_play(build_model(*map, Bias::biased, cost, Accuracy::high, i), map, cost);
    const auto u = dss_alone_play(build_model(*map, Bias::unbiased, cost, Accuracy::high, i), map, cost);
    biased_score += b.score();
    unbiased_score += u.score();
    for (const auto& c : b.clicked()) biased_forest += map->is_forest(c);
    for (const auto& c : u.clicked()) unbiased_forest += map->is_forest(c);
  }
  CHECK(unbiased_score >= biased_score);
  CHECK(biased_forest >= unbiased_forest);
}

TEST_CASE("model dump reproduces serving") {
  const auto map = maps_for_seeds(1, 12).front();
  const auto model = build_model(map, Bias::biased, CostSchedule{40.0}, Accuracy::medium, 3);
  const auto text = to_json(*model).dump();
  const auto back = model_from_json(nlohmann::json::parse(text), map);
  CHECK(back.rec_sequence == model->rec_sequence);
  CHECK(back.coefficients == model->coefficients);
  CHECK((back.predictions - model->predictions).cwiseAbs().maxCoeff() == 0.0);
  CHECK(to_json(back).dump() == text);
}
