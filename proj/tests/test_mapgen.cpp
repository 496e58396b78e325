#include "oilgame/mapgen.hpp"
#include "oilgame/rng.hpp"

#include <doctest.h>

#include <set>

using namespace oilgame;

namespace {

double horizontal_roughness(const Eigen::MatrixXd& g) {
  return (g.rightCols(g.cols() - 1) - g.leftCols(g.cols() - 1)).cwiseAbs().mean();
}

int strict_local_maxima(const OilGrid& g) {
  int count = 0;
  for (int y = 0; y < kBoardSize; ++y) {
    for (int x = 0; x < kBoardSize; ++x) {
      bool peak = true;
      for (int dy = -1; dy <= 1 && peak; ++dy)
        for (int dx = -1; dx <= 1 && peak; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if ((dx || dy) && nx >= 0 && ny >= 0 && nx < kBoardSize && ny < kBoardSize && g(ny, nx) >= g(y, x)) peak = false;
        }
      count += peak;
    }
  }
  return count;
}

}  // namespace

TEST_CASE("perlin_grid: values normalized and deterministic") {
  const NoiseParams p{1, 1.0, 1.0, 42};
  const auto a = perlin_grid(p, 32, 32);
  const auto b = perlin_grid(p, 32, 32);
  CHECK(a.minCoeff() >= 0.0);
  CHECK(a.maxCoeff() <= 1.0);
  CHECK(a == b);
  CHECK(perlin_grid(p, 7, 3).rows() == 3);
  CHECK(perlin_grid(p, 7, 3).cols() == 7);
}

TEST_CASE("perlin_grid: rejects bad parameters") {
  CHECK_THROWS_AS(perlin_grid({0, 1.0, 1.0, 1}, 32, 32), MapError);
  CHECK_THROWS_AS(perlin_grid({-2, 1.0, 1.0, 1}, 32, 32), MapError);
  CHECK_THROWS_AS(perlin_grid({1, 0.0, 1.0, 1}, 32, 32), MapError);
  CHECK_THROWS_AS(perlin_grid({1, 1.0, -1.0, 1}, 32, 32), MapError);
  CHECK_THROWS_AS(perlin_grid({1, 1.0, 1.0, 1}, 0, 32), MapError);
}

TEST_CASE("perlin_grid: terrain parameters are rougher than oil parameters") {
  for (std::uint64_t s : {1u, 42u, 777u}) {
    const double rough = horizontal_roughness(perlin_grid(terrain_noise_params(s), 32, 32));
    const double smooth = horizontal_roughness(perlin_grid(oil_noise_params(s), 32, 32));
    CHECK(rough > smooth);
  }
}

TEST_CASE("make_terrain: limiting thresholds and golden split") {
  const auto p = terrain_noise_params(42);
  CHECK(forest_fraction(make_terrain(p, 1e-9)) == 1.0);
  CHECK(forest_fraction(make_terrain(p, 1.0 - 1e-9)) == 0.0);
  const auto t = make_terrain(p, 0.5);
  const double ff = forest_fraction(t);
  CHECK(ff > 0.05);
  CHECK(ff < 0.95);
  // Frozen from the first run.
  CHECK(t.cast<int>().sum() == 314);
  CHECK(make_terrain(p, 0.5) == t);
  CHECK_THROWS_AS(make_terrain(p, 0.0), MapError);
  CHECK_THROWS_AS(make_terrain(p, 1.0), MapError);
}

TEST_CASE("make_oil: normalization pins max to 100 and min to the floor") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto oil = make_oil(oil_noise_params(s));
    CHECK(oil.maxCoeff() == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(oil.minCoeff() == 0.0);
    const auto floored = make_oil(oil_noise_params(s), 20.0);
    CHECK(floored.minCoeff() == 20.0);
    CHECK(floored.maxCoeff() == 100.0);
  }
}

TEST_CASE("make_oil: smooth fields have few local maxima") {
  int few = 0;
  for (std::uint64_t s = 0; s < 100; ++s) few += strict_local_maxima(make_oil(oil_noise_params(s))) <= 5;
  CHECK(few >= 90);
}

TEST_CASE("make_oil: neighbouring cells have similar yields") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto oil = make_oil(oil_noise_params(s));
    const double h = (oil.rightCols(31) - oil.leftCols(31)).cwiseAbs().mean();
    const double v = (oil.bottomRows(31) - oil.topRows(31)).cwiseAbs().mean();
    CHECK((h + v) / 2.0 <= 10.0);
  }
}

TEST_CASE("generate_candidates: count, distinctness, determinism") {
  const auto maps = generate_candidates(10, terrain_noise_params(), oil_noise_params(), 2024);
  REQUIRE(maps.size() == 10);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    ids.insert(maps[i].id);
    CHECK(maps[i].difficulty == Difficulty::unlabeled);
    const double ff = forest_fraction(maps[i].terrain);
    CHECK(ff > 0.0);
    CHECK(ff < 1.0);
    for (std::size_t j = 0; j < i; ++j) CHECK(maps[i].oil != maps[j].oil);
  }
  CHECK(ids.size() == 10);
  CHECK(generate_candidates(1, terrain_noise_params(), oil_noise_params(), 5).size() == 1);

  const auto again = generate_candidates(10, terrain_noise_params(), oil_noise_params(), 2024);
  for (std::size_t i = 0; i < maps.size(); ++i) CHECK(serialize_map(maps[i]) == serialize_map(again[i]));
}

TEST_CASE("terrain and oil are uncorrelated across seeds") {
  const auto maps = generate_candidates(100, terrain_noise_params(), oil_noise_params(), 99);
  double total = 0.0;
  for (const auto& m : maps) {
    const Eigen::ArrayXXd t = m.terrain.cast<double>().array();
    const Eigen::ArrayXXd o = m.oil.array();
    const Eigen::ArrayXXd tc = t - t.mean();
    const Eigen::ArrayXXd oc = o - o.mean();
    total += (tc * oc).sum() / std::sqrt(tc.square().sum() * oc.square().sum());
  }
  CHECK(std::abs(total / 100.0) <= 0.1);
}

TEST_CASE("map files round-trip byte-for-byte") {
  auto m = generate_candidates(1, terrain_noise_params(), oil_noise_params(), 42).front();
  m.difficulty = Difficulty::hard;
  const std::string text = serialize_map(m);
  const GameMap back = map_from_json(nlohmann::json::parse(text));
  CHECK(serialize_map(back) == text);
  CHECK(back.oil == m.oil);
  CHECK(back.terrain == m.terrain);
  CHECK(back.difficulty == Difficulty::hard);
  CHECK(back.terrain_params == m.terrain_params);
  // Key order is part of the format.
  CHECK(text.rfind("{\"id\":", 0) == 0);
  CHECK(text.find("\"difficulty\"") < text.find("\"terrain\""));
  CHECK(text.find("\"oil\"") < text.find("\"provenance\""));
}

TEST_CASE("map files reject malformed grids") {
  auto j = nlohmann::json::parse(serialize_map(generate_candidates(1, terrain_noise_params(), oil_noise_params(), 1)[0]));
  auto bad = j;
  bad["terrain"][3][4] = 2;
  CHECK_THROWS_AS(map_from_json(bad), MapError);
  bad = j;
  bad["oil"][0][0] = 101.0;
  CHECK_THROWS_AS(map_from_json(bad), MapError);
  bad = j;
  bad["oil"].erase(0);
  CHECK_THROWS_AS(map_from_json(bad), MapError);
}
