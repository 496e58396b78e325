#include "oilgame/mapgen.hpp"

#include "oilgame/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace oilgame {

namespace {

// Largest magnitude of 2D gradient noise with unit-length gradients.
constexpr double kPerlinBound = 0.70710678118654752;

class GradientNoise {
 public:
  explicit GradientNoise(std::uint64_t seed) {
    std::iota(perm_.begin(), perm_.begin() + 256, 0);
    Rng rng(seed);
    for (int i = 255; i > 0; --i) {
      const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(perm_[i], perm_[j]);
    }
    std::copy(perm_.begin(), perm_.begin() + 256, perm_.begin() + 256);
  }

  double operator()(double x, double y) const {
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    const int xi = static_cast<int>(static_cast<long long>(fx) & 255);
    const int yi = static_cast<int>(static_cast<long long>(fy) & 255);
    const double tx = x - fx;
    const double ty = y - fy;

    const double n00 = dot(hash(xi, yi), tx, ty);
    const double n10 = dot(hash(xi + 1, yi), tx - 1.0, ty);
    const double n01 = dot(hash(xi, yi + 1), tx, ty - 1.0);
    const double n11 = dot(hash(xi + 1, yi + 1), tx - 1.0, ty - 1.0);

    const double u = fade(tx);
    const double v = fade(ty);
    const double nx0 = n00 + u * (n10 - n00);
    const double nx1 = n01 + u * (n11 - n01);
    return nx0 + v * (nx1 - nx0);
  }

 private:
  static double fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

  int hash(int x, int y) const { return perm_[(perm_[x & 255] + (y & 255)) & 511] & 7; }

  static double dot(int g, double x, double y) {
    static constexpr double s = 0.70710678118654752;
    static constexpr std::array<std::array<double, 2>, 8> grads{{
        {1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}, {0.0, -1.0}, {s, s}, {-s, s}, {s, -s}, {-s, -s},
    }};
    return grads[g][0] * x + grads[g][1] * y;
  }

  std::array<int, 512> perm_{};
};

void require_grid(const nlohmann::json& rows, const char* what) {
  if (!rows.is_array() || rows.size() != kBoardSize) throw MapError(std::string(what) + ": expected 32 rows");
  for (const auto& row : rows)
    if (!row.is_array() || row.size() != kBoardSize) throw MapError(std::string(what) + ": expected 32 columns");
}

}  // namespace

std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::easy: return "easy";
    case Difficulty::medium: return "medium";
    case Difficulty::hard: return "hard";
    case Difficulty::unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

Difficulty difficulty_from_string(std::string_view s) {
  if (s == "easy") return Difficulty::easy;
  if (s == "medium") return Difficulty::medium;
  if (s == "hard") return Difficulty::hard;
  if (s == "unlabeled") return Difficulty::unlabeled;
  throw MapError("unknown difficulty '" + std::string(s) + "'");
}

void NoiseParams::validate() const {
  if (octaves < 1) throw MapError("octaves must be >= 1");
  if (!(persistence > 0.0)) throw MapError("persistence must be > 0");
  if (!(lacunarity > 0.0)) throw MapError("lacunarity must be > 0");
}

Eigen::MatrixXd perlin_grid(const NoiseParams& params, int width, int height) {
  params.validate();
  if (width < 1 || height < 1) throw MapError("grid dimensions must be positive");

  const GradientNoise noise(params.seed);
  Rng offsets(derive_seed(params.seed, {0x6f6374}));

  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(height, width);
  double amplitude = 1.0;
  double amplitude_sum = 0.0;
  double frequency = 1.0 / kBaseWavelength;
  for (int k = 0; k < params.octaves; ++k) {
    const double f = std::min(frequency, 1.0);
    const double ox = offsets.uniform() * 256.0;
    const double oy = offsets.uniform() * 256.0;
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x) sum(y, x) += amplitude * noise((x + 0.5) * f + ox, (y + 0.5) * f + oy);
    amplitude_sum += amplitude;
    amplitude *= params.persistence;
    frequency *= params.lacunarity;
  }

  const double scale = 0.5 / (kPerlinBound * amplitude_sum);
  return (sum.array() * scale + 0.5).cwiseMax(0.0).cwiseMin(1.0).matrix();
}

TerrainGrid make_terrain(const NoiseParams& params, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw MapError("terrain threshold must lie in (0, 1)");
  const Eigen::MatrixXd n = perlin_grid(params, kBoardSize, kBoardSize);
  TerrainGrid t;
  for (int y = 0; y < kBoardSize; ++y)
    for (int x = 0; x < kBoardSize; ++x) t(y, x) = n(y, x) >= threshold ? kForest : kDesert;
  return t;
}

OilGrid make_oil(const NoiseParams& params, double floor) {
  if (!(floor >= 0.0 && floor < 100.0)) throw MapError("oil floor must lie in [0, 100)");
  const Eigen::MatrixXd n = perlin_grid(params, kBoardSize, kBoardSize);
  const double lo = n.minCoeff();
  const double hi = n.maxCoeff();
  if (!(hi > lo)) throw MapError("degenerate oil noise (constant grid); regenerate with a new seed");
  OilGrid oil = ((n.array() - lo) / (hi - lo) * (100.0 - floor) + floor).matrix();
  // Pin the extremes exactly; the affine map can be off by an ulp.
  Eigen::Index r, c;
  oil.maxCoeff(&r, &c);
  oil(r, c) = 100.0;
  oil.minCoeff(&r, &c);
  oil(r, c) = floor;
  return oil;
}

double forest_fraction(const TerrainGrid& terrain) {
  return terrain.cast<double>().sum() / static_cast<double>(kCellCount);
}

std::vector<GameMap> generate_candidates(int n, const NoiseParams& terrain_params, const NoiseParams& oil_params,
                                         std::uint64_t master_seed, const CandidateOptions& options) {
  if (n < 1) throw MapError("candidate count must be >= 1");
  terrain_params.validate();
  oil_params.validate();

  std::vector<GameMap> maps;
  maps.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    GameMap m;
    m.id = "map-" + std::to_string(i);
    // Terrain and oil draw from disjoint seed streams. Redraw until both
    // terrain kinds are present and the oil field is non-constant.
    for (std::uint64_t attempt = 0;; ++attempt) {
      m.terrain_params = terrain_params;
      m.terrain_params.seed = derive_seed(master_seed, {static_cast<std::uint64_t>(i), 1, attempt});
      m.terrain = make_terrain(m.terrain_params, options.terrain_threshold);
      const double ff = forest_fraction(m.terrain);
      if (ff > 0.0 && ff < 1.0) break;
    }
    for (std::uint64_t attempt = 0;; ++attempt) {
      m.oil_params = oil_params;
      m.oil_params.seed = derive_seed(master_seed, {static_cast<std::uint64_t>(i), 2, attempt});
      try {
        m.oil = make_oil(m.oil_params, options.oil_floor);
        break;
      } catch (const MapError&) {
      }
    }
    maps.push_back(std::move(m));
  }
  return maps;
}

nlohmann::ordered_json to_json(const NoiseParams& p) {
  nlohmann::ordered_json j;
  j["octaves"] = p.octaves;
  j["persistence"] = p.persistence;
  j["lacunarity"] = p.lacunarity;
  j["seed"] = p.seed;
  return j;
}

NoiseParams noise_params_from_json(const nlohmann::json& j) {
  NoiseParams p;
  p.octaves = j.at("octaves").get<int>();
  p.persistence = j.at("persistence").get<double>();
  p.lacunarity = j.at("lacunarity").get<double>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.validate();
  return p;
}

nlohmann::ordered_json to_json(const GameMap& map) {
  nlohmann::ordered_json j;
  j["id"] = map.id;
  j["difficulty"] = std::string(to_string(map.difficulty));
  auto terrain = nlohmann::ordered_json::array();
  auto oil = nlohmann::ordered_json::array();
  for (int y = 0; y < kBoardSize; ++y) {
    auto trow = nlohmann::ordered_json::array();
    auto orow = nlohmann::ordered_json::array();
    for (int x = 0; x < kBoardSize; ++x) {
      trow.push_back(static_cast<int>(map.terrain(y, x)));
      orow.push_back(map.oil(y, x));
    }
    terrain.push_back(std::move(trow));
    oil.push_back(std::move(orow));
  }
  j["terrain"] = std::move(terrain);
  j["oil"] = std::move(oil);
  j["provenance"] = {{"terrain", to_json(map.terrain_params)}, {"oil", to_json(map.oil_params)}};
  return j;
}

GameMap map_from_json(const nlohmann::json& j) {
  GameMap m;
  m.id = j.at("id").get<std::string>();
  m.difficulty = difficulty_from_string(j.at("difficulty").get<std::string>());
  const auto& terrain = j.at("terrain");
  const auto& oil = j.at("oil");
  require_grid(terrain, "terrain");
  require_grid(oil, "oil");
  for (int y = 0; y < kBoardSize; ++y) {
    for (int x = 0; x < kBoardSize; ++x) {
      const int t = terrain[y][x].get<int>();
      if (t != 0 && t != 1) throw MapError("terrain values must be 0 or 1");
      m.terrain(y, x) = static_cast<std::uint8_t>(t);
      const double v = oil[y][x].get<double>();
      if (!(v >= 0.0 && v <= 100.0)) throw MapError("oil yields must lie in [0, 100]");
      m.oil(y, x) = v;
    }
  }
  const auto& prov = j.at("provenance");
  m.terrain_params = noise_params_from_json(prov.at("terrain"));
  m.oil_params = noise_params_from_json(prov.at("oil"));
  return m;
}

std::string serialize_map(const GameMap& map) { return to_json(map).dump() + "\n"; }

void save_map(const GameMap& map, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MapError("cannot write " + path);
  out << serialize_map(map);
}

GameMap load_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MapError("cannot read " + path);
  return map_from_json(nlohmann::json::parse(in));
}

}  // namespace oilgame
