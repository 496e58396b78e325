#pragma once

#include "oilgame/grid.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace oilgame {

/// Terrain cells hold kDesert or kForest.
using TerrainGrid = Grid<std::uint8_t>;
inline constexpr std::uint8_t kDesert = 0;
inline constexpr std::uint8_t kForest = 1;
using OilGrid = RealGrid;

enum class Difficulty { easy, medium, hard, unlabeled };

std::string_view to_string(Difficulty d);
Difficulty difficulty_from_string(std::string_view s);

struct NoiseParams {
  int octaves = 1;
  double persistence = 1.0;
  double lacunarity = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const NoiseParams&) const = default;
};

/// Rough, high-frequency terrain profile.
inline NoiseParams terrain_noise_params(std::uint64_t seed = 0) { return {9, 0.5, 20.0, seed}; }
/// Smooth single-octave oil profile.
inline NoiseParams oil_noise_params(std::uint64_t seed = 0) { return {1, 1.0, 1.0, seed}; }

/// Wavelength (cells) of the first octave.
inline constexpr double kBaseWavelength = 24.0;

struct GameMap {
  std::string id;
  TerrainGrid terrain;
  OilGrid oil;
  Difficulty difficulty = Difficulty::unlabeled;
  NoiseParams terrain_params;
  NoiseParams oil_params;

  bool is_forest(const CellCoord& c) const { return at(terrain, c) == kForest; }
  double yield(const CellCoord& c) const { return at(oil, c); }
};

class MapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Multi-octave gradient noise sampled at cell centres, mapped to [0, 1].
///
/// Octave k contributes amplitude persistence^k at frequency
/// lacunarity^k / kBaseWavelength cycles per cell. Frequencies are clamped
/// to one cycle per cell. The octave sum is divided by its theoretical bound
/// and shifted to [0, 1], so a fixed params value always gives the same grid.
Eigen::MatrixXd perlin_grid(const NoiseParams& params, int width, int height);

/// Forest where noise >= threshold, desert otherwise.
TerrainGrid make_terrain(const NoiseParams& params, double threshold = 0.5);

/// Noise rescaled so min -> floor and max -> 100.
OilGrid make_oil(const NoiseParams& params, double floor = 0.0);

struct CandidateOptions {
  double terrain_threshold = 0.5;
  double oil_floor = 0.0;
};

std::vector<GameMap> generate_candidates(int n, const NoiseParams& terrain_params, const NoiseParams& oil_params,
                                         std::uint64_t master_seed, const CandidateOptions& options = {});

double forest_fraction(const TerrainGrid& terrain);

// Map file format. Key order and number formatting are fixed so the
// output is byte-stable.
nlohmann::ordered_json to_json(const NoiseParams& p);
NoiseParams noise_params_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const GameMap& map);
GameMap map_from_json(const nlohmann::json& j);
std::string serialize_map(const GameMap& map);
void save_map(const GameMap& map, const std::string& path);
GameMap load_map(const std::string& path);

}  // namespace oilgame
