#pragma once

#include "oilgame/engine.hpp"
#include "oilgame/grid.hpp"
#include "oilgame/lasso.hpp"
#include "oilgame/mapgen.hpp"
#include "oilgame/rng.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace oilgame {

enum class Accuracy { high, medium, low };
enum class Bias { unbiased, biased };

std::string_view to_string(Accuracy a);
std::string_view to_string(Bias b);
Accuracy accuracy_from_string(std::string_view s);
Bias bias_from_string(std::string_view s);

struct DrillSample {
  CellCoord cell;
  double target = 0.0;
};

/// Bivariate polynomial features of the cell coordinates scaled to [0, 1],
/// standardized with training-set statistics.
///
/// With a terrain attached, the degree-0 slot holds the forest indicator of
/// the cell instead of the constant 1 (which centring would zero anyway).
class FeatureBasis {
 public:
  explicit FeatureBasis(int degree = 5, std::optional<TerrainGrid> terrain = std::nullopt);

  int degree() const noexcept { return degree_; }
  int feature_count() const noexcept { return (degree_ + 1) * (degree_ + 2) / 2; }

  /// Unstandardized features: slot 0 as above, then u^i v^j, 0 < i + j <= degree.
  Eigen::RowVectorXd monomials(const CellCoord& c) const;

  /// Fits per-feature mean and standard deviation; constant features get scale 1.
  void fit(std::span<const CellCoord> cells);
  Eigen::MatrixXd design(std::span<const CellCoord> cells) const;
  Eigen::RowVectorXd standardized(const CellCoord& c) const;

  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const Eigen::VectorXd& scale() const noexcept { return scale_; }
  void set_statistics(Eigen::VectorXd mean, Eigen::VectorXd scale);
  const std::optional<TerrainGrid>& terrain() const noexcept { return terrain_; }

 private:
  int degree_;
  std::optional<TerrainGrid> terrain_;
  Eigen::VectorXd mean_;
  Eigen::VectorXd scale_;
};

enum class KnotSelection { aic, aicc };

struct TrainOptions {
  int n_drills = 20;
  int degree = 5;
  bool terrain_feature = true;
  KnotSelection selection = KnotSelection::aicc;
  std::optional<double> lambda;  // bypasses knot selection
};

struct DssModel {
  std::string map_id;
  FeatureBasis basis;
  Eigen::VectorXd coefficients;  // in standardized feature space
  double intercept = 0.0;
  double lambda = 0.0;
  Accuracy accuracy = Accuracy::high;
  Bias bias = Bias::unbiased;
  CostSchedule cost;
  std::vector<DrillSample> training_samples;
  std::vector<CellCoord> rec_sequence;
  std::uint64_t train_seed = 0;
  std::uint64_t sequence_seed = 0;
  std::uint64_t fallback_seed = 0;
  RealGrid predictions = RealGrid::Zero();

  double predict(const CellCoord& c) const;
};

/// Training target for one drill: yield, minus the cell cost when unbiased.
double drill_target(const GameMap& map, const CellCoord& c, Bias bias, const CostSchedule& cost);

DssModel train(const GameMap& map, Bias bias, const CostSchedule& cost, std::uint64_t seed,
               const TrainOptions& options = {});

/// Fits directly from samples; used by train() and by synthetic-field tests.
DssModel fit_samples(std::vector<DrillSample> samples, const TrainOptions& options,
                     std::optional<TerrainGrid> terrain = std::nullopt);

RealGrid predict_all(const DssModel& model);

/// Uniform draw among non-excluded cells whose prediction is in the top 20%
/// of all 1024 predictions; best remaining cell when none is eligible.
CellCoord base_recommendation(const RealGrid& predictions, const std::function<bool(const CellCoord&)>& excluded,
                              Rng& rng);

/// Smallest prediction that is still inside the top 20% (nearest rank).
double top_quantile_threshold(const RealGrid& predictions, double top_fraction = 0.2);

struct NoiseMixture {
  double small_sigma = std::sqrt(3.0);
  double large_sigma = std::sqrt(20.0);
  double p_small = 0.8;
};

/// Mixture for a degraded accuracy level; high accuracy has none.
std::optional<NoiseMixture> mixture_for(Accuracy accuracy);

struct NoiseDraw {
  double dx = 0.0;
  double dy = 0.0;
  bool small_branch = true;
};

NoiseDraw sample_noise(const NoiseMixture& mixture, Rng& rng);
CellCoord apply_noise(const CellCoord& cell, const NoiseDraw& draw);
CellCoord degrade(const CellCoord& cell, Accuracy accuracy, Rng& rng);
CellCoord degrade(const CellCoord& cell, const NoiseMixture& mixture, Rng& rng);

inline constexpr int kDefaultSequenceLength = 30;

/// Base picks are drawn first (distinct cells), then degraded in order, so
/// one seed yields the same base picks at every accuracy level.
std::vector<CellCoord> precompute_sequence(const DssModel& model, Accuracy accuracy, int length, Rng& rng);

/// First sequence entry at or after `cursor` that is not clicked; advances
/// the cursor past it. Empty when the sequence is exhausted.
std::optional<CellCoord> next_from_sequence(std::span<const CellCoord> sequence, std::size_t& cursor,
                                            const std::function<bool(const CellCoord&)>& clicked);

/// Serve-time recommendation source for one game.
class RecommendationStream {
 public:
  explicit RecommendationStream(std::shared_ptr<const DssModel> model);

  CellCoord next(const GameState& state);
  std::size_t cursor() const noexcept { return cursor_; }
  int fallback_draws() const noexcept { return fallback_draws_; }

 private:
  std::shared_ptr<const DssModel> model_;
  std::size_t cursor_ = 0;
  Rng fallback_rng_;
  int fallback_draws_ = 0;
};

/// 25 rounds clicking each served recommendation.
GameState dss_alone_play(std::shared_ptr<const DssModel> model, std::shared_ptr<const GameMap> map,
                         const CostSchedule& cost);

/// Trained, sequenced model for a (map, bias, cost, accuracy) cell of the design.
std::shared_ptr<const DssModel> build_model(const GameMap& map, Bias bias, const CostSchedule& cost, Accuracy accuracy,
                                            std::uint64_t master_seed, const TrainOptions& options = {},
                                            int sequence_length = kDefaultSequenceLength);

/// Thread-safe cache of build_model results.
class ModelBank {
 public:
  explicit ModelBank(std::uint64_t master_seed, TrainOptions options = {}, int sequence_length = kDefaultSequenceLength)
      : master_seed_(master_seed), options_(options), sequence_length_(sequence_length) {}

  std::shared_ptr<const DssModel> get(const GameMap& map, Bias bias, const CostSchedule& cost, Accuracy accuracy);

 private:
  std::uint64_t master_seed_;
  TrainOptions options_;
  int sequence_length_;
  std::mutex mutex_;
  std::map<std::tuple<std::string, int, double, int>, std::shared_ptr<const DssModel>> cache_;
};

nlohmann::ordered_json to_json(const DssModel& model);
/// The map supplies the terrain feature; its id must match the dump.
DssModel model_from_json(const nlohmann::json& j, const GameMap& map);

}  // namespace oilgame
