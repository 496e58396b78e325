#pragma once

#include "oilgame/dss.hpp"
#include "oilgame/engine.hpp"
#include "oilgame/mapgen.hpp"
#include "oilgame/rng.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace oilgame {

enum class ConditionLabel { control, LB, LU, HB, HU };

std::string_view to_string(ConditionLabel label);
ConditionLabel label_from_string(std::string_view s);

inline constexpr double kLowCost = 20.0;
inline constexpr double kHighCost = 40.0;

struct Condition {
  ConditionLabel label = ConditionLabel::control;
  double forest_cost = kLowCost;
  std::optional<Bias> bias;  // treatment only

  bool treatment() const noexcept { return label != ConditionLabel::control; }
  CostSchedule cost() const { return CostSchedule{forest_cost}; }
  bool operator==(const Condition&) const = default;
};

/// LB/HB: biased DSS at low/high cost; LU/HU: unbiased. Control carries no DSS.
Condition condition_for(ConditionLabel label, double control_cost = kLowCost);

struct ExperimentalUnit {
  int id = 0;
  Condition condition;
  std::array<Difficulty, 3> map_order{};
  std::optional<std::array<Accuracy, 3>> accuracy_order;
  int completions = 0;

  /// Stable human-readable key, e.g. "LB:easy-hard-medium:high-low-medium".
  std::string key() const;
  bool operator==(const ExperimentalUnit&) const = default;
};

/// Control: 6 map orders. Treatment labels: 6 map orders x 6 accuracy orders.
/// Order is lexicographic over permutations; ids count from `first_id`.
std::vector<ExperimentalUnit> enumerate_units(ConditionLabel label, double control_cost = kLowCost, int first_id = 0);

/// Uniform index among the entries with the smallest load.
std::size_t pick_least_filled(std::span<const int> loads, Rng& rng);

/// Least-filled-first assignment with reservations.
///
/// Load of a unit = completions + open reservations. A reservation is
/// released on completion (which increments the count), on abandonment, or
/// when it is older than the timeout.
class UnitPool {
 public:
  explicit UnitPool(std::vector<ExperimentalUnit> units, std::int64_t reservation_timeout_ms = 30 * 60 * 1000);

  /// choose() followed by reserve().
  const ExperimentalUnit& assign(const std::string& session_id, Rng& rng, std::int64_t now_ms);
  /// Least-filled unit id without reserving it.
  int choose(Rng& rng) const;
  int min_load() const;
  /// Reservation for a known unit (log replay).
  void reserve(const std::string& session_id, int unit_id, std::int64_t now_ms);
  void complete(const std::string& session_id);
  void abandon(const std::string& session_id);
  /// Restarts the inactivity clock of a reservation.
  void touch(const std::string& session_id, std::int64_t now_ms);
  /// Sessions whose reservation is older than the timeout.
  std::vector<std::string> stale(std::int64_t now_ms) const;
  bool holds(const std::string& session_id) const;
  /// Releases stale reservations; returns the affected sessions.
  std::vector<std::string> expire(std::int64_t now_ms);

  std::vector<ExperimentalUnit> snapshot() const;
  const ExperimentalUnit& unit(int id) const;
  int open_reservations() const;
  nlohmann::ordered_json fill_status() const;

 private:
  struct Reservation {
    int unit_id;
    std::int64_t since_ms;
  };
  int load(std::size_t i) const;

  mutable std::mutex mutex_;
  std::vector<ExperimentalUnit> units_;
  std::vector<int> reserved_;
  std::map<std::string, Reservation> reservations_;
  std::int64_t timeout_ms_;
};

// ---------------------------------------------------------------------------
// Map-difficulty calibration

struct LuckerParams {
  int window = 3;
  double quantile = 0.9;
};

struct LuckerVerdict {
  std::string session_id;
  bool is_lucker = false;
  std::optional<int> trigger_round;
};

/// Linear-interpolation quantile of all 1024 oil yields.
double oil_quantile(const GameMap& map, double q);

/// Lucker iff one of the first `window` plays yields at least the map's
/// `quantile` oil quantile.
LuckerVerdict detect_lucker(std::span<const PlayEvent> trace, const GameMap& map, const LuckerParams& params = {});

struct MapCalibrationStats {
  std::string map_id;
  int traces = 0;
  double lucker_rate = 0.0;
  double mean_score = 0.0;
};

struct CalibrationResult {
  GameMap easy;
  GameMap medium;
  GameMap hard;
  std::vector<MapCalibrationStats> stats;  // candidate order
};

/// Two lowest-lucker maps (ties: lower mean score first) become hard (lower
/// mean score) and medium; easy is drawn from the top tercile by mean score
/// of the remaining maps scoring at least as well as medium. If no remaining
/// map qualifies, the three chosen maps are relabelled by mean score.
CalibrationResult calibrate_difficulty(std::span<const GameMap> candidates,
                                       const std::map<std::string, std::vector<std::vector<PlayEvent>>>& traces,
                                       Rng& rng, const LuckerParams& params = {});

// ---------------------------------------------------------------------------
// Experiment definition file

struct ExperimentDefinition {
  std::string name = "experiment";
  std::vector<ConditionLabel> labels{ConditionLabel::control, ConditionLabel::LB, ConditionLabel::LU,
                                     ConditionLabel::HB, ConditionLabel::HU};
  int quota_per_unit = 3;
  double control_cost = kLowCost;
  LuckerParams lucker;
  std::uint64_t master_seed = 1;
  std::int64_t reservation_timeout_ms = 30 * 60 * 1000;
  TrainOptions dss;
  int sequence_length = kDefaultSequenceLength;
  std::shared_ptr<const GameMap> easy;
  std::shared_ptr<const GameMap> medium;
  std::shared_ptr<const GameMap> hard;

  const GameMap& map_for(Difficulty d) const;
  std::shared_ptr<const GameMap> map_ptr(Difficulty d) const;
  std::vector<ExperimentalUnit> all_units() const;
};

/// Maps are embedded in full ("maps": {"easy": {...}, ...}).
nlohmann::ordered_json to_json(const ExperimentDefinition& def);
/// Accepts embedded maps or file paths (relative to `base_dir`).
ExperimentDefinition definition_from_json(const nlohmann::json& j, const std::string& base_dir = ".");
ExperimentDefinition load_definition(const std::string& path);

}  // namespace oilgame
