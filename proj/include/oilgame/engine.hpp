#pragma once

#include "oilgame/grid.hpp"
#include "oilgame/mapgen.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace oilgame {

inline constexpr int kRoundsPerGame = 25;
inline constexpr int kGamesPerSession = 3;

struct CostSchedule {
  double forest_cost = 20.0;
  double desert_cost = 0.0;

  double cost_of(const GameMap& map, const CellCoord& c) const { return map.is_forest(c) ? forest_cost : desert_cost; }
  bool operator==(const CostSchedule&) const = default;
};

struct PlayEvent {
  std::string session_id;
  int game_index = 0;
  int round = 0;
  std::int64_t timestamp_ms = 0;
  std::optional<CellCoord> recommended;
  CellCoord clicked;
  double yield = 0.0;
  double cost_charged = 0.0;
  double play_score = 0.0;
  double cumulative_score = 0.0;

  bool operator==(const PlayEvent&) const = default;
};

enum class GameErrorCode { duplicate_click, game_over, out_of_bounds, bad_timestamp };

std::string_view to_string(GameErrorCode code);

class GameError : public std::runtime_error {
 public:
  GameError(GameErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  GameErrorCode code() const noexcept { return code_; }

 private:
  GameErrorCode code_;
};

/// One 25-round game on a fixed map. Owned by a single session.
class GameState {
 public:
  GameState(std::shared_ptr<const GameMap> map, CostSchedule cost);

  /// Drills `cell`. Throws GameError on illegal moves; the state is unchanged then.
  PlayEvent click(const CellCoord& cell, std::optional<CellCoord> shown_recommendation = std::nullopt,
                  std::int64_t timestamp_ms = 0, const std::string& session_id = {}, int game_index = 0);

  double score() const noexcept { return income_ - total_cost_; }
  double income() const noexcept { return income_; }
  double total_cost() const noexcept { return total_cost_; }
  int round() const noexcept { return static_cast<int>(clicked_.size()); }
  int rounds_remaining() const noexcept { return kRoundsPerGame - round(); }
  bool finished() const noexcept { return round() >= kRoundsPerGame; }
  bool is_clicked(const CellCoord& c) const { return c.in_bounds() && clicked_mask_[c.index()]; }

  const GameMap& map() const noexcept { return *map_; }
  std::shared_ptr<const GameMap> map_ptr() const noexcept { return map_; }
  const CostSchedule& cost() const noexcept { return cost_; }
  const std::vector<CellCoord>& clicked() const noexcept { return clicked_; }
  const std::vector<std::optional<CellCoord>>& recommendations_shown() const noexcept { return recommendations_; }
  const std::vector<PlayEvent>& events() const noexcept { return events_; }

 private:
  std::shared_ptr<const GameMap> map_;
  CostSchedule cost_;
  std::vector<CellCoord> clicked_;
  std::vector<bool> clicked_mask_;
  std::vector<std::optional<CellCoord>> recommendations_;
  std::vector<PlayEvent> events_;
  double income_ = 0.0;
  double total_cost_ = 0.0;
};

GameState new_game(std::shared_ptr<const GameMap> map, CostSchedule cost);

/// Folds recorded events through click(); throws if any event is illegal.
GameState replay(std::shared_ptr<const GameMap> map, CostSchedule cost, std::span<const PlayEvent> events);

}  // namespace oilgame
