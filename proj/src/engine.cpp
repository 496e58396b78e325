#include "oilgame/engine.hpp"

namespace oilgame {

std::string_view to_string(GameErrorCode code) {
  switch (code) {
    case GameErrorCode::duplicate_click: return "duplicate_click";
    case GameErrorCode::game_over: return "game_over";
    case GameErrorCode::out_of_bounds: return "out_of_bounds";
    case GameErrorCode::bad_timestamp: return "bad_timestamp";
  }
  return "unknown";
}

GameState::GameState(std::shared_ptr<const GameMap> map, CostSchedule cost)
    : map_(std::move(map)), cost_(cost), clicked_mask_(kCellCount, false) {
  if (!map_) throw std::invalid_argument("GameState requires a map");
  if (cost_.forest_cost < 0.0 || cost_.desert_cost != 0.0) throw std::invalid_argument("invalid cost schedule");
  clicked_.reserve(kRoundsPerGame);
  events_.reserve(kRoundsPerGame);
}

PlayEvent GameState::click(const CellCoord& cell, std::optional<CellCoord> shown_recommendation,
                           std::int64_t timestamp_ms, const std::string& session_id, int game_index) {
  if (finished()) throw GameError(GameErrorCode::game_over, "game over: all 25 rounds played");
  if (!cell.in_bounds()) throw GameError(GameErrorCode::out_of_bounds, "cell " + to_string(cell) + " is off the board");
  if (clicked_mask_[cell.index()]) throw GameError(GameErrorCode::duplicate_click, "cell " + to_string(cell) + " already drilled");
  if (!events_.empty() && timestamp_ms <= events_.back().timestamp_ms)
    throw GameError(GameErrorCode::bad_timestamp, "timestamps must increase within a game");

  PlayEvent ev;
  ev.session_id = session_id;
  ev.game_index = game_index;
  ev.round = round();
  ev.timestamp_ms = timestamp_ms;
  ev.recommended = shown_recommendation;
  ev.clicked = cell;
  ev.yield = map_->yield(cell);
  ev.cost_charged = cost_.cost_of(*map_, cell);
  ev.play_score = ev.yield - ev.cost_charged;

  income_ += ev.yield;
  total_cost_ += ev.cost_charged;
  ev.cumulative_score = score();

  clicked_mask_[cell.index()] = true;
  clicked_.push_back(cell);
  recommendations_.push_back(shown_recommendation);
  events_.push_back(ev);
  return ev;
}

GameState new_game(std::shared_ptr<const GameMap> map, CostSchedule cost) { return GameState(std::move(map), cost); }

GameState replay(std::shared_ptr<const GameMap> map, CostSchedule cost, std::span<const PlayEvent> events) {
  GameState state(std::move(map), cost);
  for (const auto& ev : events) state.click(ev.clicked, ev.recommended, ev.timestamp_ms, ev.session_id, ev.game_index);
  return state;
}

}  // namespace oilgame
