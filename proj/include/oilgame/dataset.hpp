#pragma once

#include "oilgame/dss.hpp"
#include "oilgame/engine.hpp"
#include "oilgame/event_log.hpp"
#include "oilgame/experiment.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace oilgame {

// Analysis-side view of an event log. Ingest rebuilds sessions from the raw
// records only; nothing is taken from a running service.

struct GameData {
  int game_index = 0;
  std::string map_id;
  Difficulty difficulty = Difficulty::unlabeled;
  std::optional<Accuracy> accuracy;
  CostSchedule cost;
  std::shared_ptr<const GameMap> map;
  std::int64_t started_ms = 0;
  std::vector<PlayEvent> plays;
  std::optional<double> logged_score;  // from the game_complete record

  bool complete() const noexcept { return plays.size() == static_cast<std::size_t>(kRoundsPerGame); }
  /// Recomputed from the plays, never from logged totals.
  double score() const noexcept { return plays.empty() ? 0.0 : plays.back().cumulative_score; }
  /// Server time from the game view to the last click.
  std::optional<std::int64_t> duration_ms() const;
};

enum class SessionOutcome { in_progress, complete, abandoned };

struct SessionData {
  std::string session_id;
  int unit_id = 0;
  Condition condition;
  std::array<Difficulty, kGamesPerSession> map_order{};
  std::optional<std::array<Accuracy, kGamesPerSession>> accuracy_order;
  std::int64_t created_ms = 0;
  std::optional<Json> demographics;
  std::optional<std::int64_t> tutorial_ms;
  std::vector<GameData> games;  // in play order
  std::optional<std::vector<int>> acceptance_items;
  std::optional<int> acceptance_score;
  std::optional<std::string> easiest_map;
  SessionOutcome outcome = SessionOutcome::in_progress;

  bool complete() const noexcept { return outcome == SessionOutcome::complete; }
  double total_score() const;
};

struct Dataset {
  ExperimentDefinition definition;
  std::vector<SessionData> sessions;  // log order
  std::size_t skipped_records = 0;    // records of sessions outside a filtered export
};

/// Accepts a raw service log or an admin export (export_header first).
Dataset dataset_from_records(const std::vector<Json>& records);
Dataset load_dataset(const std::string& path);

struct ReplayIssue {
  std::string session_id;
  int game_index = 0;
  std::string what;
};

struct ReplayCheck {
  std::size_t games = 0;
  std::size_t plays = 0;
  std::vector<ReplayIssue> issues;

  bool ok() const noexcept { return issues.empty(); }
};

/// Folds every game's clicks through the engine and compares yields, costs,
/// scores and logged game totals. With `recommendations`, the served
/// recommendations are regenerated from the experiment's model seeds too.
ReplayCheck verify_replay(const Dataset& data, bool recommendations = true);

/// One row per play.
struct PlayRow {
  const SessionData* session = nullptr;
  const GameData* game = nullptr;
  int position = 1;  // 1..3
  int round = 0;
  double play_score = 0.0;
  std::optional<double> reliance;  // treatment only
  std::optional<double> step;      // distance to the previous click of the game
  std::int64_t ts = 0;
};

std::vector<PlayRow> play_table(const Dataset& data);

/// 75 per-play scores of a complete session in play order.
std::vector<double> learning_curve(const SessionData& s);

}  // namespace oilgame
