#pragma once

#include "oilgame/engine.hpp"
#include "oilgame/experiment.hpp"
#include "oilgame/mapgen.hpp"
#include "oilgame/platform.hpp"
#include "oilgame/rng.hpp"

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace oilgame {

enum class PolicyKind { random, greedy_local, dss_follower, epsilon_explorer };

std::string_view to_string(PolicyKind k);
PolicyKind policy_from_string(std::string_view s);

struct AgentPolicy {
  PolicyKind kind = PolicyKind::random;
  double epsilon = 0.1;
  int radius = 1;
  int exploration_rounds = 5;

  void validate() const;
};

/// What a player can see before a click.
struct Observation {
  TerrainGrid terrain = TerrainGrid::Zero();
  double forest_cost = 0.0;
  std::vector<CellCoord> drilled;
  std::vector<double> net;  // yield minus cost, per drilled cell
  std::vector<bool> clicked = std::vector<bool>(kCellCount, false);
  std::optional<CellCoord> recommendation;

  int round() const noexcept { return static_cast<int>(drilled.size()); }
  bool is_clicked(const CellCoord& c) const { return clicked[static_cast<std::size_t>(c.index())]; }
  void record(const CellCoord& c, double net_score);
};

Observation observe(const GameState& state, std::optional<CellCoord> recommendation = std::nullopt);
/// From a GET game response.
Observation observe(const Json& game_view);

class Player {
 public:
  virtual ~Player() = default;
  virtual CellCoord choose(const Observation& obs) = 0;
};

/// One player per game. Deterministic given the seed.
std::unique_ptr<Player> make_player(const AgentPolicy& policy, std::uint64_t seed);

// ---------------------------------------------------------------------------

/// The request surface agents drive; implemented in-process and over HTTP.
class PlatformClient {
 public:
  virtual ~PlatformClient() = default;
  virtual Json create_session(const Json& body) = 0;
  virtual Json submit_demographics(const std::string& sid, const Json& body) = 0;
  virtual Json complete_tutorial(const std::string& sid) = 0;
  virtual Json get_game(const std::string& sid, int g) = 0;
  virtual Json submit_click(const std::string& sid, int g, const Json& body) = 0;
  virtual Json submit_survey(const std::string& sid, const Json& body) = 0;
  /// Simulated think time. Only meaningful with a manual clock.
  virtual void wait(std::int64_t /*ms*/) {}
};

class InProcessClient final : public PlatformClient {
 public:
  explicit InProcessClient(Platform& platform, std::shared_ptr<ManualClock> clock = nullptr)
      : platform_(platform), clock_(std::move(clock)) {}
  Json create_session(const Json& body) override { return platform_.create_session(body); }
  Json submit_demographics(const std::string& sid, const Json& body) override {
    return platform_.submit_demographics(sid, body);
  }
  Json complete_tutorial(const std::string& sid) override { return platform_.complete_tutorial(sid); }
  Json get_game(const std::string& sid, int g) override { return platform_.get_game(sid, g); }
  Json submit_click(const std::string& sid, int g, const Json& body) override {
    return platform_.submit_click(sid, g, body);
  }
  Json submit_survey(const std::string& sid, const Json& body) override { return platform_.submit_survey(sid, body); }
  void wait(std::int64_t ms) override {
    if (clock_) clock_->advance(ms);
  }

 private:
  Platform& platform_;
  std::shared_ptr<ManualClock> clock_;
};

struct AgentSession {
  std::string session_id;
  ConditionLabel condition = ConditionLabel::control;
  PolicyKind policy = PolicyKind::random;
  std::array<std::string, kGamesPerSession> map_ids;
  std::vector<std::vector<PlayEvent>> games;
  std::optional<int> acceptance_score;

  double total_score() const;
};

/// Runs consent, demographics, tutorial, three games and the survey.
AgentSession play_session(PlatformClient& client, const AgentPolicy& policy, std::uint64_t seed);

/// Sessions run one after another; session i uses policy_mix[i % size] and
/// seed derive_seed(seed, {i}).
std::vector<AgentSession> cohort(PlatformClient& client, const std::vector<AgentPolicy>& policy_mix, int n_sessions,
                                 std::uint64_t seed);

// ---------------------------------------------------------------------------
// Map calibration

/// Single-game traces on candidate maps: each session is assigned to the
/// least-played map, then plays 25 rounds directly on the engine.
std::map<std::string, std::vector<std::vector<PlayEvent>>> calibration_traces(
    const std::vector<GameMap>& candidates, const std::vector<AgentPolicy>& policy_mix, int n_sessions,
    std::uint64_t seed, const CostSchedule& cost = {});

struct CalibrationRun {
  int n_candidates = 10;
  int n_sessions = 120;
  std::uint64_t seed = 1;
  std::vector<AgentPolicy> policy_mix{{PolicyKind::random}, {PolicyKind::greedy_local}, {PolicyKind::epsilon_explorer, 0.2}};
  LuckerParams lucker;
  CandidateOptions candidate_options;
};

/// Candidate generation, agent traces and difficulty labelling in one call.
CalibrationResult run_calibration(const CalibrationRun& run);

/// Experiment over the calibrated triple with all five conditions.
ExperimentDefinition calibrated_definition(const CalibrationResult& calibration, std::uint64_t master_seed);

/// Fixed start of simulated time (2023-11-14T22:13:20Z).
inline constexpr std::int64_t kSimulationEpochMs = 1'700'000'000'000;

/// Runs a cohort against an in-process platform writing to `log`, with a
/// manual clock and seeded session tokens. Same inputs, same log.
std::vector<AgentSession> simulate_cohort(const ExperimentDefinition& def, std::shared_ptr<EventLog> log,
                                          const std::vector<AgentPolicy>& policy_mix, int n_sessions,
                                          std::uint64_t seed, const std::string& admin_token = "admin");

}  // namespace oilgame
