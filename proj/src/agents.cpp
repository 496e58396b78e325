#include "oilgame/agents.hpp"

#include "oilgame/event_log.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace oilgame {

std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::random: return "random";
    case PolicyKind::greedy_local: return "greedy_local";
    case PolicyKind::dss_follower: return "dss_follower";
    case PolicyKind::epsilon_explorer: return "epsilon_explorer";
  }
  return "random";
}

PolicyKind policy_from_string(std::string_view s) {
  for (auto k : {PolicyKind::random, PolicyKind::greedy_local, PolicyKind::dss_follower, PolicyKind::epsilon_explorer})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown policy '" + std::string(s) + "'");
}

void AgentPolicy::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0, 1]");
  if (radius < 1) throw std::invalid_argument("radius must be at least 1");
  if (exploration_rounds < 0) throw std::invalid_argument("exploration rounds must be non-negative");
}

void Observation::record(const CellCoord& c, double net_score) {
  drilled.push_back(c);
  net.push_back(net_score);
  clicked[static_cast<std::size_t>(c.index())] = true;
}

Observation observe(const GameState& state, std::optional<CellCoord> recommendation) {
  Observation obs;
  obs.terrain = state.map().terrain;
  obs.forest_cost = state.cost().forest_cost;
  for (const auto& e : state.events()) obs.record(e.clicked, e.play_score);
  obs.recommendation = recommendation;
  return obs;
}

Observation observe(const Json& view) {
  Observation obs;
  const auto& rows = view.at("terrain");
  for (int y = 0; y < kBoardSize; ++y)
    for (int x = 0; x < kBoardSize; ++x) obs.terrain(y, x) = rows.at(y).at(x).get<std::uint8_t>();
  obs.forest_cost = view.at("forest_cost").get<double>();
  for (const auto& c : view.at("clicks"))
    obs.record(cell_from_json(c), c.at("yield").get<double>() - c.at("cost_charged").get<double>());
  if (view.contains("recommendation")) obs.recommendation = cell_from_json(view["recommendation"]);
  return obs;
}

namespace {

CellCoord random_unclicked(const Observation& obs, Rng& rng) {
  const auto free = static_cast<std::uint64_t>(kCellCount - obs.round());
  auto k = rng.below(free);
  for (int i = 0; i < kCellCount; ++i) {
    if (obs.clicked[static_cast<std::size_t>(i)]) continue;
    if (k-- == 0) return CellCoord::from_index(i);
  }
  throw std::logic_error("board is full");
}

class RandomPlayer final : public Player {
 public:
  explicit RandomPlayer(std::uint64_t seed) : rng_(seed) {}
  CellCoord choose(const Observation& obs) override { return random_unclicked(obs, rng_); }

 private:
  Rng rng_;
};

/// Samples a coarse lattice first, then drills next to the best cell found
/// so far, nearest ring first and desert before forest when forest costs.
class GreedyLocalPlayer final : public Player {
 public:
  GreedyLocalPlayer(const AgentPolicy& p, std::uint64_t seed) : policy_(p), rng_(seed) {}

  CellCoord choose(const Observation& obs) override {
    if (obs.round() < policy_.exploration_rounds || obs.drilled.empty()) {
      std::vector<CellCoord> lattice;
      for (int y = 4; y < kBoardSize; y += 8)
        for (int x = 4; x < kBoardSize; x += 8)
          if (!obs.is_clicked({x, y})) lattice.push_back({x, y});
      if (!lattice.empty()) return lattice[rng_.below(lattice.size())];
      return random_unclicked(obs, rng_);
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < obs.net.size(); ++i)
      if (obs.net[i] > obs.net[best]) best = i;
    const CellCoord centre = obs.drilled[best];

    for (int r = policy_.radius; r < kBoardSize; ++r) {
      std::vector<CellCoord> options;
      double nearest = std::numeric_limits<double>::infinity();
      bool desert_seen = false;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const CellCoord c{centre.x + dx, centre.y + dy};
          if (!c.in_bounds() || obs.is_clicked(c)) continue;
          const bool desert = obs.forest_cost <= 0.0 || obs.terrain(c.y, c.x) == kDesert;
          const double d = euclidean(c, centre);
          // Desert cells first, then distance.
          if (desert && !desert_seen) {
            desert_seen = true;
            nearest = std::numeric_limits<double>::infinity();
            options.clear();
          } else if (!desert && desert_seen) {
            continue;
          }
          if (d < nearest - 1e-12) {
            nearest = d;
            options.assign(1, c);
          } else if (d <= nearest + 1e-12) {
            options.push_back(c);
          }
        }
      }
      if (!options.empty()) return options[rng_.below(options.size())];
    }
    return random_unclicked(obs, rng_);
  }

 private:
  AgentPolicy policy_;
  Rng rng_;
};

class DssFollower final : public Player {
 public:
  explicit DssFollower(std::uint64_t seed) : rng_(seed) {}
  CellCoord choose(const Observation& obs) override {
    if (obs.recommendation && obs.recommendation->in_bounds() && !obs.is_clicked(*obs.recommendation))
      return *obs.recommendation;
    return random_unclicked(obs, rng_);
  }

 private:
  Rng rng_;
};

/// Greedy play with probability 1 - epsilon, otherwise a random cell. The
/// coin has its own stream, so epsilon = 0 reproduces greedy_local exactly.
class EpsilonExplorer final : public Player {
 public:
  EpsilonExplorer(const AgentPolicy& p, std::uint64_t seed)
      : epsilon_(p.epsilon), greedy_(p, seed), coin_(derive_seed(seed, {hash_tag("coin")})) {}
  CellCoord choose(const Observation& obs) override {
    if (coin_.uniform() < epsilon_) return random_unclicked(obs, coin_);
    return greedy_.choose(obs);
  }

 private:
  double epsilon_;
  GreedyLocalPlayer greedy_;
  Rng coin_;
};

}  // namespace

std::unique_ptr<Player> make_player(const AgentPolicy& policy, std::uint64_t seed) {
  policy.validate();
  switch (policy.kind) {
    case PolicyKind::random: return std::make_unique<RandomPlayer>(seed);
    case PolicyKind::greedy_local: return std::make_unique<GreedyLocalPlayer>(policy, seed);
    case PolicyKind::dss_follower: return std::make_unique<DssFollower>(seed);
    case PolicyKind::epsilon_explorer: return std::make_unique<EpsilonExplorer>(policy, seed);
  }
  throw std::invalid_argument("bad policy kind");
}

// ---------------------------------------------------------------------------

double AgentSession::total_score() const {
  double s = 0.0;
  for (const auto& g : games)
    if (!g.empty()) s += g.back().cumulative_score;
  return s;
}

AgentSession play_session(PlatformClient& client, const AgentPolicy& policy, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {hash_tag("session")}));
  AgentSession out;
  out.policy = policy.kind;

  const auto created = client.create_session(Json{{"consent", true}});
  out.session_id = created.at("session_id").get<std::string>();
  out.condition = label_from_string(created.at("condition").get<std::string>());
  const auto& sid = out.session_id;

  client.wait(3000 + static_cast<std::int64_t>(rng.below(7000)));
  if (rng.uniform() < 0.8) {
    static constexpr std::array genders{"male", "female", "other", "undisclosed"};
    const int lo = 20 + 5 * static_cast<int>(rng.below(9));
    client.submit_demographics(sid, Json{{"gender", genders[rng.below(genders.size())]},
                                         {"age_bracket", std::to_string(lo) + "-" + std::to_string(lo + 4)}});
  }
  client.wait(15'000 + static_cast<std::int64_t>(rng.below(45'000)));
  client.complete_tutorial(sid);

  for (int g = 0; g < kGamesPerSession; ++g) {
    client.wait(1000 + static_cast<std::int64_t>(rng.below(2000)));
    const auto view = client.get_game(sid, g);
    out.map_ids[static_cast<std::size_t>(g)] = view.at("map_id").get<std::string>();
    auto obs = observe(view);
    auto player = make_player(policy, derive_seed(seed, {hash_tag("game"), static_cast<std::uint64_t>(g)}));
    std::vector<PlayEvent> events;
    while (obs.round() < kRoundsPerGame) {
      client.wait(700 + static_cast<std::int64_t>(rng.below(2300)));
      const CellCoord c = player->choose(obs);
      const auto resp = client.submit_click(sid, g, Json{{"x", c.x}, {"y", c.y}});
      PlayEvent e;
      e.session_id = sid;
      e.game_index = g;
      e.round = resp.at("round").get<int>();
      e.timestamp_ms = resp.at("ts").get<std::int64_t>();
      e.recommended = obs.recommendation;
      e.clicked = c;
      e.yield = resp.at("yield").get<double>();
      e.cost_charged = resp.at("cost_charged").get<double>();
      e.play_score = resp.at("play_score").get<double>();
      e.cumulative_score = resp.at("cumulative_score").get<double>();
      events.push_back(e);
      obs.record(c, e.play_score);
      obs.recommendation.reset();
      if (resp.contains("recommendation")) obs.recommendation = cell_from_json(resp["recommendation"]);
    }
    out.games.push_back(std::move(events));
  }

  std::size_t easiest = 0;
  for (std::size_t g = 1; g < out.games.size(); ++g)
    if (out.games[g].back().cumulative_score > out.games[easiest].back().cumulative_score) easiest = g;
  std::vector<int> items(kSurveyItems);
  for (auto& v : items) v = static_cast<int>(rng.below(kSurveyItemMax + 1));
  client.wait(20'000 + static_cast<std::int64_t>(rng.below(40'000)));
  const auto done = client.submit_survey(sid, Json{{"acceptance_items", items}, {"easiest_map", out.map_ids[easiest]}});
  if (!done.at("acceptance_score").is_null()) out.acceptance_score = done["acceptance_score"].get<int>();
  return out;
}

std::vector<AgentSession> cohort(PlatformClient& client, const std::vector<AgentPolicy>& policy_mix, int n_sessions,
                                 std::uint64_t seed) {
  if (n_sessions < 1) throw std::invalid_argument("cohort needs at least one session");
  if (policy_mix.empty()) throw std::invalid_argument("empty policy mix");
  std::vector<AgentSession> out;
  out.reserve(static_cast<std::size_t>(n_sessions));
  for (int i = 0; i < n_sessions; ++i)
    out.push_back(play_session(client, policy_mix[static_cast<std::size_t>(i) % policy_mix.size()],
                               derive_seed(seed, {static_cast<std::uint64_t>(i)})));
  return out;
}

// ---------------------------------------------------------------------------

std::map<std::string, std::vector<std::vector<PlayEvent>>> calibration_traces(
    const std::vector<GameMap>& candidates, const std::vector<AgentPolicy>& policy_mix, int n_sessions,
    std::uint64_t seed, const CostSchedule& cost) {
  if (candidates.empty()) throw std::invalid_argument("no candidate maps");
  if (policy_mix.empty()) throw std::invalid_argument("empty policy mix");
  std::vector<std::shared_ptr<const GameMap>> maps;
  for (const auto& m : candidates) maps.push_back(std::make_shared<const GameMap>(m));
  std::vector<int> loads(maps.size(), 0);
  std::map<std::string, std::vector<std::vector<PlayEvent>>> traces;
  Rng assign(derive_seed(seed, {hash_tag("assign")}));
  for (int i = 0; i < n_sessions; ++i) {
    const auto m = pick_least_filled(loads, assign);
    ++loads[m];
    const std::string sid = "cal-" + std::to_string(i);
    const auto& policy = policy_mix[static_cast<std::size_t>(i) % policy_mix.size()];
    auto player = make_player(policy, derive_seed(seed, {static_cast<std::uint64_t>(i)}));
    GameState state(maps[m], cost);
    while (!state.finished())
      state.click(player->choose(observe(state)), std::nullopt, (state.round() + 1) * 1000, sid, 0);
    traces[maps[m]->id].push_back(state.events());
  }
  return traces;
}

CalibrationResult run_calibration(const CalibrationRun& run) {
  const auto candidates = generate_candidates(run.n_candidates, terrain_noise_params(), oil_noise_params(),
                                              derive_seed(run.seed, {hash_tag("candidates")}), run.candidate_options);
  const auto traces =
      calibration_traces(candidates, run.policy_mix, run.n_sessions, derive_seed(run.seed, {hash_tag("traces")}));
  Rng rng(derive_seed(run.seed, {hash_tag("labels")}));
  return calibrate_difficulty(candidates, traces, rng, run.lucker);
}

ExperimentDefinition calibrated_definition(const CalibrationResult& calibration, std::uint64_t master_seed) {
  ExperimentDefinition def;
  def.master_seed = master_seed;
  auto slot = [](GameMap m, Difficulty d) {
    m.difficulty = d;
    return std::make_shared<const GameMap>(std::move(m));
  };
  def.easy = slot(calibration.easy, Difficulty::easy);
  def.medium = slot(calibration.medium, Difficulty::medium);
  def.hard = slot(calibration.hard, Difficulty::hard);
  return def;
}

std::vector<AgentSession> simulate_cohort(const ExperimentDefinition& def, std::shared_ptr<EventLog> log,
                                          const std::vector<AgentPolicy>& policy_mix, int n_sessions,
                                          std::uint64_t seed, const std::string& admin_token) {
  auto clock = std::make_shared<ManualClock>(kSimulationEpochMs);
  Platform platform(def, std::move(log), {clock, seeded_tokens(seed), admin_token});
  InProcessClient client(platform, clock);
  return cohort(client, policy_mix, n_sessions, seed);
}

}  // namespace oilgame
