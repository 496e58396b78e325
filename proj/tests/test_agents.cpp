#include "oilgame/agents.hpp"
#include "oilgame/http_client.hpp"
#include "oilgame/http_server.hpp"

#include <doctest.h>

using namespace oilgame;

namespace {

ExperimentDefinition definition(std::vector<ConditionLabel> labels, int quota = 50) {
  static const auto maps = generate_candidates(3, terrain_noise_params(), oil_noise_params(), 77);
  ExperimentDefinition def;
  def.labels = std::move(labels);
  def.quota_per_unit = quota;
  def.master_seed = 5;
  def.easy = std::make_shared<const GameMap>(maps[0]);
  def.medium = std::make_shared<const GameMap>(maps[1]);
  def.hard = std::make_shared<const GameMap>(maps[2]);
  return def;
}

struct Sim {
  std::shared_ptr<ManualClock> clock = std::make_shared<ManualClock>(1'700'000'000'000);
  std::shared_ptr<EventLog> log = std::make_shared<EventLog>();
  Platform platform;
  InProcessClient client;
  explicit Sim(std::vector<ConditionLabel> labels)
      : platform(definition(std::move(labels)), log, {clock, seeded_tokens(1), "admin"}), client(platform, clock) {}
};

std::vector<CellCoord> play_direct(const AgentPolicy& policy, const std::shared_ptr<const GameMap>& map,
                                   std::uint64_t seed) {
  auto player = make_player(policy, seed);
  GameState state(map, {});
  while (!state.finished()) state.click(player->choose(observe(state)), std::nullopt, state.round() + 1);
  return state.clicked();
}

}  // namespace

TEST_CASE("policy parameters are validated") {
  CHECK_THROWS(make_player({PolicyKind::epsilon_explorer, 1.5}, 1));
  CHECK_THROWS(make_player({PolicyKind::greedy_local, 0.1, 0}, 1));
  CHECK(policy_from_string("dss_follower") == PolicyKind::dss_follower);
  CHECK_THROWS(policy_from_string("oracle"));
}

TEST_CASE("random agent plays 75 legal clicks") {
  Sim sim({ConditionLabel::control});
  const auto s = play_session(sim.client, {PolicyKind::random}, 3);
  REQUIRE(s.games.size() == 3);
  const auto& def = sim.platform.definition();
  for (std::size_t g = 0; g < 3; ++g) {
    CHECK(s.games[g].size() == 25);
    std::shared_ptr<const GameMap> map;
    for (auto d : {Difficulty::easy, Difficulty::medium, Difficulty::hard})
      if (def.map_for(d).id == s.map_ids[g]) map = def.map_ptr(d);
    REQUIRE(map);
    CHECK(replay(map, CostSchedule{def.control_cost}, s.games[g]).events() == s.games[g]);
  }
  CHECK(sim.platform.session_status(s.session_id)["status"] == "complete");
}

TEST_CASE("dss follower clicks every recommendation") {
  Sim sim({ConditionLabel::HU});
  const auto s = play_session(sim.client, {PolicyKind::dss_follower}, 4);
  for (const auto& game : s.games)
    for (const auto& e : game) {
      REQUIRE(e.recommended.has_value());
      CHECK(euclidean(*e.recommended, e.clicked) == 0.0);
    }
}

TEST_CASE("dss follower matches in-process DSS-alone play") {
  Sim sim({ConditionLabel::LB, ConditionLabel::HU});
  const auto& def = sim.platform.definition();
  for (int i = 0; i < 6; ++i) {
    const auto s = play_session(sim.client, {PolicyKind::dss_follower}, 100 + i);
    const auto unit = sim.platform.units()[sim.platform.session_snapshot(s.session_id)["unit_id"].get<std::size_t>()];
    for (std::size_t g = 0; g < 3; ++g) {
      const auto map = def.map_ptr(unit.map_order[g]);
      const auto cost = unit.condition.cost();
      const auto model = sim.platform.models().get(*map, *unit.condition.bias, cost, (*unit.accuracy_order)[g]);
      const auto alone = dss_alone_play(model, map, cost);
      CHECK(alone.score() == s.games[g].back().cumulative_score);
      CHECK(alone.clicked().size() == 25);
    }
  }
}

TEST_CASE("epsilon explorer with epsilon 0 is greedy_local") {
  const auto map = std::make_shared<const GameMap>(definition({}).map_for(Difficulty::medium));
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    CHECK(play_direct({PolicyKind::epsilon_explorer, 0.0}, map, seed) == play_direct({PolicyKind::greedy_local}, map, seed));
  CHECK(play_direct({PolicyKind::epsilon_explorer, 0.5}, map, 1) != play_direct({PolicyKind::greedy_local}, map, 1));

  Sim a({ConditionLabel::LU}), b({ConditionLabel::LU});
  const auto sa = play_session(a.client, {PolicyKind::epsilon_explorer, 0.0}, 9);
  const auto sb = play_session(b.client, {PolicyKind::greedy_local}, 9);
  CHECK(sa.games == sb.games);
}

TEST_CASE("greedy_local beats random on the easy map") {
  const auto def = definition({});
  const auto map = def.map_ptr(Difficulty::easy);
  double greedy = 0.0, random = 0.0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    for (const auto& c : play_direct({PolicyKind::greedy_local}, map, seed)) greedy += map->yield(c) - CostSchedule{}.cost_of(*map, c);
    for (const auto& c : play_direct({PolicyKind::random}, map, seed)) random += map->yield(c) - CostSchedule{}.cost_of(*map, c);
  }
  CHECK(greedy > random);
}

TEST_CASE("cohorts are deterministic") {
  const std::vector<AgentPolicy> mix{{PolicyKind::random}, {PolicyKind::dss_follower}, {PolicyKind::epsilon_explorer, 0.3}};
  Sim a({ConditionLabel::control, ConditionLabel::LB}), b({ConditionLabel::control, ConditionLabel::LB});
  const auto ca = cohort(a.client, mix, 6, 42);
  const auto cb = cohort(b.client, mix, 6, 42);
  CHECK(ca.size() == 6);
  CHECK(ca[4].policy == PolicyKind::dss_follower);
  const auto ra = a.log->records(), rb = b.log->records();
  REQUIRE(ra.size() == rb.size());
  for (std::size_t i = 0; i < ra.size(); ++i) CHECK(ra[i].dump() == rb[i].dump());

  Sim c({ConditionLabel::control});
  CHECK(cohort(c.client, mix, 1, 1).size() == 1);
  CHECK_THROWS(cohort(c.client, mix, 0, 1));
}

TEST_CASE("calibration run labels three distinct maps") {
  const auto candidates = generate_candidates(10, terrain_noise_params(), oil_noise_params(), 3);
  const std::vector<AgentPolicy> mix{{PolicyKind::random}, {PolicyKind::greedy_local}, {PolicyKind::epsilon_explorer, 0.2}};
  const auto traces = calibration_traces(candidates, mix, 120, 8);
  CHECK(traces.size() == 10);
  for (const auto& [id, t] : traces) CHECK(t.size() == 12);

  CalibrationRun run;
  run.seed = 11;
  const auto r = run_calibration(run);
  CHECK(r.easy.id != r.medium.id);
  CHECK(r.medium.id != r.hard.id);
  CHECK(r.easy.id != r.hard.id);
  CHECK(r.stats.size() == 10);
  CHECK(run_calibration(run).easy.id == r.easy.id);
}

TEST_CASE("agents drive the HTTP API") {
  auto log = std::make_shared<EventLog>();
  Platform platform(definition({ConditionLabel::LU}), log, {std::make_shared<SystemClock>(), random_tokens(), "admin"});
  HttpServer server(platform);
  const int port = server.bind("127.0.0.1", 0);
  server.start();
  HttpClient client("http://127.0.0.1:" + std::to_string(port));
  const auto s = play_session(client, {PolicyKind::dss_follower}, 5);
  CHECK(s.games.size() == 3);
  CHECK(s.acceptance_score.has_value());
  CHECK(EventLog::parse(client.export_events("admin")).size() == log->size());
  CHECK_THROWS_AS(client.export_events("nope"), ServiceError);
  try {
    client.get_game("missing", 0);
    FAIL("expected error");
  } catch (const ServiceError& e) {
    CHECK(e.code() == ErrorCode::unknown_session);
  }
  server.stop();
}
