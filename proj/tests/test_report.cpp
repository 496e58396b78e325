#include "oilgame/agents.hpp"
#include "oilgame/report.hpp"

#include <doctest.h>

#include <cmath>

using namespace oilgame;

namespace {

struct Run {
  std::shared_ptr<ManualClock> clock = std::make_shared<ManualClock>(1'700'000'000'000);
  std::shared_ptr<EventLog> log = std::make_shared<EventLog>();
  std::unique_ptr<Platform> platform;
  std::vector<AgentSession> sessions;

  Run(std::vector<ConditionLabel> labels, const std::vector<AgentPolicy>& mix, int n, std::uint64_t seed = 3) {
    static const auto maps = generate_candidates(3, terrain_noise_params(), oil_noise_params(), 77);
    ExperimentDefinition def;
    def.labels = std::move(labels);
    def.quota_per_unit = 50;
    def.master_seed = 5;
    def.easy = std::make_shared<const GameMap>(maps[0]);
    def.medium = std::make_shared<const GameMap>(maps[1]);
    def.hard = std::make_shared<const GameMap>(maps[2]);
    platform = std::make_unique<Platform>(def, log, PlatformOptions{clock, seeded_tokens(seed), "admin"});
    InProcessClient client(*platform, clock);
    sessions = cohort(client, mix, n, seed);
  }
};

const std::vector<AgentPolicy> kMix{{PolicyKind::random}, {PolicyKind::greedy_local}, {PolicyKind::dss_follower}};

}  // namespace

TEST_CASE("ingest and replay") {
  Run run({ConditionLabel::control, ConditionLabel::LB, ConditionLabel::HU}, kMix, 9);
  const auto data = dataset_from_records(run.log->records());
  REQUIRE(data.sessions.size() == 9);
  for (std::size_t i = 0; i < data.sessions.size(); ++i) {
    const auto& s = data.sessions[i];
    CHECK(s.session_id == run.sessions[i].session_id);
    CHECK(s.complete());
    REQUIRE(s.games.size() == 3);
    for (const auto& g : s.games) {
      CHECK(g.complete());
      CHECK(g.logged_score == g.score());
      CHECK(g.duration_ms() > 0);
    }
    CHECK(s.total_score() == run.sessions[i].total_score());
    CHECK(learning_curve(s).size() == 75);
  }
  const auto check = verify_replay(data);
  CHECK(check.ok());
  CHECK(check.games == 27);
  CHECK(check.plays == 27 * 25);

  const auto rows = play_table(data);
  CHECK(rows.size() == 27 * 25);
  for (const auto& r : rows) {
    CHECK(r.reliance.has_value() == r.session->condition.treatment());
    CHECK(r.step.has_value() == (r.round > 0));
    CHECK(r.position == r.game->game_index + 1);
  }

  SUBCASE("export ingests the same sessions") {
    const auto text = run.platform->export_events({}, "admin");
    const auto from_export = dataset_from_records(EventLog::parse(text));
    REQUIRE(from_export.sessions.size() == data.sessions.size());
    for (std::size_t i = 0; i < data.sessions.size(); ++i)
      CHECK(from_export.sessions[i].total_score() == data.sessions[i].total_score());
  }
  SUBCASE("filtered export skips nothing it cannot place") {
    ExportFilter f;
    f.condition = ConditionLabel::LB;
    const auto part = dataset_from_records(EventLog::parse(run.platform->export_events(f, "admin")));
    const auto lb = std::count_if(data.sessions.begin(), data.sessions.end(),
                                  [](const SessionData& s) { return s.condition.label == ConditionLabel::LB; });
    CHECK(part.sessions.size() == static_cast<std::size_t>(lb));
    CHECK(part.skipped_records == 0);
    CHECK(verify_replay(part).ok());
  }
  SUBCASE("tampering is detected") {
    auto records = run.log->records();
    for (auto& r : records) {
      if (r["type"] == "click") {
        r["yield"] = r["yield"].get<double>() + 1.0;
        break;
      }
    }
    const auto bad = verify_replay(dataset_from_records(records));
    CHECK_FALSE(bad.ok());
    CHECK(bad.issues.size() == 1);
  }
  SUBCASE("changed recommendation is detected") {
    auto records = run.log->records();
    for (auto& r : records) {
      if (r["type"] == "click" && !r["recommended"].is_null()) {
        r["recommended"]["x"] = (r["recommended"]["x"].get<int>() + 1) % 32;
        break;
      }
    }
    CHECK_FALSE(verify_replay(dataset_from_records(records)).ok());
    CHECK(verify_replay(dataset_from_records(records), false).ok());
  }
  CHECK_THROWS(dataset_from_records({}));
  CHECK_THROWS(dataset_from_records({Json{{"type", "click"}}}));
}

TEST_CASE("reports") {
  Run run({ConditionLabel::control, ConditionLabel::LB, ConditionLabel::HU}, kMix, 12);
  const auto data = dataset_from_records(run.log->records());

  SUBCASE("scores") {
    const auto rep = make_report(data, ReportKind::scores);
    REQUIRE(rep.status == ReportStatus::ok);
    const auto* t = rep.table("scores");
    REQUIRE(t);
    CHECK(t->rows.size() == 3 * 3);
    // Game counts add up to all games.
    int games = 0;
    for (const auto& r : t->rows) games += std::stoi(r[4]);
    CHECK(games == 36);
    const auto* alone = rep.table("dss_alone");
    REQUIRE(alone);
    CHECK(alone->rows.size() == 3 * 2 * 3);
    CHECK(rep.table("accuracy_tests"));
    CHECK(rep.table("bias_tests"));
    CHECK(rep.table("dss_vs_control"));
  }
  SUBCASE("per-session medians differ from pooled only in the median columns") {
    ReportOptions o;
    o.medians = MedianMode::per_session;
    const auto a = make_report(data, ReportKind::scores);
    const auto b = make_report(data, ReportKind::scores, o);
    const auto& ta = *a.table("scores");
    const auto& tb = *b.table("scores");
    for (std::size_t i = 0; i < ta.rows.size(); ++i) {
      CHECK(ta.rows[i][7] == tb.rows[i][7]);
      CHECK(ta.rows[i][9] == tb.rows[i][9]);
    }
  }
  SUBCASE("every report renders deterministically") {
    for (auto k : all_reports()) {
      const auto once = render_text(make_report(data, k));
      CHECK(once == render_text(make_report(data, k)));
      CHECK(once.rfind("# " + std::string(to_string(k)), 0) == 0);
    }
  }
  SUBCASE("time") {
    const auto rep = make_report(data, ReportKind::time);
    CHECK(rep.table("time_by_condition")->rows.size() == 3);
    CHECK(rep.table("game_times")->rows.size() == 36);
  }
  SUBCASE("explore sums to 100 per group") {
    const auto rep = make_report(data, ReportKind::explore);
    const auto& t = *rep.table("explore");
    CHECK(t.rows.size() == 4 * 3);
    for (std::size_t g = 0; g < t.rows.size(); g += 3) {
      double sum = 0.0;
      for (std::size_t r = g; r < g + 3; ++r)
        for (std::size_t c = 2; c < 5; ++c) sum += std::stod(t.rows[r][c]);
      CHECK(sum == doctest::Approx(100.0).epsilon(1e-5));
    }
  }
  SUBCASE("clusters cover every complete session") {
    const auto rep = make_report(data, ReportKind::clusters);
    CHECK(rep.table("cluster_members")->rows.size() == 12);
  }
  SUBCASE("survey") {
    const auto rep = make_report(data, ReportKind::survey);
    int total = 0;
    for (const auto& r : rep.table("easiest_map")->rows) total += std::stoi(r[1]);
    CHECK(total == 12);
  }
  SUBCASE("badplays compares treatments with control") {
    const auto rep = make_report(data, ReportKind::badplays);
    const auto& t = *rep.table("badplays");
    CHECK(t.rows.size() == 3 * (1 + 2 * 3));
  }
  SUBCASE("ordering") {
    const auto rep = make_report(data, ReportKind::ordering);
    CHECK(rep.table("ordering")->rows.size() == 9);
    CHECK(rep.table("ordering_tests")->rows.size() == 4);
  }
  SUBCASE("empty filter") {
    ReportOptions o;
    o.condition = ConditionLabel::HB;
    const auto rep = make_report(data, ReportKind::scores, o);
    CHECK(rep.status == ReportStatus::empty);
    CHECK(render_text(rep).rfind("EMPTY REPORT", 0) == 0);
  }
}

TEST_CASE("control-only reliance is not applicable") {
  Run run({ConditionLabel::control}, {{PolicyKind::random}}, 2);
  const auto data = dataset_from_records(run.log->records());
  const auto rep = make_report(data, ReportKind::reliance);
  CHECK(rep.status == ReportStatus::not_applicable);
  CHECK(render_text(rep).rfind("NOT APPLICABLE", 0) == 0);
  const auto scores = make_report(data, ReportKind::scores);
  CHECK(scores.table("scores")->rows.size() == 3);
  CHECK_FALSE(scores.table("dss_alone"));
}

TEST_CASE("formatting") {
  CHECK(fmt_num(1.0) == "1.000000");
  CHECK(fmt_num(-0.0000001) == "0.000000");
  CHECK(fmt_num(std::nan("")) == "NA");
  Table t{"t", {"a", "b"}};
  t.add({"x,y", "say \"hi\""});
  CHECK(render_csv(t) == "a,b\n\"x,y\",\"say \"\"hi\"\"\"\n");
  CHECK_THROWS(t.add({"only one"}));
  CHECK(report_from_string("badplays") == ReportKind::badplays);
  CHECK_THROWS(report_from_string("nope"));
}

TEST_CASE("same-policy cohorts explore alike") {
  auto matrix = [](std::uint64_t seed) {
    Run run({ConditionLabel::control}, {{PolicyKind::greedy_local}}, 40, seed);
    const auto data = dataset_from_records(run.log->records());
    std::vector<ExploreInput> in;
    for (const auto& s : data.sessions)
      for (const auto& g : s.games) {
        ExploreInput e{{}, {}, g.map, g.cost};
        for (const auto& p : g.plays) {
          e.clicks.push_back(p.clicked);
          e.play_scores.push_back(p.play_score);
        }
        in.push_back(std::move(e));
      }
    return explore_matrix(in);
  };
  const auto a = matrix(1), b = matrix(2);
  CHECK(explore_rmse(a, b) < 0.02);
  // Greedy play exploits: most consecutive clicks are near each other.
  CHECK(a.row(0).sum() > 50.0);
}

TEST_CASE("mixed cohort centroids improve over time") {
  Run run({ConditionLabel::control, ConditionLabel::LU},
          {{PolicyKind::random}, {PolicyKind::greedy_local}, {PolicyKind::epsilon_explorer, 0.2}}, 30, 8);
  const auto data = dataset_from_records(run.log->records());
  std::vector<std::vector<double>> curves;
  for (const auto& s : data.sessions) curves.push_back(learning_curve(s));
  const auto c = cluster_curves(curves);
  REQUIRE(c.count() >= 1);
  // Size-weighted average slope of the centroids within each game is non-negative.
  double slope = 0.0;
  for (int k = 0; k < c.count(); ++k) {
    const auto& v = c.centroids[static_cast<std::size_t>(k)];
    for (std::size_t g = 0; g + 25 <= v.size(); g += 25) {
      const double first = mean(std::span(v).subspan(g, 5)), last = mean(std::span(v).subspan(g + 20, 5));
      slope += c.sizes[static_cast<std::size_t>(k)] * (last - first);
    }
  }
  CHECK(slope >= 0.0);
}
