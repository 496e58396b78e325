#include "oilgame/dataset.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace oilgame {

std::optional<std::int64_t> GameData::duration_ms() const {
  if (!complete()) return std::nullopt;
  return plays.back().timestamp_ms - started_ms;
}

double SessionData::total_score() const {
  double total = 0.0;
  for (const auto& g : games) total += g.score();
  return total;
}

namespace {

template <typename T, typename F>
std::optional<T> optional_field(const Json& r, const char* key, F convert) {
  if (!r.contains(key) || r[key].is_null()) return std::nullopt;
  return convert(r[key]);
}

}  // namespace

Dataset dataset_from_records(const std::vector<Json>& records) {
  if (records.empty()) throw std::invalid_argument("empty event log");
  const auto& head = records.front();
  const auto type = head.value("type", std::string{});
  if (type != "experiment_started" && type != "export_header")
    throw std::invalid_argument("log must start with experiment_started or export_header");

  Dataset data;
  data.definition = definition_from_json(head.at("experiment"));
  const auto& def = data.definition;
  std::map<std::string, std::size_t> index;

  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto rtype = r.at("type").get<std::string>();
    const auto sid = r.at("session_id").get<std::string>();
    const auto ts = r.at("ts").get<std::int64_t>();

    if (rtype == "session_created") {
      if (index.count(sid)) throw std::runtime_error("duplicate session " + sid);
      SessionData s;
      s.session_id = sid;
      s.unit_id = r.at("unit_id").get<int>();
      s.condition = condition_for(label_from_string(r.at("condition").get<std::string>()), def.control_cost);
      s.condition.forest_cost = r.at("forest_cost").get<double>();
      const auto& order = r.at("map_order");
      for (std::size_t g = 0; g < s.map_order.size(); ++g) {
        // map_order lists map ids; the slot follows from the definition.
        const auto id = order.at(g).get<std::string>();
        bool found = false;
        for (auto d : {Difficulty::easy, Difficulty::medium, Difficulty::hard}) {
          if (def.map_for(d).id == id) {
            s.map_order[g] = d;
            found = true;
          }
        }
        if (!found) throw std::runtime_error("unknown map id " + id);
      }
      if (!r.at("accuracy_order").is_null()) {
        std::array<Accuracy, kGamesPerSession> acc{};
        for (std::size_t g = 0; g < acc.size(); ++g)
          acc[g] = accuracy_from_string(r["accuracy_order"].at(g).get<std::string>());
        s.accuracy_order = acc;
      }
      s.created_ms = ts;
      index.emplace(sid, data.sessions.size());
      data.sessions.push_back(std::move(s));
      continue;
    }

    auto it = index.find(sid);
    if (it == index.end()) {
      ++data.skipped_records;
      continue;
    }
    auto& s = data.sessions[it->second];

    if (rtype == "demographics") {
      s.demographics = r.at("demographics");
    } else if (rtype == "tutorial_complete") {
      s.tutorial_ms = r.at("tutorial_ms").get<std::int64_t>();
    } else if (rtype == "game_started") {
      GameData g;
      g.game_index = r.at("game_index").get<int>();
      if (g.game_index != static_cast<int>(s.games.size())) throw std::runtime_error("games out of order in " + sid);
      g.difficulty = s.map_order[static_cast<std::size_t>(g.game_index)];
      g.map = def.map_ptr(g.difficulty);
      g.map_id = g.map->id;
      if (r.at("map_id").get<std::string>() != g.map_id) throw std::runtime_error("map id mismatch in " + sid);
      if (s.accuracy_order) g.accuracy = (*s.accuracy_order)[static_cast<std::size_t>(g.game_index)];
      g.cost = CostSchedule{r.at("forest_cost").get<double>()};
      g.started_ms = ts;
      s.games.push_back(std::move(g));
    } else if (rtype == "click") {
      const int gi = r.at("game_index").get<int>();
      if (gi < 0 || gi >= static_cast<int>(s.games.size())) throw std::runtime_error("click outside a started game");
      auto e = play_event_from_json(r);
      e.session_id = sid;
      s.games[static_cast<std::size_t>(gi)].plays.push_back(std::move(e));
    } else if (rtype == "game_complete") {
      const int gi = r.at("game_index").get<int>();
      s.games.at(static_cast<std::size_t>(gi)).logged_score = r.at("score").get<double>();
    } else if (rtype == "survey") {
      s.acceptance_items =
          optional_field<std::vector<int>>(r, "acceptance_items", [](const Json& j) { return j.get<std::vector<int>>(); });
      s.acceptance_score = optional_field<int>(r, "acceptance_score", [](const Json& j) { return j.get<int>(); });
      s.easiest_map = optional_field<std::string>(r, "easiest_map", [](const Json& j) { return j.get<std::string>(); });
    } else if (rtype == "session_complete") {
      s.outcome = SessionOutcome::complete;
    } else if (rtype == "session_abandoned") {
      s.outcome = SessionOutcome::abandoned;
    } else {
      throw std::runtime_error("unknown record type " + rtype);
    }
  }
  return data;
}

Dataset load_dataset(const std::string& path) { return dataset_from_records(EventLog::read(path)); }

ReplayCheck verify_replay(const Dataset& data, bool recommendations) {
  ReplayCheck check;
  const auto& def = data.definition;
  ModelBank models(def.master_seed, def.dss, def.sequence_length);
  for (const auto& s : data.sessions) {
    for (const auto& g : s.games) {
      ++check.games;
      auto issue = [&](std::string what) { check.issues.push_back({s.session_id, g.game_index, std::move(what)}); };
      GameState state(g.map, g.cost);
      std::optional<RecommendationStream> stream;
      if (recommendations && s.condition.treatment() && g.accuracy)
        stream.emplace(models.get(*g.map, *s.condition.bias, g.cost, *g.accuracy));
      bool bad = false;
      for (const auto& logged : g.plays) {
        ++check.plays;
        std::optional<CellCoord> rec = logged.recommended;
        if (stream) {
          rec = stream->next(state);
          if (rec != logged.recommended) {
            issue("recommendation differs at round " + std::to_string(logged.round));
            bad = true;
            break;
          }
        }
        PlayEvent e;
        try {
          e = state.click(logged.clicked, rec, logged.timestamp_ms, s.session_id, g.game_index);
        } catch (const GameError& err) {
          issue(std::string("illegal click: ") + err.what());
          bad = true;
          break;
        }
        if (e != logged) {
          issue("click differs at round " + std::to_string(logged.round));
          bad = true;
          break;
        }
      }
      if (!bad && g.logged_score && *g.logged_score != state.score()) issue("logged game score differs");
      if (!bad && g.logged_score && !g.complete()) issue("game_complete before 25 clicks");
    }
  }
  return check;
}

std::vector<PlayRow> play_table(const Dataset& data) {
  std::vector<PlayRow> rows;
  for (const auto& s : data.sessions) {
    for (const auto& g : s.games) {
      for (std::size_t r = 0; r < g.plays.size(); ++r) {
        const auto& e = g.plays[r];
        PlayRow row;
        row.session = &s;
        row.game = &g;
        row.position = g.game_index + 1;
        row.round = e.round;
        row.play_score = e.play_score;
        if (s.condition.treatment() && e.recommended) row.reliance = euclidean(*e.recommended, e.clicked);
        if (r > 0) row.step = euclidean(g.plays[r - 1].clicked, e.clicked);
        row.ts = e.timestamp_ms;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::vector<double> learning_curve(const SessionData& s) {
  std::vector<double> curve;
  for (const auto& g : s.games)
    for (const auto& e : g.plays) curve.push_back(e.play_score);
  return curve;
}

}  // namespace oilgame
