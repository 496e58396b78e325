#include "oilgame/platform.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <random>
#include <regex>

namespace oilgame {

std::int64_t SystemClock::now_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

namespace {

std::string hex128(std::uint64_t hi, std::uint64_t lo) {
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(hi),
                static_cast<unsigned long long>(lo));
  return buf;
}

ErrorCode from_game_error(GameErrorCode code) {
  switch (code) {
    case GameErrorCode::duplicate_click: return ErrorCode::duplicate_click;
    case GameErrorCode::game_over: return ErrorCode::game_over;
    case GameErrorCode::out_of_bounds: return ErrorCode::out_of_bounds;
    case GameErrorCode::bad_timestamp: return ErrorCode::bad_timestamp;
  }
  return ErrorCode::bad_request;
}

std::string csv_number(double v) { return Json(v).dump(); }

}  // namespace

TokenSource random_tokens() {
  return [](std::uint64_t) {
    std::random_device rd;
    std::array<std::uint64_t, 2> w{};
    for (auto& x : w) x = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    return hex128(w[0], w[1]);
  };
}

TokenSource seeded_tokens(std::uint64_t seed) {
  return [seed](std::uint64_t n) { return hex128(derive_seed(seed, {n, 1}), derive_seed(seed, {n, 2})); };
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::bad_request: return "bad_request";
    case ErrorCode::consent_required: return "consent_required";
    case ErrorCode::unknown_session: return "unknown_session";
    case ErrorCode::session_abandoned: return "session_abandoned";
    case ErrorCode::out_of_order: return "out_of_order";
    case ErrorCode::wrong_game: return "wrong_game";
    case ErrorCode::duplicate_click: return "duplicate_click";
    case ErrorCode::game_over: return "game_over";
    case ErrorCode::out_of_bounds: return "out_of_bounds";
    case ErrorCode::bad_timestamp: return "bad_timestamp";
    case ErrorCode::experiment_full: return "experiment_full";
    case ErrorCode::unauthorized: return "unauthorized";
    case ErrorCode::not_found: return "not_found";
  }
  return "bad_request";
}

ErrorCode error_code_from_string(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(ErrorCode::not_found); ++i)
    if (to_string(static_cast<ErrorCode>(i)) == s) return static_cast<ErrorCode>(i);
  return ErrorCode::bad_request;
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::bad_request:
    case ErrorCode::consent_required:
    case ErrorCode::out_of_bounds: return 400;
    case ErrorCode::unauthorized: return 401;
    case ErrorCode::unknown_session:
    case ErrorCode::not_found: return 404;
    case ErrorCode::session_abandoned: return 410;
    case ErrorCode::experiment_full: return 503;
    default: return 409;
  }
}

Json ServiceError::to_json() const { return Json{{"error", {{"code", to_string(code_)}, {"message", what()}}}}; }

int survey_score(std::span<const int> items) {
  if (items.size() != kSurveyItems) throw std::invalid_argument("survey needs exactly 8 items");
  int total = 0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i] < 0 || items[i] > kSurveyItemMax) throw std::invalid_argument("survey item out of range 0..5");
    total += static_cast<int>(i) == kReversedItem ? kSurveyItemMax - items[i] : items[i];
  }
  return total;
}

Demographics demographics_from_json(const Json& j) {
  if (!j.is_object()) throw std::invalid_argument("demographics must be an object");
  Demographics d;
  const auto field = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    if (!j[key].is_string()) throw std::invalid_argument(std::string(key) + " must be a string");
    return j[key].get<std::string>();
  };
  d.gender = field("gender");
  d.age_bracket = field("age_bracket");
  d.country = field("country");
  d.education = field("education");
  d.background = field("background");
  if (d.gender && *d.gender != "male" && *d.gender != "female" && *d.gender != "other" && *d.gender != "undisclosed")
    throw std::invalid_argument("gender must be male, female, other or undisclosed");
  if (d.age_bracket) {
    static const std::regex range(R"((\d{1,3})-(\d{1,3}))");
    static const std::regex open(R"((\d{1,3})\+)");
    std::smatch m;
    bool ok = false;
    if (std::regex_match(*d.age_bracket, m, range)) {
      const int a = std::stoi(m[1]), b = std::stoi(m[2]);
      ok = a % 5 == 0 && b == a + 4;
    } else if (std::regex_match(*d.age_bracket, m, open)) {
      ok = std::stoi(m[1]) % 5 == 0;
    }
    if (!ok) throw std::invalid_argument("age_bracket must be a 5-year bin such as 25-29 or 65+");
  }
  return d;
}

Json to_json(const Demographics& d) {
  const auto v = [](const std::optional<std::string>& s) { return s ? Json(*s) : Json(nullptr); };
  return Json{{"gender", v(d.gender)},
              {"age_bracket", v(d.age_bracket)},
              {"country", v(d.country)},
              {"education", v(d.education)},
              {"background", v(d.background)}};
}

std::string_view to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::consented: return "consented";
    case SessionStatus::playing: return "playing";
    case SessionStatus::surveying: return "surveying";
    case SessionStatus::complete: return "complete";
    case SessionStatus::abandoned: return "abandoned";
  }
  return "consented";
}

// ---------------------------------------------------------------------------

struct Platform::Game {
  std::shared_ptr<const GameMap> map;
  std::optional<Accuracy> accuracy;
  std::optional<GameState> state;
  std::unique_ptr<RecommendationStream> stream;
  std::optional<CellCoord> pending;
  std::int64_t started_ms = 0;
};

struct Platform::Session {
  std::mutex mutex;
  std::string id;
  ExperimentalUnit unit;
  std::int64_t created_ms = 0;
  std::int64_t last_ts = 0;
  SessionStatus status = SessionStatus::consented;
  std::optional<Demographics> demographics;
  std::optional<std::int64_t> tutorial_ms;
  int current_game = 0;
  std::array<Game, kGamesPerSession> games;
  std::optional<SurveyResponse> survey;
  std::optional<int> acceptance_score;
};

Platform::Platform(std::optional<ExperimentDefinition> def, std::shared_ptr<EventLog> log, PlatformOptions options)
    : log_(std::move(log)), options_(std::move(options)) {
  if (!log_) throw std::invalid_argument("platform needs an event log");
  const auto records = log_->records();
  if (records.empty()) {
    if (!def) throw std::invalid_argument("empty event log and no experiment definition");
    def_ = std::move(*def);
    log_->append(Json{{"type", "experiment_started"}, {"ts", options_.clock->now_ms()}, {"experiment", to_json(def_)}});
  } else {
    const auto& first = records.front();
    if (first.value("type", "") != "experiment_started") throw std::runtime_error("event log does not start an experiment");
    def_ = definition_from_json(first.at("experiment"));
    if (def && to_json(*def).dump() != first.at("experiment").dump())
      throw std::invalid_argument("experiment definition differs from the one in the event log");
  }
  pool_ = std::make_unique<UnitPool>(def_.all_units(), def_.reservation_timeout_ms);
  models_ = std::make_unique<ModelBank>(def_.master_seed, def_.dss, def_.sequence_length);
  for (std::size_t i = 1; i < records.size(); ++i) apply(records[i]);
}

Platform::~Platform() = default;

std::shared_ptr<Platform::Session> Platform::find(const std::string& sid) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(sid);
  if (it == sessions_.end()) throw ServiceError(ErrorCode::unknown_session, "no such session");
  return it->second;
}

std::int64_t Platform::session_ts(const Session& s) { return std::max(options_.clock->now_ms(), s.last_ts + 1); }

Json Platform::commit(Json record) {
  auto stored = log_->append(std::move(record));
  apply(stored);
  return stored;
}

void Platform::apply(const Json& r) {
  const std::string type = r.at("type").get<std::string>();
  const std::int64_t ts = r.at("ts").get<std::int64_t>();
  const std::string sid = r.at("session_id").get<std::string>();

  if (type == "session_created") {
    auto s = std::make_shared<Session>();
    s->id = sid;
    s->unit = pool_->unit(r.at("unit_id").get<int>());
    if (s->unit.key() != r.at("unit_key").get<std::string>()) throw std::runtime_error("unit key mismatch in log");
    s->created_ms = s->last_ts = ts;
    pool_->reserve(sid, s->unit.id, ts);
    std::unique_lock lock(sessions_mutex_);
    if (!sessions_.emplace(sid, s).second) throw std::runtime_error("duplicate session in log");
    session_order_.push_back(sid);
    ++sessions_created_;
    return;
  }

  auto s = find(sid);
  s->last_ts = std::max(s->last_ts, ts);
  pool_->touch(sid, ts);

  if (type == "demographics") {
    s->demographics = demographics_from_json(r.at("demographics"));
  } else if (type == "tutorial_complete") {
    s->tutorial_ms = r.at("tutorial_ms").get<std::int64_t>();
    s->status = SessionStatus::playing;
    s->current_game = 0;
  } else if (type == "game_started") {
    const int g = r.at("game_index").get<int>();
    auto& game = s->games.at(static_cast<std::size_t>(g));
    game.map = def_.map_ptr(s->unit.map_order[static_cast<std::size_t>(g)]);
    game.state.emplace(game.map, s->unit.condition.cost());
    game.started_ms = ts;
    if (s->unit.condition.treatment()) {
      game.accuracy = (*s->unit.accuracy_order)[static_cast<std::size_t>(g)];
      auto model = models_->get(*game.map, *s->unit.condition.bias, s->unit.condition.cost(), *game.accuracy);
      game.stream = std::make_unique<RecommendationStream>(std::move(model));
      game.pending = game.stream->next(*game.state);
    }
  } else if (type == "click") {
    const int g = r.at("game_index").get<int>();
    auto& game = s->games.at(static_cast<std::size_t>(g));
    if (!game.state) throw std::runtime_error("click before game start in log");
    const auto recorded = play_event_from_json(r);
    if (recorded.recommended != game.pending) throw std::runtime_error("logged recommendation differs from replay");
    const auto e = game.state->click(recorded.clicked, game.pending, ts, sid, g);
    if (e != recorded) throw std::runtime_error("logged click differs from replay");
    game.pending.reset();
    if (game.state->finished()) {
      if (++s->current_game == kGamesPerSession) s->status = SessionStatus::surveying;
    } else if (game.stream) {
      game.pending = game.stream->next(*game.state);
    }
  } else if (type == "game_complete") {
    // Derived from the final click; kept in the log for readers.
  } else if (type == "survey") {
    SurveyResponse resp;
    if (!r.at("acceptance_items").is_null()) resp.acceptance_items = r["acceptance_items"].get<std::vector<int>>();
    resp.easiest_map = r.at("easiest_map").get<std::string>();
    if (!r.at("free_text").is_null()) resp.free_text = r["free_text"].get<std::string>();
    s->survey = std::move(resp);
    if (!r.at("acceptance_score").is_null()) s->acceptance_score = r["acceptance_score"].get<int>();
  } else if (type == "session_complete") {
    pool_->complete(sid);
    s->status = SessionStatus::complete;
  } else if (type == "session_abandoned") {
    pool_->abandon(sid);
    s->status = SessionStatus::abandoned;
  } else {
    throw std::runtime_error("unknown record type " + type);
  }
}

// ---------------------------------------------------------------------------

namespace {

void require_active(const SessionStatus status) {
  if (status == SessionStatus::abandoned) throw ServiceError(ErrorCode::session_abandoned, "session was abandoned");
}

}  // namespace

Json Platform::create_session(const Json& body) {
  if (!body.is_object() || !body.contains("consent") || body["consent"] != true)
    throw ServiceError(ErrorCode::consent_required, "explicit consent is required");
  sweep();
  std::lock_guard lock(create_mutex_);
  if (pool_->min_load() >= def_.quota_per_unit) throw ServiceError(ErrorCode::experiment_full, "all units are full");
  const std::uint64_t seq = sessions_created_;
  Rng rng(derive_seed(def_.master_seed, {hash_tag("assign"), seq}));
  const auto& unit = pool_->unit(pool_->choose(rng));
  const std::string sid = options_.tokens(seq);

  Json rec;
  rec["type"] = "session_created";
  rec["ts"] = options_.clock->now_ms();
  rec["session_id"] = sid;
  rec["unit_id"] = unit.id;
  rec["unit_key"] = unit.key();
  rec["condition"] = to_string(unit.condition.label);
  rec["forest_cost"] = unit.condition.forest_cost;
  rec["bias"] = unit.condition.bias ? Json(to_string(*unit.condition.bias)) : Json(nullptr);
  auto maps = Json::array();
  for (auto d : unit.map_order) maps.push_back(def_.map_for(d).id);
  rec["map_order"] = std::move(maps);
  auto acc = Json(nullptr);
  if (unit.accuracy_order) {
    acc = Json::array();
    for (auto a : *unit.accuracy_order) acc.push_back(to_string(a));
  }
  rec["accuracy_order"] = std::move(acc);
  rec["consent"] = true;
  commit(rec);

  return Json{{"session_id", sid},
              {"status", "consented"},
              {"condition", to_string(unit.condition.label)},
              {"dss", unit.condition.treatment()},
              {"forest_cost", unit.condition.forest_cost},
              {"desert_cost", 0.0},
              {"games", kGamesPerSession},
              {"rounds", kRoundsPerGame}};
}

Json Platform::submit_demographics(const std::string& sid, const Json& body) {
  auto s = find(sid);
  std::lock_guard lock(s->mutex);
  require_active(s->status);
  if (s->status != SessionStatus::consented || s->demographics)
    throw ServiceError(ErrorCode::out_of_order, "demographics are accepted once, before the tutorial");
  Demographics d;
  try {
    d = demographics_from_json(body);
  } catch (const std::exception& e) {
    throw ServiceError(ErrorCode::bad_request, e.what());
  }
  commit(Json{{"type", "demographics"}, {"ts", session_ts(*s)}, {"session_id", sid}, {"demographics", to_json(d)}});
  return Json{{"session_id", sid}, {"status", to_string(s->status)}};
}

Json Platform::complete_tutorial(const std::string& sid) {
  auto s = find(sid);
  std::lock_guard lock(s->mutex);
  require_active(s->status);
  if (s->status != SessionStatus::consented) throw ServiceError(ErrorCode::out_of_order, "tutorial already completed");
  const auto ts = session_ts(*s);
  commit(Json{{"type", "tutorial_complete"}, {"ts", ts}, {"session_id", sid}, {"tutorial_ms", ts - s->last_ts}});
  return Json{{"session_id", sid}, {"status", "playing"}, {"game_index", 0}, {"tutorial_ms", *s->tutorial_ms}};
}

Json Platform::game_view(const Session& s, int g) const {
  const auto& game = s.games[static_cast<std::size_t>(g)];
  const auto& state = *game.state;
  Json v;
  v["session_id"] = s.id;
  v["game_index"] = g;
  v["map_id"] = game.map->id;
  v["rounds"] = kRoundsPerGame;
  v["round"] = state.round();
  v["score"] = state.score();
  v["forest_cost"] = state.cost().forest_cost;
  v["desert_cost"] = state.cost().desert_cost;
  auto terrain = Json::array();
  for (int y = 0; y < kBoardSize; ++y) {
    auto row = Json::array();
    for (int x = 0; x < kBoardSize; ++x) row.push_back(game.map->terrain(y, x));
    terrain.push_back(std::move(row));
  }
  v["terrain"] = std::move(terrain);
  auto clicks = Json::array();
  for (const auto& e : state.events())
    clicks.push_back({{"x", e.clicked.x}, {"y", e.clicked.y}, {"yield", e.yield}, {"cost_charged", e.cost_charged}});
  v["clicks"] = std::move(clicks);
  v["dss"] = s.unit.condition.treatment();
  v["game_complete"] = state.finished();
  if (game.pending) v["recommendation"] = to_json(*game.pending);
  return v;
}

Json Platform::get_game(const std::string& sid, int g) {
  if (g < 0 || g >= kGamesPerSession) throw ServiceError(ErrorCode::not_found, "game index must be 0, 1 or 2");
  auto s = find(sid);
  std::lock_guard lock(s->mutex);
  require_active(s->status);
  if (s->status == SessionStatus::consented) throw ServiceError(ErrorCode::out_of_order, "complete the tutorial first");
  if (g > s->current_game) throw ServiceError(ErrorCode::wrong_game, "games unlock in order");
  if (!s->games[static_cast<std::size_t>(g)].state) {
    commit(Json{{"type", "game_started"},
                {"ts", session_ts(*s)},
                {"session_id", sid},
                {"game_index", g},
                {"map_id", def_.map_for(s->unit.map_order[static_cast<std::size_t>(g)]).id},
                {"difficulty", to_string(s->unit.map_order[static_cast<std::size_t>(g)])},
                {"accuracy", s->unit.accuracy_order
                                 ? Json(to_string((*s->unit.accuracy_order)[static_cast<std::size_t>(g)]))
                                 : Json(nullptr)},
                {"forest_cost", s->unit.condition.forest_cost}});
  }
  return game_view(*s, g);
}

Json Platform::submit_click(const std::string& sid, int g, const Json& body) {
  if (g < 0 || g >= kGamesPerSession) throw ServiceError(ErrorCode::not_found, "game index must be 0, 1 or 2");
  if (!body.is_object() || !body.contains("x") || !body.contains("y") || !body["x"].is_number_integer() ||
      !body["y"].is_number_integer())
    throw ServiceError(ErrorCode::bad_request, "click needs integer x and y");
  const CellCoord cell{body["x"].get<int>(), body["y"].get<int>()};

  auto s = find(sid);
  std::lock_guard lock(s->mutex);
  require_active(s->status);
  if (s->status == SessionStatus::consented) throw ServiceError(ErrorCode::out_of_order, "complete the tutorial first");
  if (g < s->current_game || s->status != SessionStatus::playing)
    throw ServiceError(ErrorCode::game_over, "this game is finished");
  if (g > s->current_game) throw ServiceError(ErrorCode::wrong_game, "games unlock in order");
  auto& game = s->games[static_cast<std::size_t>(g)];
  if (!game.state) throw ServiceError(ErrorCode::out_of_order, "load the game before clicking");

  const auto ts = session_ts(*s);
  PlayEvent e;
  try {
    GameState trial = *game.state;
    e = trial.click(cell, game.pending, ts, sid, g);
  } catch (const GameError& err) {
    throw ServiceError(from_game_error(err.code()), err.what());
  }
  Json rec{{"type", "click"}, {"ts", ts}, {"session_id", sid}};
  const auto fields = click_fields(e);
  for (const auto& [k, v] : fields.items()) rec[k] = v;
  if (body.contains("client_ts") && body["client_ts"].is_number_integer()) rec["client_ts"] = body["client_ts"];
  commit(std::move(rec));

  Json resp = click_fields(e);
  resp.erase("recommended");
  resp["ts"] = ts;
  resp["rounds_remaining"] = game.state->rounds_remaining();
  resp["game_complete"] = game.state->finished();
  if (game.state->finished()) {
    commit(Json{{"type", "game_complete"},
                {"ts", ts},
                {"session_id", sid},
                {"game_index", g},
                {"score", game.state->score()},
                {"duration_ms", ts - game.started_ms}});
    resp["next"] = g + 1 < kGamesPerSession ? "game" : "survey";
  }
  if (game.pending) resp["recommendation"] = to_json(*game.pending);
  return resp;
}

Json Platform::submit_survey(const std::string& sid, const Json& body) {
  auto s = find(sid);
  std::lock_guard lock(s->mutex);
  require_active(s->status);
  if (s->status != SessionStatus::surveying) throw ServiceError(ErrorCode::out_of_order, "finish all games first");
  if (!body.is_object()) throw ServiceError(ErrorCode::bad_request, "survey must be an object");

  Json items(nullptr), score(nullptr);
  if (body.contains("acceptance_items") && !body["acceptance_items"].is_null()) {
    try {
      const auto v = body["acceptance_items"].get<std::vector<int>>();
      score = survey_score(v);
      items = v;
    } catch (const std::exception& e) {
      throw ServiceError(ErrorCode::bad_request, std::string("acceptance_items: ") + e.what());
    }
  } else if (s->unit.condition.treatment()) {
    throw ServiceError(ErrorCode::bad_request, "acceptance_items are required");
  }
  if (!body.contains("easiest_map") || !body["easiest_map"].is_string())
    throw ServiceError(ErrorCode::bad_request, "easiest_map is required");
  const auto easiest = body["easiest_map"].get<std::string>();
  if (std::none_of(s->games.begin(), s->games.end(), [&](const Game& g) { return g.map->id == easiest; }))
    throw ServiceError(ErrorCode::bad_request, "easiest_map must be one of the session's maps");
  Json free_text(nullptr);
  if (body.contains("free_text") && !body["free_text"].is_null()) {
    if (!body["free_text"].is_string()) throw ServiceError(ErrorCode::bad_request, "free_text must be a string");
    free_text = body["free_text"];
  }

  const auto ts = session_ts(*s);
  commit(Json{{"type", "survey"},
              {"ts", ts},
              {"session_id", sid},
              {"acceptance_items", items},
              {"acceptance_score", score},
              {"easiest_map", easiest},
              {"free_text", free_text}});
  double total = 0.0;
  for (const auto& g : s->games) total += g.state->score();
  commit(Json{{"type", "session_complete"}, {"ts", ts}, {"session_id", sid}, {"total_score", total}});
  return Json{{"session_id", sid}, {"status", "complete"}, {"acceptance_score", score}, {"total_score", total}};
}

Json Platform::session_status(const std::string& sid) {
  auto s = find(sid);
  std::lock_guard lock(s->mutex);
  return Json{{"session_id", sid},
              {"status", to_string(s->status)},
              {"game_index", s->current_game},
              {"condition", to_string(s->unit.condition.label)},
              {"dss", s->unit.condition.treatment()},
              {"forest_cost", s->unit.condition.forest_cost}};
}

std::vector<std::string> Platform::sweep() {
  std::vector<std::string> abandoned;
  for (const auto& sid : pool_->stale(options_.clock->now_ms())) {
    auto s = find(sid);
    std::lock_guard lock(s->mutex);
    if (!pool_->holds(sid)) continue;
    if (s->status == SessionStatus::complete || s->status == SessionStatus::abandoned) continue;
    const auto ts = session_ts(*s);
    // Re-check under the session lock; activity may have refreshed it.
    const auto still = pool_->stale(ts);
    if (std::find(still.begin(), still.end(), sid) == still.end()) continue;
    commit(Json{{"type", "session_abandoned"}, {"ts", ts}, {"session_id", sid}, {"reason", "timeout"}});
    abandoned.push_back(sid);
  }
  return abandoned;
}

// ---------------------------------------------------------------------------

void Platform::check_admin(const std::string& token) const {
  if (options_.admin_token.empty() || token != options_.admin_token)
    throw ServiceError(ErrorCode::unauthorized, "admin token required");
}

bool Platform::record_matches(const Json& r, const ExportFilter& f) const {
  const auto ts = r.at("ts").get<std::int64_t>();
  if (f.from_ms && ts < *f.from_ms) return false;
  if (f.to_ms && ts >= *f.to_ms) return false;
  if (f.condition) {
    std::shared_lock lock(sessions_mutex_);
    auto it = sessions_.find(r.at("session_id").get<std::string>());
    if (it == sessions_.end() || it->second->unit.condition.label != *f.condition) return false;
  }
  return true;
}

namespace {

Json filter_json(const ExportFilter& f) {
  return Json{{"condition", f.condition ? Json(to_string(*f.condition)) : Json(nullptr)},
              {"from_ms", f.from_ms ? Json(*f.from_ms) : Json(nullptr)},
              {"to_ms", f.to_ms ? Json(*f.to_ms) : Json(nullptr)}};
}

}  // namespace

std::string Platform::export_events(const ExportFilter& filter, const std::string& admin_token) const {
  check_admin(admin_token);
  const auto records = log_->records();
  std::vector<const Json*> keep;
  for (std::size_t i = 1; i < records.size(); ++i)
    if (record_matches(records[i], filter)) keep.push_back(&records[i]);
  Json header{{"type", "export_header"},
              {"format", "oilgame-events"},
              {"version", 1},
              {"experiment", records.front().at("experiment")},
              {"filter", filter_json(filter)},
              {"records", keep.size()}};
  std::string out = header.dump() + "\n";
  for (const auto* r : keep) out += r->dump() + "\n";
  return out;
}

std::string Platform::export_csv(const ExportFilter& filter, const std::string& admin_token) const {
  check_admin(admin_token);
  std::string out =
      "session_id,condition,unit_id,game_index,map_id,difficulty,accuracy,forest_cost,round,ts,rec_x,rec_y,x,y,"
      "yield,cost_charged,play_score,cumulative_score\n";
  const auto records = log_->records();
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.at("type") != "click" || !record_matches(r, filter)) continue;
    const auto e = play_event_from_json(r);
    std::shared_ptr<Session> s;
    {
      std::shared_lock lock(sessions_mutex_);
      s = sessions_.at(e.session_id);
    }
    const auto& unit = s->unit;
    const auto g = static_cast<std::size_t>(e.game_index);
    const auto difficulty = unit.map_order[g];
    out += e.session_id + ',' + std::string(to_string(unit.condition.label)) + ',' + std::to_string(unit.id) + ',' +
           std::to_string(e.game_index) + ',' + def_.map_for(difficulty).id + ',' + std::string(to_string(difficulty)) +
           ',' + (unit.accuracy_order ? std::string(to_string((*unit.accuracy_order)[g])) : std::string()) + ',' +
           csv_number(unit.condition.forest_cost) + ',' + std::to_string(e.round) + ',' +
           std::to_string(e.timestamp_ms) + ',' + (e.recommended ? std::to_string(e.recommended->x) : "") + ',' +
           (e.recommended ? std::to_string(e.recommended->y) : "") + ',' + std::to_string(e.clicked.x) + ',' +
           std::to_string(e.clicked.y) + ',' + csv_number(e.yield) + ',' + csv_number(e.cost_charged) + ',' +
           csv_number(e.play_score) + ',' + csv_number(e.cumulative_score) + '\n';
  }
  return out;
}

Json Platform::fill_status(const std::string& admin_token) const {
  check_admin(admin_token);
  return Json{{"experiment", def_.name},
              {"quota_per_unit", def_.quota_per_unit},
              {"open_reservations", pool_->open_reservations()},
              {"units", pool_->fill_status()}};
}

std::vector<std::string> Platform::session_ids() const {
  std::shared_lock lock(sessions_mutex_);
  return session_order_;
}

Json Platform::session_snapshot(const std::string& sid) const {
  auto s = find(sid);
  std::lock_guard lock(s->mutex);
  Json j;
  j["session_id"] = s->id;
  j["unit_id"] = s->unit.id;
  j["unit_key"] = s->unit.key();
  j["status"] = to_string(s->status);
  j["created_ms"] = s->created_ms;
  j["last_ts"] = s->last_ts;
  j["current_game"] = s->current_game;
  j["demographics"] = s->demographics ? to_json(*s->demographics) : Json(nullptr);
  j["tutorial_ms"] = s->tutorial_ms ? Json(*s->tutorial_ms) : Json(nullptr);
  auto games = Json::array();
  for (const auto& g : s->games) {
    Json gj;
    if (g.state) {
      gj["map_id"] = g.map->id;
      gj["accuracy"] = g.accuracy ? Json(to_string(*g.accuracy)) : Json(nullptr);
      gj["started_ms"] = g.started_ms;
      gj["score"] = g.state->score();
      auto events = Json::array();
      for (const auto& e : g.state->events()) {
        auto ej = click_fields(e);
        ej["ts"] = e.timestamp_ms;
        events.push_back(std::move(ej));
      }
      gj["events"] = std::move(events);
      gj["pending_recommendation"] = g.pending ? to_json(*g.pending) : Json(nullptr);
      gj["fallback_draws"] = g.stream ? g.stream->fallback_draws() : 0;
    }
    games.push_back(std::move(gj));
  }
  j["games"] = std::move(games);
  j["acceptance_score"] = s->acceptance_score ? Json(*s->acceptance_score) : Json(nullptr);
  j["easiest_map"] = s->survey ? Json(s->survey->easiest_map) : Json(nullptr);
  return j;
}

}  // namespace oilgame
