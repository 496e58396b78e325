#include "oilgame/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace oilgame {

std::string_view to_string(ConditionLabel label) {
  switch (label) {
    case ConditionLabel::control: return "control";
    case ConditionLabel::LB: return "LB";
    case ConditionLabel::LU: return "LU";
    case ConditionLabel::HB: return "HB";
    case ConditionLabel::HU: return "HU";
  }
  return "control";
}

ConditionLabel label_from_string(std::string_view s) {
  if (s == "control") return ConditionLabel::control;
  if (s == "LB") return ConditionLabel::LB;
  if (s == "LU") return ConditionLabel::LU;
  if (s == "HB") return ConditionLabel::HB;
  if (s == "HU") return ConditionLabel::HU;
  throw std::invalid_argument("unknown condition label '" + std::string(s) + "'");
}

Condition condition_for(ConditionLabel label, double control_cost) {
  switch (label) {
    case ConditionLabel::control: return {label, control_cost, std::nullopt};
    case ConditionLabel::LB: return {label, kLowCost, Bias::biased};
    case ConditionLabel::LU: return {label, kLowCost, Bias::unbiased};
    case ConditionLabel::HB: return {label, kHighCost, Bias::biased};
    case ConditionLabel::HU: return {label, kHighCost, Bias::unbiased};
  }
  throw std::invalid_argument("bad condition label");
}

std::string ExperimentalUnit::key() const {
  std::string k(to_string(condition.label));
  k += ':';
  for (int i = 0; i < 3; ++i) {
    if (i) k += '-';
    k += to_string(map_order[i]);
  }
  if (accuracy_order) {
    k += ':';
    for (int i = 0; i < 3; ++i) {
      if (i) k += '-';
      k += to_string((*accuracy_order)[i]);
    }
  }
  return k;
}

std::vector<ExperimentalUnit> enumerate_units(ConditionLabel label, double control_cost, int first_id) {
  const Condition condition = condition_for(label, control_cost);
  std::array<Difficulty, 3> maps{Difficulty::easy, Difficulty::medium, Difficulty::hard};
  std::vector<ExperimentalUnit> units;
  do {
    if (!condition.treatment()) {
      units.push_back({first_id + static_cast<int>(units.size()), condition, maps, std::nullopt, 0});
      continue;
    }
    std::array<Accuracy, 3> acc{Accuracy::high, Accuracy::medium, Accuracy::low};
    do {
      units.push_back({first_id + static_cast<int>(units.size()), condition, maps, acc, 0});
    } while (std::next_permutation(acc.begin(), acc.end()));
  } while (std::next_permutation(maps.begin(), maps.end()));
  return units;
}

std::size_t pick_least_filled(std::span<const int> loads, Rng& rng) {
  if (loads.empty()) throw std::invalid_argument("no units to assign");
  const int least = *std::min_element(loads.begin(), loads.end());
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < loads.size(); ++i)
    if (loads[i] == least) candidates.push_back(i);
  return candidates[rng.below(candidates.size())];
}

// ---------------------------------------------------------------------------

UnitPool::UnitPool(std::vector<ExperimentalUnit> units, std::int64_t reservation_timeout_ms)
    : units_(std::move(units)), reserved_(units_.size(), 0), timeout_ms_(reservation_timeout_ms) {
  if (units_.empty()) throw std::invalid_argument("unit pool is empty");
  for (std::size_t i = 0; i < units_.size(); ++i)
    if (units_[i].id != static_cast<int>(i)) throw std::invalid_argument("unit ids must be 0..n-1 in order");
}

int UnitPool::load(std::size_t i) const { return units_[i].completions + reserved_[i]; }

const ExperimentalUnit& UnitPool::assign(const std::string& session_id, Rng& rng, std::int64_t now_ms) {
  const int id = choose(rng);
  reserve(session_id, id, now_ms);
  return units_[static_cast<std::size_t>(id)];
}

int UnitPool::choose(Rng& rng) const {
  std::lock_guard lock(mutex_);
  std::vector<int> loads(units_.size());
  for (std::size_t i = 0; i < units_.size(); ++i) loads[i] = load(i);
  return static_cast<int>(pick_least_filled(loads, rng));
}

int UnitPool::min_load() const {
  std::lock_guard lock(mutex_);
  int least = load(0);
  for (std::size_t i = 1; i < units_.size(); ++i) least = std::min(least, load(i));
  return least;
}

void UnitPool::touch(const std::string& session_id, std::int64_t now_ms) {
  std::lock_guard lock(mutex_);
  if (auto it = reservations_.find(session_id); it != reservations_.end())
    it->second.since_ms = std::max(it->second.since_ms, now_ms);
}

std::vector<std::string> UnitPool::stale(std::int64_t now_ms) const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [sid, r] : reservations_)
    if (now_ms - r.since_ms > timeout_ms_) out.push_back(sid);
  return out;
}

bool UnitPool::holds(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  return reservations_.count(session_id) > 0;
}

void UnitPool::reserve(const std::string& session_id, int unit_id, std::int64_t now_ms) {
  std::lock_guard lock(mutex_);
  if (unit_id < 0 || unit_id >= static_cast<int>(units_.size())) throw std::out_of_range("unknown unit id");
  if (reservations_.count(session_id)) throw std::invalid_argument("session already holds a unit");
  ++reserved_[static_cast<std::size_t>(unit_id)];
  reservations_[session_id] = {unit_id, now_ms};
}

void UnitPool::complete(const std::string& session_id) {
  std::lock_guard lock(mutex_);
  auto it = reservations_.find(session_id);
  if (it == reservations_.end()) throw std::invalid_argument("session holds no reservation");
  const auto i = static_cast<std::size_t>(it->second.unit_id);
  --reserved_[i];
  ++units_[i].completions;
  reservations_.erase(it);
}

void UnitPool::abandon(const std::string& session_id) {
  std::lock_guard lock(mutex_);
  auto it = reservations_.find(session_id);
  if (it == reservations_.end()) return;
  --reserved_[static_cast<std::size_t>(it->second.unit_id)];
  reservations_.erase(it);
}

std::vector<std::string> UnitPool::expire(std::int64_t now_ms) {
  std::lock_guard lock(mutex_);
  std::vector<std::string> released;
  for (auto it = reservations_.begin(); it != reservations_.end();) {
    if (now_ms - it->second.since_ms > timeout_ms_) {
      --reserved_[static_cast<std::size_t>(it->second.unit_id)];
      released.push_back(it->first);
      it = reservations_.erase(it);
    } else {
      ++it;
    }
  }
  return released;
}

std::vector<ExperimentalUnit> UnitPool::snapshot() const {
  std::lock_guard lock(mutex_);
  return units_;
}

const ExperimentalUnit& UnitPool::unit(int id) const {
  if (id < 0 || id >= static_cast<int>(units_.size())) throw std::out_of_range("unknown unit id");
  return units_[static_cast<std::size_t>(id)];
}

int UnitPool::open_reservations() const {
  std::lock_guard lock(mutex_);
  return static_cast<int>(reservations_.size());
}

nlohmann::ordered_json UnitPool::fill_status() const {
  std::lock_guard lock(mutex_);
  auto rows = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < units_.size(); ++i)
    rows.push_back({{"id", units_[i].id},
                    {"key", units_[i].key()},
                    {"completions", units_[i].completions},
                    {"reserved", reserved_[i]}});
  return rows;
}

// ---------------------------------------------------------------------------

double oil_quantile(const GameMap& map, double q) {
  std::vector<double> v(map.oil.data(), map.oil.data() + kCellCount);
  std::sort(v.begin(), v.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
  const auto lo = static_cast<std::size_t>(h);
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

LuckerVerdict detect_lucker(std::span<const PlayEvent> trace, const GameMap& map, const LuckerParams& params) {
  if (trace.empty()) throw std::invalid_argument("empty trace");
  LuckerVerdict v;
  v.session_id = trace.front().session_id;
  const double threshold = oil_quantile(map, params.quantile);
  const auto n = std::min<std::size_t>(trace.size(), static_cast<std::size_t>(std::max(params.window, 0)));
  for (std::size_t i = 0; i < n; ++i) {
    if (trace[i].yield >= threshold) {
      v.is_lucker = true;
      v.trigger_round = static_cast<int>(i);
      break;
    }
  }
  return v;
}

CalibrationResult calibrate_difficulty(std::span<const GameMap> candidates,
                                       const std::map<std::string, std::vector<std::vector<PlayEvent>>>& traces,
                                       Rng& rng, const LuckerParams& params) {
  if (candidates.size() < 3) throw std::invalid_argument("calibration needs at least 3 candidate maps");
  CalibrationResult result{candidates[0], candidates[0], candidates[0], {}};
  for (const auto& map : candidates) {
    auto it = traces.find(map.id);
    if (it == traces.end() || it->second.empty()) throw std::invalid_argument("no traces for map " + map.id);
    MapCalibrationStats s{map.id, static_cast<int>(it->second.size()), 0.0, 0.0};
    for (const auto& trace : it->second) {
      s.lucker_rate += detect_lucker(trace, map, params).is_lucker;
      s.mean_score += trace.empty() ? 0.0 : trace.back().cumulative_score;
    }
    s.lucker_rate /= s.traces;
    s.mean_score /= s.traces;
    result.stats.push_back(s);
  }

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  const auto& st = result.stats;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (st[a].lucker_rate != st[b].lucker_rate) return st[a].lucker_rate < st[b].lucker_rate;
    return st[a].mean_score < st[b].mean_score;
  });

  std::size_t hard = order[0];
  std::size_t medium = order[1];
  if (st[medium].mean_score < st[hard].mean_score) std::swap(hard, medium);

  std::vector<std::size_t> pool;
  for (std::size_t k = 2; k < order.size(); ++k)
    if (st[order[k]].mean_score >= st[medium].mean_score) pool.push_back(order[k]);
  std::size_t easy;
  if (!pool.empty()) {
    std::stable_sort(pool.begin(), pool.end(), [&](std::size_t a, std::size_t b) { return st[a].mean_score > st[b].mean_score; });
    const std::size_t tercile = (pool.size() + 2) / 3;
    easy = pool[rng.below(tercile)];
  } else {
    // Best remaining map, then relabel the triple by mean score.
    easy = order[2];
    for (std::size_t k = 3; k < order.size(); ++k)
      if (st[order[k]].mean_score > st[easy].mean_score) easy = order[k];
    std::array<std::size_t, 3> triple{easy, medium, hard};
    std::stable_sort(triple.begin(), triple.end(), [&](std::size_t a, std::size_t b) { return st[a].mean_score > st[b].mean_score; });
    easy = triple[0];
    medium = triple[1];
    hard = triple[2];
  }

  result.easy = candidates[easy];
  result.medium = candidates[medium];
  result.hard = candidates[hard];
  result.easy.difficulty = Difficulty::easy;
  result.medium.difficulty = Difficulty::medium;
  result.hard.difficulty = Difficulty::hard;
  return result;
}

// ---------------------------------------------------------------------------

const GameMap& ExperimentDefinition::map_for(Difficulty d) const { return *map_ptr(d); }

std::shared_ptr<const GameMap> ExperimentDefinition::map_ptr(Difficulty d) const {
  std::shared_ptr<const GameMap> m;
  switch (d) {
    case Difficulty::easy: m = easy; break;
    case Difficulty::medium: m = medium; break;
    case Difficulty::hard: m = hard; break;
    case Difficulty::unlabeled: break;
  }
  if (!m) throw std::invalid_argument("experiment has no " + std::string(to_string(d)) + " map");
  return m;
}

std::vector<ExperimentalUnit> ExperimentDefinition::all_units() const {
  std::vector<ExperimentalUnit> units;
  for (auto label : labels) {
    auto part = enumerate_units(label, control_cost, static_cast<int>(units.size()));
    units.insert(units.end(), part.begin(), part.end());
  }
  return units;
}

nlohmann::ordered_json to_json(const ExperimentDefinition& def) {
  nlohmann::ordered_json j;
  j["name"] = def.name;
  auto labels = nlohmann::ordered_json::array();
  for (auto l : def.labels) labels.push_back(std::string(to_string(l)));
  j["labels"] = std::move(labels);
  j["quota_per_unit"] = def.quota_per_unit;
  j["control_cost"] = def.control_cost;
  j["lucker"] = {{"window", def.lucker.window}, {"quantile", def.lucker.quantile}};
  j["master_seed"] = def.master_seed;
  j["reservation_timeout_ms"] = def.reservation_timeout_ms;
  j["dss"] = {{"n_drills", def.dss.n_drills},
              {"degree", def.dss.degree},
              {"terrain_feature", def.dss.terrain_feature},
              {"selection", def.dss.selection == KnotSelection::aic ? "aic" : "aicc"},
              {"sequence_length", def.sequence_length}};
  nlohmann::ordered_json maps;
  for (auto d : {Difficulty::easy, Difficulty::medium, Difficulty::hard})
  {
    auto m = to_json(*def.map_ptr(d));
    m["difficulty"] = std::string(to_string(d));
    maps[std::string(to_string(d))] = std::move(m);
  }
  j["maps"] = std::move(maps);
  return j;
}

ExperimentDefinition definition_from_json(const nlohmann::json& j, const std::string& base_dir) {
  ExperimentDefinition def;
  def.name = j.value("name", def.name);
  if (j.contains("labels")) {
    def.labels.clear();
    for (const auto& l : j.at("labels")) def.labels.push_back(label_from_string(l.get<std::string>()));
  }
  if (def.labels.empty()) throw std::invalid_argument("experiment defines no condition labels");
  def.quota_per_unit = j.value("quota_per_unit", def.quota_per_unit);
  def.control_cost = j.value("control_cost", def.control_cost);
  if (j.contains("lucker")) {
    def.lucker.window = j["lucker"].value("window", def.lucker.window);
    def.lucker.quantile = j["lucker"].value("quantile", def.lucker.quantile);
  }
  def.master_seed = j.value("master_seed", def.master_seed);
  def.reservation_timeout_ms = j.value("reservation_timeout_ms", def.reservation_timeout_ms);
  if (j.contains("dss")) {
    const auto& d = j["dss"];
    def.dss.n_drills = d.value("n_drills", def.dss.n_drills);
    def.dss.degree = d.value("degree", def.dss.degree);
    def.dss.terrain_feature = d.value("terrain_feature", def.dss.terrain_feature);
    def.dss.selection = d.value("selection", std::string("aicc")) == "aic" ? KnotSelection::aic : KnotSelection::aicc;
    def.sequence_length = d.value("sequence_length", def.sequence_length);
  }
  const auto& maps = j.at("maps");
  const auto load = [&](const char* key, Difficulty d) {
    const auto& entry = maps.at(key);
    GameMap m = entry.is_string() ? load_map((std::filesystem::path(base_dir) / entry.get<std::string>()).string())
                                  : map_from_json(entry);
    m.difficulty = d;
    return std::make_shared<const GameMap>(std::move(m));
  };
  def.easy = load("easy", Difficulty::easy);
  def.medium = load("medium", Difficulty::medium);
  def.hard = load("hard", Difficulty::hard);
  return def;
}

ExperimentDefinition load_definition(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read experiment definition " + path);
  const auto dir = std::filesystem::path(path).parent_path();
  return definition_from_json(nlohmann::json::parse(in), dir.empty() ? "." : dir.string());
}

}  // namespace oilgame
