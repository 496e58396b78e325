#include "oilgame/event_log.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

namespace oilgame {

EventLog::EventLog(const std::string& path, bool fsync) : path_(path), fsync_(fsync) {
  std::string text;
  if (std::ifstream in{path, std::ios::binary}) text.assign(std::istreambuf_iterator<char>(in), {});
  records_ = parse(text);
  const bool unterminated = !text.empty() && text.back() != '\n';
  const auto last_nl = text.rfind('\n');
  const bool tail_parsed = unterminated && !records_.empty() &&
                           Json::accept(text.substr(last_nl == std::string::npos ? 0 : last_nl + 1));
  if (unterminated && !tail_parsed) {
    // Drop the torn tail so the next append starts on a clean line.
    std::filesystem::resize_file(path, last_nl == std::string::npos ? 0 : last_nl + 1);
  }
  file_ = std::fopen(path.c_str(), "ab");
  if (!file_) throw std::runtime_error("cannot open event log " + path);
  if (tail_parsed) std::fputc('\n', file_);
}

EventLog::~EventLog() {
  if (file_) std::fclose(file_);
}

Json EventLog::append(Json record) {
  std::lock_guard lock(mutex_);
  Json out;
  out["seq"] = static_cast<std::uint64_t>(records_.size());
  for (auto& [k, v] : record.items())
    if (k != "seq") out[k] = std::move(v);
  if (file_) {
    const std::string line = out.dump() + "\n";
    if (std::fwrite(line.data(), 1, line.size(), file_) != line.size() || std::fflush(file_) != 0)
      throw std::runtime_error("event log write failed");
    if (fsync_ && ::fsync(::fileno(file_)) != 0) throw std::runtime_error("event log fsync failed");
  }
  records_.push_back(out);
  return out;
}

std::vector<Json> EventLog::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::uint64_t EventLog::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

std::vector<Json> EventLog::parse(const std::string& text) {
  std::vector<Json> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
    const bool last = nl == std::string::npos;
    pos = last ? text.size() : nl + 1;
    if (line.empty()) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const nlohmann::json::parse_error&) {
      if (last) break;  // torn write
      throw std::runtime_error("malformed event log line " + std::to_string(out.size() + 1));
    }
  }
  return out;
}

std::vector<Json> EventLog::read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

Json to_json(const CellCoord& c) { return Json{{"x", c.x}, {"y", c.y}}; }

CellCoord cell_from_json(const Json& j) { return {j.at("x").get<int>(), j.at("y").get<int>()}; }

Json click_fields(const PlayEvent& e) {
  Json j;
  j["game_index"] = e.game_index;
  j["round"] = e.round;
  j["x"] = e.clicked.x;
  j["y"] = e.clicked.y;
  j["recommended"] = e.recommended ? to_json(*e.recommended) : Json(nullptr);
  j["yield"] = e.yield;
  j["cost_charged"] = e.cost_charged;
  j["play_score"] = e.play_score;
  j["cumulative_score"] = e.cumulative_score;
  return j;
}

PlayEvent play_event_from_json(const Json& j) {
  PlayEvent e;
  e.session_id = j.value("session_id", std::string{});
  e.game_index = j.at("game_index").get<int>();
  e.round = j.at("round").get<int>();
  e.timestamp_ms = j.at("ts").get<std::int64_t>();
  e.clicked = {j.at("x").get<int>(), j.at("y").get<int>()};
  if (j.contains("recommended") && !j["recommended"].is_null()) e.recommended = cell_from_json(j["recommended"]);
  e.yield = j.at("yield").get<double>();
  e.cost_charged = j.at("cost_charged").get<double>();
  e.play_score = j.at("play_score").get<double>();
  e.cumulative_score = j.at("cumulative_score").get<double>();
  return e;
}

}  // namespace oilgame
