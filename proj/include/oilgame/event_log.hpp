#pragma once

#include "oilgame/engine.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstdio>
#include <mutex>
#include <string>
#include <vector>

namespace oilgame {

using Json = nlohmann::ordered_json;

/// Append-only newline-delimited JSON log. Every record gets a sequence
/// number; append() returns only after the line is flushed (and fsynced when
/// requested). Without a path the log lives in memory only.
class EventLog {
 public:
  EventLog() = default;
  explicit EventLog(const std::string& path, bool fsync = false);
  ~EventLog();
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  /// Sets "seq" as the first key, then writes the record.
  Json append(Json record);

  std::vector<Json> records() const;
  std::uint64_t size() const;
  const std::string& path() const noexcept { return path_; }

  /// Reads a log file. A truncated final line (torn write) is dropped; a
  /// malformed line elsewhere is an error.
  static std::vector<Json> read(const std::string& path);
  static std::vector<Json> parse(const std::string& text);

 private:
  mutable std::mutex mutex_;
  std::string path_;
  std::FILE* file_ = nullptr;
  bool fsync_ = false;
  std::vector<Json> records_;
};

Json to_json(const CellCoord& c);
CellCoord cell_from_json(const Json& j);

/// Payload fields of a click record (without type/seq/session bookkeeping).
Json click_fields(const PlayEvent& e);
PlayEvent play_event_from_json(const Json& j);

}  // namespace oilgame
