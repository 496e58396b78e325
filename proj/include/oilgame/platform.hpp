#pragma once

#include "oilgame/dss.hpp"
#include "oilgame/engine.hpp"
#include "oilgame/event_log.hpp"
#include "oilgame/experiment.hpp"

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

namespace oilgame {

class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ms() = 0;
};

class SystemClock final : public Clock {
 public:
  std::int64_t now_ms() override;
};

/// Test and simulation clock; only moves when told to.
class ManualClock final : public Clock {
 public:
  explicit ManualClock(std::int64_t start_ms = 0) : now_(start_ms) {}
  std::int64_t now_ms() override { return now_.load(); }
  void set(std::int64_t t) { now_.store(t); }
  void advance(std::int64_t dt) { now_.fetch_add(dt); }

 private:
  std::atomic<std::int64_t> now_;
};

/// Maps the n-th session of an experiment to its token.
using TokenSource = std::function<std::string(std::uint64_t sequence)>;
/// 128 bits from std::random_device, hex encoded.
TokenSource random_tokens();
/// Reproducible tokens for simulations. Not for real participants.
TokenSource seeded_tokens(std::uint64_t seed);

enum class ErrorCode {
  bad_request,
  consent_required,
  unknown_session,
  session_abandoned,
  out_of_order,
  wrong_game,
  duplicate_click,
  game_over,
  out_of_bounds,
  bad_timestamp,
  experiment_full,
  unauthorized,
  not_found,
};

std::string_view to_string(ErrorCode code);
/// Unknown strings map to bad_request.
ErrorCode error_code_from_string(std::string_view s);
int http_status(ErrorCode code);

class ServiceError : public std::runtime_error {
 public:
  ServiceError(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }
  Json to_json() const;

 private:
  ErrorCode code_;
};

// ---------------------------------------------------------------------------
// Survey

inline constexpr int kSurveyItems = 8;
inline constexpr int kSurveyItemMax = 5;
inline constexpr int kReversedItem = 5;  // "I am wary of the DSS", zero-based

/// Sum of the 8 items (each 0..5) with the wary item reversed; 0..40.
int survey_score(std::span<const int> items);

struct SurveyResponse {
  std::optional<std::vector<int>> acceptance_items;
  std::string easiest_map;
  std::optional<std::string> free_text;
};

struct Demographics {
  std::optional<std::string> gender;
  std::optional<std::string> age_bracket;
  std::optional<std::string> country;
  std::optional<std::string> education;
  std::optional<std::string> background;
};

/// Validates vocabularies: gender in {male, female, other, undisclosed};
/// age bracket "a-b" with a a multiple of 5 and b = a + 4, or "a+".
Demographics demographics_from_json(const Json& j);
Json to_json(const Demographics& d);

// ---------------------------------------------------------------------------

enum class SessionStatus { consented, playing, surveying, complete, abandoned };
std::string_view to_string(SessionStatus s);

struct ExportFilter {
  std::optional<ConditionLabel> condition;
  std::optional<std::int64_t> from_ms;  // inclusive
  std::optional<std::int64_t> to_ms;    // exclusive
};

struct PlatformOptions {
  std::shared_ptr<Clock> clock = std::make_shared<SystemClock>();
  TokenSource tokens = random_tokens();
  std::string admin_token;
};

/// The session service without transport. Every request handler validates,
/// appends one or more records to the event log and only then applies them
/// to the in-memory state; recovery applies the same records in log order.
///
/// Requests on one session are serialized; different sessions proceed in
/// parallel. Bodies and responses use the JSON shapes documented in
/// docs/api.md.
class Platform {
 public:
  /// Starts a new experiment on an empty log, or resumes the experiment in a
  /// non-empty one (the definition argument must then be omitted).
  Platform(std::optional<ExperimentDefinition> def, std::shared_ptr<EventLog> log, PlatformOptions options = {});
  ~Platform();

  Json create_session(const Json& body);
  Json submit_demographics(const std::string& sid, const Json& body);
  Json complete_tutorial(const std::string& sid);
  Json get_game(const std::string& sid, int game_index);
  Json submit_click(const std::string& sid, int game_index, const Json& body);
  Json submit_survey(const std::string& sid, const Json& body);
  Json session_status(const std::string& sid);

  /// Abandons sessions idle longer than the reservation timeout.
  std::vector<std::string> sweep();

  void check_admin(const std::string& token) const;
  /// Header line plus matching session records; NDJSON.
  std::string export_events(const ExportFilter& filter, const std::string& admin_token) const;
  /// One row per click.
  std::string export_csv(const ExportFilter& filter, const std::string& admin_token) const;
  Json fill_status(const std::string& admin_token) const;

  const ExperimentDefinition& definition() const noexcept { return def_; }
  std::vector<std::string> session_ids() const;
  /// Full server-side state of a session, for audits and recovery checks.
  Json session_snapshot(const std::string& sid) const;
  std::vector<ExperimentalUnit> units() const { return pool_->snapshot(); }
  ModelBank& models() { return *models_; }

 private:
  struct Game;
  struct Session;

  std::shared_ptr<Session> find(const std::string& sid) const;
  std::int64_t session_ts(const Session& s);
  Json commit(Json record);
  void apply(const Json& record);
  Json game_view(const Session& s, int g) const;
  bool record_matches(const Json& record, const ExportFilter& filter) const;

  ExperimentDefinition def_;
  std::shared_ptr<EventLog> log_;
  PlatformOptions options_;
  std::unique_ptr<UnitPool> pool_;
  std::unique_ptr<ModelBank> models_;
  std::mutex create_mutex_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::vector<std::string> session_order_;
  std::uint64_t sessions_created_ = 0;
};

}  // namespace oilgame
