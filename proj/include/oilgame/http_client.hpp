#pragma once

#include "oilgame/agents.hpp"

#include <memory>
#include <string>

namespace oilgame {

/// PlatformClient over the HTTP API. Error responses are rethrown as
/// ServiceError with the server's error code.
class HttpClient final : public PlatformClient {
 public:
  /// `endpoint` like "http://127.0.0.1:8080".
  explicit HttpClient(const std::string& endpoint);
  ~HttpClient() override;

  Json create_session(const Json& body) override;
  Json submit_demographics(const std::string& sid, const Json& body) override;
  Json complete_tutorial(const std::string& sid) override;
  Json get_game(const std::string& sid, int g) override;
  Json submit_click(const std::string& sid, int g, const Json& body) override;
  Json submit_survey(const std::string& sid, const Json& body) override;

  /// Admin export (NDJSON) with a bearer token.
  std::string export_events(const std::string& admin_token);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace oilgame
