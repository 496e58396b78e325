#pragma once

#include "oilgame/platform.hpp"

#include <memory>
#include <string>
#include <thread>

namespace oilgame {

/// JSON-over-HTTP front end for a Platform. Routes and payloads are listed
/// in docs/api.md.
class HttpServer {
 public:
  explicit HttpServer(Platform& platform);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); blocking.
  void listen();
  /// Serves on a background thread.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
};

/// Static tutorial content served at GET /api/tutorial.
Json tutorial_content();

}  // namespace oilgame
