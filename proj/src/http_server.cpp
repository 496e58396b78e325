#include "oilgame/http_server.hpp"

#include <httplib.h>

#include <charconv>

namespace oilgame {

namespace {

void send(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  send(res, ServiceError(code, message).to_json(), http_status(code));
}

Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  try {
    return Json::parse(req.body);
  } catch (const nlohmann::json::parse_error&) {
    throw ServiceError(ErrorCode::bad_request, "request body is not valid JSON");
  }
}

std::string bearer(const httplib::Request& req) {
  const auto auth = req.get_header_value("Authorization");
  constexpr std::string_view prefix = "Bearer ";
  if (auth.rfind(prefix, 0) == 0) return auth.substr(prefix.size());
  return req.get_param_value("token");
}

std::optional<std::int64_t> int_param(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  const auto s = req.get_param_value(key);
  std::int64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw ServiceError(ErrorCode::bad_request, std::string(key) + " must be an integer");
  return v;
}

int game_param(const httplib::Request& req) {
  const auto& s = req.matches[2].str();
  int g = -1;
  std::from_chars(s.data(), s.data() + s.size(), g);
  return g;
}

/// Wraps a handler so every failure becomes a JSON error body.
template <class F>
httplib::Server::Handler guarded(F f) {
  return [f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const ServiceError& e) {
      send_error(res, e.code(), e.what());
    } catch (const std::exception& e) {
      send_error(res, ErrorCode::bad_request, e.what());
    }
  };
}

}  // namespace

Json tutorial_content() {
  return Json{
      {"title", "How to play"},
      {"steps",
       Json::array({"The board has 32 x 32 cells. Green cells are forest, brown cells are desert.",
                    "Each game lasts 25 rounds. In each round you drill one cell you have not drilled before.",
                    "Drilling reveals the oil yield of the cell (0 to 100 points), which is added to your score.",
                    "Drilling a forest cell costs extra points; desert cells are free.",
                    "Some participants see a suggested cell from a decision support system. Following it is optional.",
                    "You will play three games on three different maps, then answer a short survey."})}};
}

struct HttpServer::Impl {
  httplib::Server server;
};

HttpServer::HttpServer(Platform& platform) : impl_(std::make_unique<Impl>()) {
  auto& srv = impl_->server;
  const std::string sid = "/api/session/([0-9A-Za-z_-]+)";

  srv.Post("/api/session", guarded([&platform](const auto& req, auto& res) {
             send(res, platform.create_session(parse_body(req)), 201);
           }));
  srv.Get(sid, guarded([&platform](const auto& req, auto& res) {
            send(res, platform.session_status(req.matches[1]));
          }));
  srv.Post(sid + "/demographics", guarded([&platform](const auto& req, auto& res) {
             send(res, platform.submit_demographics(req.matches[1], parse_body(req)));
           }));
  srv.Get(sid + "/tutorial/complete", guarded([&platform](const auto& req, auto& res) {
            send(res, platform.complete_tutorial(req.matches[1]));
          }));
  srv.Get(sid + R"(/game/(\d+))", guarded([&platform](const auto& req, auto& res) {
            send(res, platform.get_game(req.matches[1], game_param(req)));
          }));
  srv.Post(sid + R"(/game/(\d+)/click)", guarded([&platform](const auto& req, auto& res) {
             send(res, platform.submit_click(req.matches[1], game_param(req), parse_body(req)));
           }));
  srv.Post(sid + "/survey", guarded([&platform](const auto& req, auto& res) {
             send(res, platform.submit_survey(req.matches[1], parse_body(req)));
           }));
  srv.Get("/api/tutorial", guarded([](const auto&, auto& res) { send(res, tutorial_content()); }));
  srv.Get("/api/admin/export", guarded([&platform](const auto& req, auto& res) {
            ExportFilter filter;
            if (req.has_param("condition")) filter.condition = label_from_string(req.get_param_value("condition"));
            filter.from_ms = int_param(req, "from");
            filter.to_ms = int_param(req, "to");
            const auto format = req.has_param("format") ? req.get_param_value("format") : "ndjson";
            if (format == "csv") {
              res.set_content(platform.export_csv(filter, bearer(req)), "text/csv");
            } else if (format == "ndjson") {
              res.set_content(platform.export_events(filter, bearer(req)), "application/x-ndjson");
            } else {
              throw ServiceError(ErrorCode::bad_request, "format must be ndjson or csv");
            }
          }));
  srv.Get("/api/admin/units", guarded([&platform](const auto& req, auto& res) {
            send(res, platform.fill_status(bearer(req)));
          }));
  srv.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    send_error(res, res.status == 404 ? ErrorCode::not_found : ErrorCode::bad_request, "no such route");
    return httplib::Server::HandlerResponse::Handled;
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  if (!impl_->server.bind_to_port(host, port)) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::start() {
  thread_ = std::thread([this] { listen(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace oilgame
