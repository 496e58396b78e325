#include "oilgame/http_client.hpp"

#include <httplib.h>

namespace oilgame {

struct HttpClient::Impl {
  explicit Impl(const std::string& endpoint) : client(endpoint) {
    client.set_connection_timeout(5);
    client.set_read_timeout(30);
  }
  httplib::Client client;

  static Json unpack(const httplib::Result& res) {
    if (!res) throw std::runtime_error("HTTP request failed: " + httplib::to_string(res.error()));
    if (res->status >= 400) {
      std::string code = "bad_request", message = res->body;
      try {
        const auto j = Json::parse(res->body);
        code = j.at("error").at("code").get<std::string>();
        message = j.at("error").at("message").get<std::string>();
      } catch (const std::exception&) {
      }
      throw ServiceError(error_code_from_string(code), message);
    }
    return Json::parse(res->body);
  }
  Json get(const std::string& path) { return unpack(client.Get(path)); }
  Json post(const std::string& path, const Json& body) {
    return unpack(client.Post(path, body.dump(), "application/json"));
  }
};

HttpClient::HttpClient(const std::string& endpoint) : impl_(std::make_unique<Impl>(endpoint)) {}
HttpClient::~HttpClient() = default;

Json HttpClient::create_session(const Json& body) { return impl_->post("/api/session", body); }
Json HttpClient::submit_demographics(const std::string& sid, const Json& body) {
  return impl_->post("/api/session/" + sid + "/demographics", body);
}
Json HttpClient::complete_tutorial(const std::string& sid) {
  return impl_->get("/api/session/" + sid + "/tutorial/complete");
}
Json HttpClient::get_game(const std::string& sid, int g) {
  return impl_->get("/api/session/" + sid + "/game/" + std::to_string(g));
}
Json HttpClient::submit_click(const std::string& sid, int g, const Json& body) {
  return impl_->post("/api/session/" + sid + "/game/" + std::to_string(g) + "/click", body);
}
Json HttpClient::submit_survey(const std::string& sid, const Json& body) {
  return impl_->post("/api/session/" + sid + "/survey", body);
}

std::string HttpClient::export_events(const std::string& admin_token) {
  auto res = impl_->client.Get("/api/admin/export", httplib::Headers{{"Authorization", "Bearer " + admin_token}});
  if (!res) throw std::runtime_error("HTTP request failed: " + httplib::to_string(res.error()));
  if (res->status >= 400) Impl::unpack(res);
  return res->body;
}

}  // namespace oilgame
