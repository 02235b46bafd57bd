#include "sgp/service_client.hpp"

#include <httplib.h>

#include "sgp/embed.hpp"

namespace sgp {

ServiceClient::ServiceClient(std::string endpoint, int timeout_seconds,
                             std::optional<std::string> auth_token)
    : endpoint_(std::move(endpoint)), timeout_seconds_(timeout_seconds), auth_token_(std::move(auth_token)) {
  while (!endpoint_.empty() && endpoint_.back() == '/') endpoint_.pop_back();
}

namespace {

httplib::Client make_client(const std::string& endpoint, int timeout_seconds,
                            const std::optional<std::string>& token) {
  httplib::Client client(endpoint);
  client.set_connection_timeout(timeout_seconds, 0);
  client.set_read_timeout(timeout_seconds, 0);
  client.set_write_timeout(timeout_seconds, 0);
  if (token) client.set_default_headers({{"X-Service-Token", *token}});
  return client;
}

nlohmann::json decode(const httplib::Result& res, const std::string& what) {
  if (!res) throw ServiceError(what + ": transport failure (" + httplib::to_string(res.error()) + ")");
  if (res->status < 200 || res->status >= 300)
    throw ServiceError(what + ": HTTP " + std::to_string(res->status) + ": " + res->body);
  try {
    return nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw ServiceError(what + ": malformed JSON reply: " + e.what());
  }
}

}  // namespace

nlohmann::json ServiceClient::post(const std::string& route, const nlohmann::json& body) const {
  auto client = make_client(endpoint_, timeout_seconds_, auth_token_);
  auto res = client.Post(route, body.dump(), "application/json");
  return decode(res, "POST " + route);
}

nlohmann::json ServiceClient::get(const std::string& route) const {
  auto client = make_client(endpoint_, timeout_seconds_, auth_token_);
  return decode(client.Get(route), "GET " + route);
}

bool ServiceClient::healthy() const {
  try {
    auto reply = get("/v1/health");
    return reply.value("status", "") == "ok";
  } catch (const ServiceError&) {
    return false;
  }
}

std::string base64_encode(const std::string& bytes) { return httplib::detail::base64_encode(bytes); }

}  // namespace sgp
