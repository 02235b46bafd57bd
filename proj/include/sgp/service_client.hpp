#pragma once

#include <optional>
#include <string>

#include <json.hpp>

namespace sgp {

// Thin JSON-over-HTTP/1.1 transport to the scoring service. Throws ServiceError
// on connection failure, non-2xx status, or a body that is not JSON.
class ServiceClient {
 public:
  explicit ServiceClient(std::string endpoint, int timeout_seconds = 60,
                         std::optional<std::string> auth_token = std::nullopt);

  nlohmann::json post(const std::string& route, const nlohmann::json& body) const;
  nlohmann::json get(const std::string& route) const;

  // GET /v1/health → {"status":"ok"}.
  bool healthy() const;

  const std::string& endpoint() const { return endpoint_; }

 private:
  std::string endpoint_;
  int timeout_seconds_;
  std::optional<std::string> auth_token_;
};

std::string base64_encode(const std::string& bytes);

}  // namespace sgp
