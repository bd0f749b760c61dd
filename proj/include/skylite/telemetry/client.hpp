#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

namespace skylite::telemetry {

struct HttpResult {
  int status = 0;
  std::string content_type;
  std::string body;
};

/// One blocking GET. Throws ChannelClosed.
HttpResult http_get(const std::string& host, std::uint16_t port, const std::string& target);

/// Blocking WebSocket client for the gateway's /ws endpoint.
class GatewayClient {
 public:
  /// Throws ChannelClosed.
  GatewayClient(const std::string& host, std::uint16_t port, const std::string& target = "/ws");
  ~GatewayClient();

  void send(const nlohmann::json& j);
  /// Next frame, or nullopt on timeout or close.
  std::optional<nlohmann::json> recv(std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));

  /// Skips frames until `pred` holds.
  template <class Pred>
  std::optional<nlohmann::json> recv_until(Pred pred, std::chrono::milliseconds timeout = std::chrono::milliseconds(5000)) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (auto now = std::chrono::steady_clock::now(); now < deadline; now = std::chrono::steady_clock::now()) {
      auto j = recv(std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now));
      if (!j) return std::nullopt;
      if (pred(*j)) return j;
    }
    return std::nullopt;
  }

  void close();
  std::string close_reason() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace skylite::telemetry
