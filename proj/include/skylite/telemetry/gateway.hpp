#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "skylite/telemetry/commands.hpp"
#include "skylite/telemetry/events.hpp"

namespace skylite::telemetry {

inline constexpr std::uint16_t kDefaultGatewayPort = 7702;

struct GatewayConfig {
  std::string bind_address = "127.0.0.1";
  std::uint16_t port = kDefaultGatewayPort;  // 0 picks an ephemeral port
  std::filesystem::path runs_dir = "runs";
  std::size_t backlog = kSubscriberBacklog;
};

/// HTTP and WebSocket on one port, served from a background thread.
///   GET /ws[?kinds=metric,agent_state]  upgrade; events out, commands in (JSON text frames)
///   GET /runs                           index.json of persisted runs
///   GET /runs/{id}                      the run's JSON-lines log
/// Each command frame is answered with {"v":1,"kind":"ack",...} or
/// {"v":1,"kind":"error","code":...,"message":...}, echoing "ref" when given.
/// A subscriber that falls `backlog` events behind is closed with reason BacklogExceeded.
class Gateway {
 public:
  Gateway(EventBus& bus, ControlDesk& desk, GatewayConfig cfg = {});
  ~Gateway();
  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  /// Throws ChannelClosed when the port cannot be bound.
  void start();
  void stop();
  std::uint16_t port() const;
  std::size_t connections() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace skylite::telemetry
