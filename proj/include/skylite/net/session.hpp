#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "skylite/behavior/controller.hpp"
#include "skylite/net/protocol.hpp"
#include "skylite/world/scenario.hpp"

namespace skylite::net {

inline constexpr std::uint16_t kDefaultControlPort = 7700;
inline constexpr std::uint16_t kDefaultTelemetryPort = 7701;

using skylite::ControllerLookup;
using skylite::local_action;

struct SessionEvent {
  std::string kind;  // client_joined, client_lost, desync, input_rejected, fallback
  std::uint32_t client_id = 0;
  Tick tick = 0;
  std::string detail;
};

struct HostConfig {
  std::string bind_address = "127.0.0.1";
  std::uint16_t control_port = kDefaultControlPort;  // 0 picks an ephemeral port
  std::uint16_t telemetry_port = kDefaultTelemetryPort;
  std::chrono::milliseconds deadline{50};
  int wait_clients = -1;  // -1: one per distinct nonzero slot in the scenario
  std::chrono::milliseconds join_timeout{30000};
  Tick heartbeat_interval = 20;
  int missed_heartbeats = 3;
};

/// The authoritative lockstep participant. Single-threaded: every method runs
/// the network loop on the calling thread.
class HostSession {
 public:
  HostSession(ScenarioSpec spec, HostConfig cfg = {});
  ~HostSession();
  HostSession(const HostSession&) = delete;
  HostSession& operator=(const HostSession&) = delete;

  void start();
  std::uint16_t control_port() const;
  std::uint16_t telemetry_port() const;

  /// Blocks until the configured number of clients are in lockstep.
  /// Throws ChannelClosed on join_timeout.
  void wait_for_clients();
  void wait_for_clients(std::size_t count);

  /// Collects inputs for the current tick until all live clients have
  /// submitted or the deadline passes, substitutes fallbacks, steps, and
  /// broadcasts the commit.
  TickCommit advance();

  /// Services the network without advancing (accepts joins, drains inputs).
  void poll();

  /// Replaces the scenario mid-session; clients reset to its initial world.
  void load_scenario(ScenarioSpec spec);

  void close(const std::string& reason);

  void set_controllers(ControllerLookup lookup);
  void set_event_handler(std::function<void(const SessionEvent&)> handler);

  /// Consulted for every agent after inputs are gathered; a returned action
  /// replaces the gathered one in the commit (human takeover).
  using ActionOverride = std::function<std::optional<ActionCommand>(const WorldState&, const ActionCommand&)>;
  void set_action_override(ActionOverride fn);

  const WorldState& world() const;
  const ScenarioSpec& spec() const;
  std::size_t live_clients() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct ClientConfig {
  std::string host = "127.0.0.1";
  std::uint16_t control_port = kDefaultControlPort;
  std::uint16_t telemetry_port = kDefaultTelemetryPort;
  std::string name = "client";
  std::chrono::milliseconds connect_timeout{10000};
  std::chrono::milliseconds idle_timeout{30000};
  Tick heartbeat_interval = 20;
  std::optional<Tick> corrupt_at_tick;  // fault injection: perturb state after this commit
};

enum class ClientExitReason { Bye, Desync, ChannelClosed, Timeout, Stopped };

struct ClientExit {
  ClientExitReason reason = ClientExitReason::Bye;
  Tick tick = 0;
  std::string detail;
};

std::string_view to_string(ClientExitReason r);

class ClientSession {
 public:
  explicit ClientSession(ClientConfig cfg);
  ~ClientSession();
  ClientSession(const ClientSession&) = delete;
  ClientSession& operator=(const ClientSession&) = delete;

  /// Hello, Welcome, LoadScenario, then a Snapshot over telemetry. Throws
  /// ChannelClosed or VersionMismatch.
  void connect();

  /// Applies commits, verifies digests, submits inputs until Bye, desync,
  /// connection loss, or `max_commits` commits.
  ClientExit run(std::optional<std::uint64_t> max_commits = std::nullopt);

  void set_controllers(ControllerLookup lookup);
  void set_commit_handler(std::function<void(const TickCommit&, const WorldState&)> handler);

  std::uint32_t client_id() const;
  const std::vector<AgentId>& agents() const;
  const WorldState& world() const;
  const ScenarioSpec& spec() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace skylite::net
