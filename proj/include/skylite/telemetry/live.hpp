#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "skylite/net/session.hpp"
#include "skylite/telemetry/commands.hpp"
#include "skylite/telemetry/events.hpp"
#include "skylite/telemetry/gateway.hpp"
#include "skylite/telemetry/run_log.hpp"

namespace skylite::telemetry {

struct LiveConfig {
  net::HostConfig host;
  bool serve_gateway = true;
  GatewayConfig gateway;  // runs_dir is taken from `runs_dir`
  std::filesystem::path runs_dir = "runs";
  std::string run_id;  // empty: run-<utc timestamp>
  std::string token;
  nlohmann::json config_echo = nlohmann::json::object();  // copied into every scenario_loaded event
  Tick metric_interval = 20;
  bool agent_state_events = true;
  /// load_scenario(name) support; nullopt for unknown names.
  std::function<std::optional<ScenarioSpec>(const std::string&)> resolve_scenario;
};

struct RunSummary {
  Tick ticks = 0;
  std::uint64_t final_digest = 0;
  std::filesystem::path run_file;
  std::uint64_t events = 0;
};

/// Agent payload for agent_state events; TTC is null when not closing.
nlohmann::json agent_state_payload(const WorldState& w, const AgentState& a, const ScenarioSpec& spec);

/// Lockstep host with telemetry: every commit is published (tick_commit,
/// agent_state, periodic metric) and persisted; queued commands are applied
/// at tick boundaries. Single simulation thread; the gateway runs beside it.
class LiveHost {
 public:
  LiveHost(ScenarioSpec spec, LiveConfig cfg);
  ~LiveHost();
  LiveHost(const LiveHost&) = delete;
  LiveHost& operator=(const LiveHost&) = delete;

  void start();
  void wait_for_clients();

  /// Applies queued commands, then advances one tick unless paused.
  std::optional<net::TickCommit> tick();
  /// Commits `ticks` ticks; paused time does not count. `pace` > 0 spaces ticks in wall time.
  RunSummary run(Tick ticks, std::chrono::milliseconds pace = std::chrono::milliseconds(0));
  void close(const std::string& reason = "run complete");

  EventBus& bus();
  ControlDesk& desk();
  net::HostSession& session();
  std::uint16_t gateway_port() const;
  std::filesystem::path run_file() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace skylite::telemetry
