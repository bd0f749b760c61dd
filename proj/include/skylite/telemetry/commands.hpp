#pragma once

#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "skylite/world/types.hpp"

namespace skylite::telemetry {

enum class CommandKind { TakeoverStart, TakeoverEnd, ControlInput, LoadScenario, Pause, Resume };

std::string_view to_string(CommandKind k);
CommandKind command_kind_from_string(std::string_view s);  // throws ParseError

struct CommandMessage {
  CommandKind kind = CommandKind::Pause;
  std::string token;
  AgentId agent_id = 0;
  double accel_delta = 0.0;  // m/s^2, held until the next control_input
  LaneIntent lane_intent = LaneIntent::Keep;  // applied once
  std::string name;          // load_scenario
  nlohmann::json ref;        // echoed back in the reply, if present

  bool operator==(const CommandMessage&) const = default;
};

/// {"v":1,"kind":"control_input","token":..,"agent_id":..,"accel_delta":..,"lane_intent":"left"}
nlohmann::json to_json(const CommandMessage& c);
CommandMessage command_from_json(const nlohmann::json& j);  // throws ParseError

struct TakeoverChange {
  AgentId agent_id = 0;
  bool begin = true;
};

/// Result of applying the queued commands at a tick boundary.
struct DrainResult {
  std::vector<TakeoverChange> takeovers;
  std::optional<std::string> load_scenario;  // the last one queued wins
  std::size_t applied = 0;
};

/// The single ordered command path into the simulation. ingest() is called
/// from gateway threads and validates against the state the queue will
/// produce; drain() and human_action() run on the simulation thread.
class ControlDesk {
 public:
  /// An empty token accepts any command.
  explicit ControlDesk(std::string token = {});

  /// Throws BadToken, UnknownAgent, NotInTakeover, ConfigError (unknown scenario).
  void ingest(const CommandMessage& cmd);

  DrainResult drain();

  /// Replacement for `base` while its agent is taken over: base accel plus the
  /// held delta, the pending lane intent, source=human.
  std::optional<ActionCommand> human_action(const ActionCommand& base);

  /// Agents that may be taken over; drops takeovers of agents no longer present.
  void set_agents(const std::vector<AgentId>& ids);
  /// Clears every takeover, queued or live (scenario reload).
  void reset();
  void set_scenario_check(std::function<bool(const std::string&)> exists);

  bool paused() const;
  bool in_takeover(AgentId id) const;
  std::size_t queued() const;

 private:
  struct Hold {
    double accel_delta = 0.0;
    LaneIntent intent = LaneIntent::Keep;
  };

  std::string token_;
  mutable std::mutex mu_;
  std::deque<CommandMessage> queue_;
  std::set<AgentId> agents_;
  std::set<AgentId> projected_;   // takeovers once the queue is applied
  std::map<AgentId, Hold> live_;  // takeovers in effect
  bool projected_paused_ = false;
  bool paused_ = false;
  std::function<bool(const std::string&)> scenario_exists_;
};

}  // namespace skylite::telemetry
