#include "skylite/telemetry/commands.hpp"

#include <array>
#include <cmath>

#include "skylite/core/error.hpp"
#include "skylite/telemetry/events.hpp"

namespace skylite::telemetry {

namespace {
constexpr std::array<std::pair<CommandKind, std::string_view>, 6> kNames{{
    {CommandKind::TakeoverStart, "takeover_start"},
    {CommandKind::TakeoverEnd, "takeover_end"},
    {CommandKind::ControlInput, "control_input"},
    {CommandKind::LoadScenario, "load_scenario"},
    {CommandKind::Pause, "pause"},
    {CommandKind::Resume, "resume"},
}};

bool needs_agent(CommandKind k) {
  return k == CommandKind::TakeoverStart || k == CommandKind::TakeoverEnd || k == CommandKind::ControlInput;
}
}  // namespace

std::string_view to_string(CommandKind k) {
  for (const auto& [kind, name] : kNames)
    if (kind == k) return name;
  return "?";
}

CommandKind command_kind_from_string(std::string_view s) {
  for (const auto& [kind, name] : kNames)
    if (name == s) return kind;
  throw Error(ErrorCode::ParseError, "unknown command '" + std::string(s) + "'");
}

nlohmann::json to_json(const CommandMessage& c) {
  nlohmann::json j = {{"v", kSchemaVersion}, {"kind", to_string(c.kind)}, {"token", c.token}};
  if (needs_agent(c.kind)) j["agent_id"] = c.agent_id;
  if (c.kind == CommandKind::ControlInput) {
    j["accel_delta"] = c.accel_delta;
    j["lane_intent"] = to_string(c.lane_intent);
  }
  if (c.kind == CommandKind::LoadScenario) j["name"] = c.name;
  if (!c.ref.is_null()) j["ref"] = c.ref;
  return j;
}

CommandMessage command_from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "command must be a JSON object");
    if (j.value("v", 0) != kSchemaVersion) throw Error(ErrorCode::ParseError, "unsupported command schema");
    CommandMessage c;
    c.kind = command_kind_from_string(j.at("kind").get<std::string>());
    c.token = j.value("token", std::string{});
    if (needs_agent(c.kind)) c.agent_id = j.at("agent_id").get<AgentId>();
    if (c.kind == CommandKind::ControlInput) {
      c.accel_delta = j.value("accel_delta", 0.0);
      if (!std::isfinite(c.accel_delta)) throw Error(ErrorCode::ParseError, "accel_delta must be finite");
      c.lane_intent = lane_intent_from_string(j.value("lane_intent", std::string("keep")));
    }
    if (c.kind == CommandKind::LoadScenario) c.name = j.at("name").get<std::string>();
    if (j.contains("ref")) c.ref = j.at("ref");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("command: ") + e.what());
  }
}

ControlDesk::ControlDesk(std::string token) : token_(std::move(token)) {}

void ControlDesk::ingest(const CommandMessage& cmd) {
  if (!token_.empty() && cmd.token != token_) throw Error(ErrorCode::BadToken, "token rejected");
  std::lock_guard lock(mu_);
  switch (cmd.kind) {
    case CommandKind::TakeoverStart:
      if (!agents_.count(cmd.agent_id))
        throw Error(ErrorCode::UnknownAgent, "no agent " + std::to_string(cmd.agent_id));
      projected_.insert(cmd.agent_id);
      break;
    case CommandKind::TakeoverEnd:
    case CommandKind::ControlInput:
      if (!projected_.count(cmd.agent_id))
        throw Error(ErrorCode::NotInTakeover, "agent " + std::to_string(cmd.agent_id) + " is not taken over");
      if (cmd.kind == CommandKind::TakeoverEnd) projected_.erase(cmd.agent_id);
      break;
    case CommandKind::LoadScenario:
      if (scenario_exists_ && !scenario_exists_(cmd.name))
        throw Error(ErrorCode::ConfigError, "unknown scenario '" + cmd.name + "'");
      projected_.clear();
      break;
    case CommandKind::Pause: projected_paused_ = true; break;
    case CommandKind::Resume: projected_paused_ = false; break;
  }
  queue_.push_back(cmd);
}

DrainResult ControlDesk::drain() {
  std::lock_guard lock(mu_);
  DrainResult r;
  for (; !queue_.empty(); queue_.pop_front(), ++r.applied) {
    const CommandMessage& c = queue_.front();
    switch (c.kind) {
      case CommandKind::TakeoverStart:
        if (live_.emplace(c.agent_id, Hold{}).second) r.takeovers.push_back({c.agent_id, true});
        break;
      case CommandKind::TakeoverEnd:
        if (live_.erase(c.agent_id)) r.takeovers.push_back({c.agent_id, false});
        break;
      case CommandKind::ControlInput:
        if (auto it = live_.find(c.agent_id); it != live_.end()) it->second = {c.accel_delta, c.lane_intent};
        break;
      case CommandKind::LoadScenario:
        for (const auto& [id, h] : live_) r.takeovers.push_back({id, false});
        live_.clear();
        r.load_scenario = c.name;
        break;
      case CommandKind::Pause: paused_ = true; break;
      case CommandKind::Resume: paused_ = false; break;
    }
  }
  return r;
}

std::optional<ActionCommand> ControlDesk::human_action(const ActionCommand& base) {
  std::lock_guard lock(mu_);
  auto it = live_.find(base.agent_id);
  if (it == live_.end()) return std::nullopt;
  ActionCommand a = base;
  a.accel = base.accel + it->second.accel_delta;
  a.lane_intent = it->second.intent;
  a.source = ActionSource::Human;
  it->second.intent = LaneIntent::Keep;
  return a;
}

void ControlDesk::set_agents(const std::vector<AgentId>& ids) {
  std::lock_guard lock(mu_);
  agents_ = {ids.begin(), ids.end()};
  std::erase_if(projected_, [&](AgentId a) { return !agents_.count(a); });
  std::erase_if(live_, [&](const auto& kv) { return !agents_.count(kv.first); });
}

void ControlDesk::reset() {
  std::lock_guard lock(mu_);
  projected_.clear();
  live_.clear();
  std::erase_if(queue_, [](const CommandMessage& c) { return needs_agent(c.kind); });
}

void ControlDesk::set_scenario_check(std::function<bool(const std::string&)> exists) {
  std::lock_guard lock(mu_);
  scenario_exists_ = std::move(exists);
}

bool ControlDesk::paused() const {
  std::lock_guard lock(mu_);
  return paused_;
}

bool ControlDesk::in_takeover(AgentId id) const {
  std::lock_guard lock(mu_);
  return live_.count(id) > 0;
}

std::size_t ControlDesk::queued() const {
  std::lock_guard lock(mu_);
  return queue_.size();
}

}  // namespace skylite::telemetry
