#include "skylite/world/types.hpp"

#include <algorithm>
#include <string>

#include "skylite/core/error.hpp"

namespace skylite {

std::string_view to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::RuleBased: return "rule_based";
    case AgentKind::PolicyDriven: return "policy_driven";
    case AgentKind::HumanControllable: return "human_controllable";
    case AgentKind::ScriptedReplay: return "scripted_replay";
  }
  return "rule_based";
}

std::string_view to_string(LaneChange lc) {
  switch (lc) {
    case LaneChange::None: return "none";
    case LaneChange::ToLeft: return "to_left";
    case LaneChange::ToRight: return "to_right";
  }
  return "none";
}

std::string_view to_string(LaneIntent intent) {
  switch (intent) {
    case LaneIntent::Keep: return "keep";
    case LaneIntent::Left: return "left";
    case LaneIntent::Right: return "right";
  }
  return "keep";
}

std::string_view to_string(ActionSource source) {
  switch (source) {
    case ActionSource::BehaviorModel: return "behavior_model";
    case ActionSource::Policy: return "policy";
    case ActionSource::Human: return "human";
    case ActionSource::Fallback: return "fallback";
  }
  return "behavior_model";
}

namespace {
[[noreturn]] void bad_enum(std::string_view what, std::string_view s) {
  throw Error(ErrorCode::ParseError, "unknown " + std::string(what) + " '" + std::string(s) + "'");
}
}  // namespace

AgentKind agent_kind_from_string(std::string_view s) {
  if (s == "rule_based") return AgentKind::RuleBased;
  if (s == "policy_driven") return AgentKind::PolicyDriven;
  if (s == "human_controllable") return AgentKind::HumanControllable;
  if (s == "scripted_replay") return AgentKind::ScriptedReplay;
  bad_enum("agent kind", s);
}

LaneIntent lane_intent_from_string(std::string_view s) {
  if (s == "keep") return LaneIntent::Keep;
  if (s == "left") return LaneIntent::Left;
  if (s == "right") return LaneIntent::Right;
  bad_enum("lane intent", s);
}

ActionSource action_source_from_string(std::string_view s) {
  if (s == "behavior_model") return ActionSource::BehaviorModel;
  if (s == "policy") return ActionSource::Policy;
  if (s == "human") return ActionSource::Human;
  if (s == "fallback") return ActionSource::Fallback;
  bad_enum("action source", s);
}

LaneChange lane_change_from_string(std::string_view s) {
  if (s == "none") return LaneChange::None;
  if (s == "to_left") return LaneChange::ToLeft;
  if (s == "to_right") return LaneChange::ToRight;
  bad_enum("lane change", s);
}

const AgentState* WorldState::find(AgentId id) const {
  auto it = std::lower_bound(agents.begin(), agents.end(), id,
                             [](const AgentState& a, AgentId v) { return a.agent_id < v; });
  return (it != agents.end() && it->agent_id == id) ? &*it : nullptr;
}

AgentState* WorldState::find(AgentId id) {
  auto it = std::lower_bound(agents.begin(), agents.end(), id,
                             [](const AgentState& a, AgentId v) { return a.agent_id < v; });
  return (it != agents.end() && it->agent_id == id) ? &*it : nullptr;
}

}  // namespace skylite
