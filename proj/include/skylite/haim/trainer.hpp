#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <json.hpp>

#include "skylite/behavior/controller.hpp"
#include "skylite/haim/critics.hpp"

namespace skylite::haim {

/// Decides, per tick, whether the mentor takes over the ego and with what.
using Mentor = std::function<std::optional<ActionCommand>(const WorldState&, AgentId ego, const ScenarioSpec&)>;

/// The scripted guardian as a mentor.
Mentor guardian_mentor(double ttc_threshold);

/// A mentor that never intervenes.
Mentor absent_mentor();

/// Random hard-braking episodes for one background agent (the toy leader).
struct LeadDisturbance {
  AgentId agent = 2;
  double cruise_speed = 20.0;
  double brake_min = -6.0;
  double brake_max = -3.0;
  double duration_min = 1.0;  // s
  double duration_max = 3.0;
  Tick earliest = 20;
  Tick latest = 300;
  int events = 2;
};

/// Policy table pi(a|s), states x actions row-major.
struct Theta {
  StateGrid grid;
  DiscreteActionSet actions;
  std::vector<double> table;

  std::span<const double> row(std::size_t state) const;
  std::size_t greedy(std::size_t state) const;  // lowest index on ties
  bool operator==(const Theta&) const = default;
};

Theta uniform_theta(const StateGrid& grid, const DiscreteActionSet& actions);
Theta theta_from_critics(const CriticSet& critics, const LearningConfig& cfg, const DiscreteActionSet& actions);

/// Writes `<path>` (JSON header) and the flat little-endian f64 table next to
/// it as `<stem>.bin`.
void save_theta(const Theta& theta, const std::filesystem::path& path);
Theta load_theta(const std::filesystem::path& path);

struct SegmentStep {
  Tick tick = 0;
  double s = 0.0;
  double v = 0.0;
  double accel = 0.0;
  ActionSource source = ActionSource::Policy;
  double ttc = 0.0;
  bool operator==(const SegmentStep&) const = default;
};

/// Trajectory slices around one takeover; the post segment is preferred.
struct PreferencePair {
  int episode = 0;
  Tick takeover_tick = 0;
  std::vector<SegmentStep> pre;   // ends at takeover_tick
  std::vector<SegmentStep> post;  // starts at takeover_tick
  bool post_preferred = true;
};

nlohmann::json to_json(const PreferencePair& p);

struct EpisodeLog {
  int episode = 0;
  Tick ticks = 0;
  int interventions = 0;    // steps where the mentor's action replaced the agent's
  int takeover_events = 0;  // maximal runs of mentor activity
  int collisions = 0;
  int safety_violations = 0;
  bool success = false;
  double route_completion = 0.0;
  double disturbance_rate = 0.0;
  double average_speed = 0.0;
  double min_ttc = 0.0;
  double rejected_mass = 0.0;  // mean F over mentor-active steps
  std::uint64_t samples = 0;   // cumulative environment steps
};

nlohmann::json to_json(const EpisodeLog& e);

struct TrainOptions {
  LearningConfig cfg;
  std::optional<LeadDisturbance> disturbance;
  std::uint64_t seed = 0;
  Tick pair_window = 20;
  std::function<void(const EpisodeLog&)> on_episode;
};

struct TrainResult {
  Theta theta;
  CriticSet critics;
  std::vector<EpisodeLog> log;
  std::vector<PreferencePair> pairs;
};

/// Guardian-style mentored tabular training of the scenario's ego.
TrainResult train(const ScenarioSpec& spec, const Mentor& mentor, const TrainOptions& opt);

/// One lane, a policy-driven ego following a leader that brakes at random.
ScenarioSpec toy_two_vehicle_scenario();
LeadDisturbance toy_disturbance();

/// Drives an agent with the greedy action of a learned table.
class PolicyController final : public Controller {
 public:
  explicit PolicyController(Theta theta) : theta_(std::move(theta)) {}
  ActionCommand act(const WorldState& world, AgentId agent, const ScenarioSpec& spec) override;
  const Theta& theta() const { return theta_; }

 private:
  Theta theta_;
};

}  // namespace skylite::haim
