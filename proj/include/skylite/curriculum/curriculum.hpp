#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "skylite/behavior/controller.hpp"
#include "skylite/world/metrics.hpp"
#include "skylite/world/scenario.hpp"

namespace skylite::curriculum {

enum class InsightKind { LateBrakingAtIntersection, UnsafeMergeResponse, TailgatingUnderCutin, FailureToYield };

std::string_view to_string(InsightKind k);
InsightKind insight_kind_from_string(std::string_view s);  // throws ConfigError

struct InsightTag {
  InsightKind kind = InsightKind::LateBrakingAtIntersection;
  std::string note;
};

/// Window before the first failure in which a lane change counts as its cause.
inline constexpr Tick kCauseWindowTicks = 60;

/// Rule-based failure analysis, first match wins:
///   partner on a crossing lane                          -> failure_to_yield
///   partner moved into the ego lane within the window   -> tailgating_under_cutin
///   ego changed or was changing lanes within the window -> unsafe_merge_response
///   otherwise (rear conflict, braking leader or not)    -> late_braking_at_intersection
/// The failure is the first tick with an ego collision or leading TTC under
/// kSafetyViolationTtc. Throws NoFailureInTrace.
InsightTag derive_insight(std::span<const WorldState> trace, const MetricsReport& metrics,
                          const ScenarioSpec& spec);

enum class Family { CutIn, LeadBrake, CrossPath };

std::string_view to_string(Family f);
Family family_from_string(std::string_view s);  // throws ConfigError

struct CandidateParams {
  double trigger_gap = 25.0;     // m; for cross_path, distance to the conflict point
  double lateral_offset = 0.0;   // m, final offset from the lane center
  double decel = 5.0;            // m/s^2 magnitude; for cross_path, the launch acceleration
  Tick start_tick = 40;
};

struct BVCandidate {
  Family family = Family::LeadBrake;
  CandidateParams params;
  AgentId agent_id = 0;
  std::vector<ScriptSample> trajectory;  // one sample per tick, starting at tick 0
};

inline constexpr double kMaxBvAccel = 8.0;     // m/s^2
inline constexpr double kProfileJerk = 10.0;   // m/s^3, ramp rate of realized profiles
inline constexpr double kJerkNorm = 5.0;       // m/s^3, mean |jerk| that zeroes the prior
inline constexpr double kCrossPathTopSpeed = 15.0;
inline constexpr double kCutInBrakeSeconds = 2.0;

/// Builds the background trajectory over spec.max_ticks + 1 samples relative
/// to the scenario's ego. The result may be infeasible (see feasible()).
/// Throws InfeasibleCandidate when the geometry is missing (no neighbor lane
/// for cut_in, no crossing lane for cross_path) and SpecConflict when
/// `agent_id` is taken.
BVCandidate realize(Family family, const CandidateParams& params, const ScenarioSpec& base, AgentId agent_id);

/// Lowest agent id above every id in the scenario.
AgentId free_agent_id(const ScenarioSpec& spec);

/// |accel| <= kMaxBvAccel, v >= 0, finite, and on its lane.
bool feasible(const BVCandidate& c, const ScenarioSpec& spec);

/// 1 - mean |jerk| / kJerkNorm, floored at 0, from finite differences of v.
double smoothness(std::span<const ScriptSample> trajectory, double dt);

/// Base scenario plus the candidate as a scripted agent. Throws SpecConflict
/// and InfeasibleCandidate.
ScenarioSpec emit_scenario(const ScenarioSpec& base, const BVCandidate& winner);

class RolloutEngine {
 public:
  virtual ~RolloutEngine() = default;
  /// Deterministic given (spec, seed). The trace starts at tick 0.
  virtual std::vector<WorldState> rollout(const ScenarioSpec& spec, std::uint64_t seed) const = 0;
};

/// Runs the scenario locally with the ego driven by a fresh controller from
/// `ego_factory` (a lane-keeping IdmController when empty). The ego's initial speed is
/// perturbed uniformly by +-speed_jitter from the seed. Stops at the first collision.
class ControllerRolloutEngine final : public RolloutEngine {
 public:
  using Factory = std::function<std::unique_ptr<Controller>()>;
  explicit ControllerRolloutEngine(Factory ego_factory = {}, double speed_jitter = 0.0);
  std::vector<WorldState> rollout(const ScenarioSpec& spec, std::uint64_t seed) const override;

 private:
  Factory factory_;
  double jitter_;
};

inline constexpr Tick kInteractionTicks = 100;
inline constexpr double kBrakeOnsetAccel = -3.0;

struct RolloutOutcome {
  bool completed = false;  // reached the end of the interaction window without an ego collision
  bool collided = false;
  double min_ttc = 0.0;       // leading TTC of the ego, may be infinite
  double min_distance = 0.0;  // ego to candidate, center to center
  bool yielded = false;       // ego fell below half its speed at start_tick
  std::optional<double> braking_onset;  // s after start_tick

  nlohmann::json to_json() const;
};

RolloutOutcome summarize_rollout(std::span<const WorldState> trace, const ScenarioSpec& spec,
                                 const BVCandidate& c);

/// Graded match of one rollout against the insight's signature, in [0, 1].
/// Zero whenever the family does not fit the insight.
double alignment(InsightKind insight, Family family, const RolloutOutcome& o);

struct CandidateScore {
  double prior = 0.0;
  double response_likelihood = 0.0;
  double alignment = 0.0;
  double total = 0.0;
  std::vector<RolloutOutcome> outcomes;

  nlohmann::json to_json() const;
};

inline constexpr int kDefaultRollouts = 5;

/// Infeasible candidates score zero without rollouts. Rollout i uses seed + i.
CandidateScore score_candidate(const BVCandidate& c, const InsightTag& insight, const RolloutEngine& engine,
                               const ScenarioSpec& base, int k = kDefaultRollouts, std::uint64_t seed = 0);

struct OptimizeResult {
  std::size_t index = 0;
  BVCandidate winner;
  std::vector<CandidateScore> scores;  // by grid index
};

/// Exhaustive argmax of the total; ties go to the lowest grid index. Scoring
/// runs on `threads` workers and merges by index. Throws EmptyGrid.
OptimizeResult optimize(std::span<const BVCandidate> grid, const InsightTag& insight, const RolloutEngine& engine,
                        const ScenarioSpec& base, int k = kDefaultRollouts, std::uint64_t seed = 0,
                        unsigned threads = 0);

/// 3 x 3 x 3 grid over trigger gap, decel and start tick; cross_path launch
/// ticks bracket the ego's arrival at the conflict point.
std::vector<BVCandidate> make_grid(Family family, const ScenarioSpec& base);

/// The family a given insight is usually probed with.
Family family_for(InsightKind insight);

/// Writes <dir>/<name>.json for the emitted winner plus <dir>/manifest.json.
void write_batch(const std::filesystem::path& dir, const ScenarioSpec& emitted, const InsightTag& insight,
                 std::span<const BVCandidate> grid, const OptimizeResult& result);

/// Two-lane straight road with a crossing lane at x = 300, ego plus one
/// behavior-model leader. The default curriculum base.
ScenarioSpec crossing_base_scenario();

}  // namespace skylite::curriculum
