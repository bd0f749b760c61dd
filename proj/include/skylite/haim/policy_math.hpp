#pragma once

#include <optional>
#include <span>
#include <vector>

#include "skylite/world/types.hpp"

namespace skylite::haim {

struct DiscreteAction {
  double accel = 0.0;
  LaneIntent intent = LaneIntent::Keep;
  bool operator==(const DiscreteAction&) const = default;
};

/// Ordered action set; index i of every distribution refers to actions[i].
struct DiscreteActionSet {
  std::vector<DiscreteAction> actions;

  std::size_t size() const { return actions.size(); }
  /// Nearest accel level among actions with the same intent (lowest index on ties).
  std::size_t nearest(double accel, LaneIntent intent) const;
  bool operator==(const DiscreteActionSet&) const = default;
};

// spans the full braking clamp so a guardian's hardest command is expressible
inline const std::vector<double> kDefaultAccelLevels = {-8.0, -3.0, -1.0, 0.0, 1.0, 3.0, 4.0};

/// levels x {keep, left, right}, level-major. Throws InvalidScenario when a
/// level leaves `limits` or the set would be empty.
DiscreteActionSet make_action_set(const std::vector<double>& levels = kDefaultAccelLevels,
                                  const AccelLimits& limits = {});

using Distribution = std::vector<double>;

inline constexpr double kNormTolerance = 1e-9;

/// Throws UnnormalizedPolicy unless entries are finite, non-negative and sum
/// to 1 within kNormTolerance.
void require_normalized(std::span<const double> p, const char* what);

struct MixedPolicyContext {
  bool human_active = false;
  std::optional<ActionCommand> human_action;
  double eta = 0.5;
  std::vector<std::size_t> admissible;  // A_eta, ascending indices
  double F = 0.0;                       // rejected mass under pi_AV
  std::vector<int> I;                   // 1 where the action would be rejected
};

MixedPolicyContext build_context(std::span<const double> pi_av, const DiscreteActionSet& actions,
                                 bool human_active, const std::optional<ActionCommand>& human_action,
                                 double eta);

/// pi_AV(a)(1 - I(a)) + pi_human(a) F, as printed.
Distribution mixed_policy(std::span<const double> pi_av, std::span<const double> pi_human,
                          const MixedPolicyContext& ctx);

/// Point mass on the discrete action nearest to a human command.
Distribution human_distribution(const DiscreteActionSet& actions, const ActionCommand& human);

inline constexpr double kKlSmoothing = 1e-6;

/// Weighted mean over states of KL(pi_human || pi_AV), both smoothed as
/// (p + eps) / (1 + K eps). Rows are states; weights need not be normalized.
double discrepancy(std::span<const Distribution> pi_av, std::span<const Distribution> pi_human,
                   std::span<const double> state_weights, double eps = kKlSmoothing);

}  // namespace skylite::haim
