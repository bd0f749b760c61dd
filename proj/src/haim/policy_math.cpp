#include "skylite/haim/policy_math.hpp"

#include <cmath>
#include <string>

#include "skylite/core/error.hpp"

namespace skylite::haim {

std::size_t DiscreteActionSet::nearest(double accel, LaneIntent intent) const {
  std::size_t best = actions.size();
  double best_d = 0.0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (actions[i].intent != intent) continue;
    const double d = std::fabs(actions[i].accel - accel);
    if (best == actions.size() || d < best_d) {
      best = i;
      best_d = d;
    }
  }
  if (best == actions.size()) throw Error(ErrorCode::InvalidScenario, "no action with that lane intent");
  return best;
}

DiscreteActionSet make_action_set(const std::vector<double>& levels, const AccelLimits& limits) {
  if (levels.empty()) throw Error(ErrorCode::InvalidScenario, "action set needs at least one level");
  DiscreteActionSet set;
  for (double lvl : levels) {
    if (!std::isfinite(lvl) || lvl < limits.min || lvl > limits.max)
      throw Error(ErrorCode::InvalidScenario, "accel level " + std::to_string(lvl) + " outside limits");
    for (LaneIntent in : {LaneIntent::Keep, LaneIntent::Left, LaneIntent::Right}) set.actions.push_back({lvl, in});
  }
  return set;
}

void require_normalized(std::span<const double> p, const char* what) {
  double sum = 0.0;
  for (double x : p) {
    if (!std::isfinite(x) || x < 0.0)
      throw Error(ErrorCode::UnnormalizedPolicy, std::string(what) + " has a negative or non-finite entry");
    sum += x;
  }
  if (std::fabs(sum - 1.0) > kNormTolerance)
    throw Error(ErrorCode::UnnormalizedPolicy, std::string(what) + " sums to " + std::to_string(sum));
}

MixedPolicyContext build_context(std::span<const double> pi_av, const DiscreteActionSet& actions,
                                 bool human_active, const std::optional<ActionCommand>& human_action,
                                 double eta) {
  require_normalized(pi_av, "pi_AV");
  if (pi_av.size() != actions.size())
    throw Error(ErrorCode::DimensionMismatch, "pi_AV size does not match the action set");
  if (human_active && !human_action)
    throw Error(ErrorCode::InvalidScenario, "active human without an action");
  MixedPolicyContext ctx;
  ctx.human_active = human_active;
  ctx.human_action = human_action;
  ctx.eta = eta;
  ctx.I.assign(actions.size(), 0);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    bool ok = true;
    if (human_active) {
      const DiscreteAction& a = actions.actions[i];
      ok = std::fabs(a.accel - human_action->accel) <= eta && a.intent == human_action->lane_intent;
    }
    if (ok) {
      ctx.admissible.push_back(i);
    } else {
      ctx.I[i] = 1;
      ctx.F += pi_av[i];
    }
  }
  return ctx;
}

Distribution mixed_policy(std::span<const double> pi_av, std::span<const double> pi_human,
                          const MixedPolicyContext& ctx) {
  require_normalized(pi_av, "pi_AV");
  require_normalized(pi_human, "pi_human");
  if (pi_av.size() != pi_human.size() || ctx.I.size() != pi_av.size())
    throw Error(ErrorCode::DimensionMismatch, "policy sizes differ");
  Distribution out(pi_av.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = pi_av[i] * static_cast<double>(1 - ctx.I[i]) + pi_human[i] * ctx.F;
  return out;
}

Distribution human_distribution(const DiscreteActionSet& actions, const ActionCommand& human) {
  Distribution d(actions.size(), 0.0);
  d[actions.nearest(human.accel, human.lane_intent)] = 1.0;
  return d;
}

double discrepancy(std::span<const Distribution> pi_av, std::span<const Distribution> pi_human,
                   std::span<const double> state_weights, double eps) {
  if (pi_av.size() != pi_human.size() || pi_av.size() != state_weights.size())
    throw Error(ErrorCode::DimensionMismatch, "discrepancy inputs disagree on the state count");
  double total = 0.0, weight = 0.0;
  for (std::size_t s = 0; s < pi_av.size(); ++s) {
    const Distribution& q = pi_av[s];
    const Distribution& p = pi_human[s];
    require_normalized(q, "pi_AV");
    require_normalized(p, "pi_human");
    if (p.size() != q.size()) throw Error(ErrorCode::DimensionMismatch, "action counts differ");
    const double norm = 1.0 + static_cast<double>(p.size()) * eps;
    double kl = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) {
      const double ps = (p[a] + eps) / norm;
      const double qs = (q[a] + eps) / norm;
      if (p[a] != q[a]) kl += ps * std::log(ps / qs);
    }
    total += state_weights[s] * std::max(0.0, kl);
    weight += state_weights[s];
  }
  return weight > 0.0 ? total / weight : 0.0;
}

}  // namespace skylite::haim
