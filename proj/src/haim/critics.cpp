#include "skylite/haim/critics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "skylite/core/error.hpp"
#include "skylite/world/safety.hpp"

namespace skylite::haim {

namespace {

std::size_t bin(const std::vector<double>& edges, double x) {
  return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin());
}

bool ascending(const std::vector<double>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) return false;
    if (i > 0 && !(v[i] > v[i - 1])) return false;
  }
  return true;
}

}  // namespace

std::size_t StateGrid::index(double gap, double speed, double ttc) const {
  return (bin(gap_edges, gap) * speed_bins() + bin(speed_edges, speed)) * ttc_bins() + bin(ttc_edges, ttc);
}

Observation observe_ego(const WorldState& world, AgentId ego, const ScenarioSpec& spec) {
  const AgentState* a = world.find(ego);
  if (!a) throw Error(ErrorCode::UnknownAgent, "no ego " + std::to_string(ego));
  Observation o;
  o.speed = a->v;
  o.gap = kInfiniteTtc;
  if (auto lead = find_leader(world, *a, spec.graph, spec.behavior.leader_horizon)) o.gap = std::max(0.0, lead->gap);
  o.ttc = leading_ttc(world, ego, spec.graph, spec.behavior.leader_horizon);
  return o;
}

CriticSet::CriticSet(std::size_t states, std::size_t actions)
    : states_(states),
      actions_(actions),
      q_hat_(states * actions, 0.0),
      q_ex_(states * actions, 0.0),
      q_im_(states * actions, 0.0) {}

std::size_t CriticSet::at(std::size_t s, std::size_t a) const {
  if (s >= states_ || a >= actions_)
    throw Error(ErrorCode::MissingCriticEntry,
                "no critic entry for state " + std::to_string(s) + ", action " + std::to_string(a));
  return s * actions_ + a;
}

void CriticSet::require_finite() const {
  const std::vector<double>* tables[] = {&q_hat_, &q_ex_, &q_im_};
  const char* names[] = {"Q_hat", "Q_EX", "Q_IM"};
  for (int t = 0; t < 3; ++t) {
    const auto& v = *tables[t];
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v[i]))
        throw Error(ErrorCode::DivergedValues, std::string(names[t]) + " diverged at state " +
                                                   std::to_string(i / actions_) + ", action " +
                                                   std::to_string(i % actions_) + ": " + std::to_string(v[i]));
    }
  }
}

bool CriticSet::ex_all_zero() const {
  return std::all_of(q_ex_.begin(), q_ex_.end(), [](double x) { return x == 0.0; });
}

void LearningConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::ConfigError, m); };
  if (!(alpha > 0.0) || !std::isfinite(alpha)) bad("alpha must be positive");
  for (double w : {psi, beta, phi})
    if (!(w >= 0.0) || !std::isfinite(w)) bad("psi, beta and phi must be non-negative");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) bad("learning_rate must be in (0, 1]");
  if (!(discount >= 0.0 && discount < 1.0)) bad("discount must be in [0, 1)");
  if (episodes < 1) bad("episodes must be positive");
  if (!(eta >= 0.0)) bad("eta must be non-negative");
  if (!ascending(grid.gap_edges) || !ascending(grid.speed_edges) || !ascending(grid.ttc_edges))
    bad("grid edges must be finite and strictly ascending");
}

double objective(std::size_t state, std::size_t action, const CriticSet& critics,
                 std::span<const double> pi_av_row, const LearningConfig& cfg) {
  if (action >= pi_av_row.size())
    throw Error(ErrorCode::MissingCriticEntry, "action outside the policy row");
  return cfg.psi * critics.q_hat(state, action) - cfg.alpha * std::log(pi_av_row[action]) -
         cfg.beta * critics.q_ex(state, action) - cfg.phi * critics.q_im(state, action);
}

Distribution optimal_policy(std::size_t state, const CriticSet& critics, const LearningConfig& cfg) {
  const std::size_t n = critics.actions();
  critics.at(state, 0);
  Distribution z(n);
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < n; ++a) {
    z[a] = (cfg.psi * critics.q_hat(state, a) - cfg.beta * critics.q_ex(state, a) -
            cfg.phi * critics.q_im(state, a)) /
           cfg.alpha;
    hi = std::max(hi, z[a]);
  }
  double sum = 0.0;
  for (double& x : z) {
    x = std::exp(x - hi);
    sum += x;
  }
  for (double& x : z) x /= sum;
  return z;
}

}  // namespace skylite::haim
