#include "skylite/reward/reward.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "skylite/core/detmath.hpp"
#include "skylite/core/error.hpp"
#include "skylite/world/safety.hpp"

namespace skylite::reward {

namespace {

double clamp01(double x) { return x < 0.0 ? 0.0 : (x > 1.0 ? 1.0 : x); }

double wrap_angle(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

}  // namespace

StateFeatures extract_features(const WorldState& world, AgentId agent, const ScenarioSpec& spec) {
  const AgentState* ego = world.find(agent);
  if (!ego) throw Error(ErrorCode::UnknownAgent, "no agent " + std::to_string(agent));
  const LanePose pose = spec.graph.pose(ego->lane_id, ego->s);

  StateFeatures f;
  f[StateFeatures::Speed] = ego->v;
  f[StateFeatures::LateralOffset] = ego->d;
  f[StateFeatures::HeadingError] = wrap_angle(ego->heading - det::atan2(pose.ty, pose.tx));
  const auto leader = find_leader(world, *ego, spec.graph);
  f[StateFeatures::MinGap] = leader ? std::min(leader->gap, kFeatureGapCap) : kFeatureGapCap;
  f[StateFeatures::MinTtc] = std::min(leading_ttc(world, agent, spec.graph), kFeatureTtcCap);
  const bool hit = std::any_of(world.collisions_this_tick.begin(), world.collisions_this_tick.end(),
                               [&](const auto& p) { return p.first == agent || p.second == agent; });
  f[StateFeatures::Collision] = hit ? 1.0 : 0.0;
  return f;
}

void RewardConfig::validate() const {
  if (!(alpha >= 0.0) || !(beta >= 0.0)) throw Error(ErrorCode::ConfigError, "reward alpha and beta must be >= 0");
  if (alpha + beta == 0.0) throw Error(ErrorCode::ConfigError, "reward alpha + beta must be positive");
  if (!(v_max > 0.0)) throw Error(ErrorCode::ConfigError, "reward v_max must be > 0");
  if (!(d_max > 0.0) || !(theta_max > 0.0))
    throw Error(ErrorCode::ConfigError, "reward d_max and theta_max must be > 0");
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::DimensionMismatch,
                "embedding sizes " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorCode::ProviderFailure, "zero embedding");
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

double clg_reward(std::span<const double> e_state, std::span<const double> e_pos,
                  std::span<const double> e_neg, const RewardConfig& cfg) {
  return cfg.alpha * cosine(e_state, e_pos) - cfg.beta * cosine(e_state, e_neg);
}

double clg_reward(const StateFeatures& features, const LanguageGoals& goals,
                  const EmbeddingProvider& provider, const RewardConfig& cfg) {
  const Embedding s = provider.embed_state(features);
  return clg_reward(s, provider.embed_text(goals.positive), provider.embed_text(goals.negative), cfg);
}

RewardBundle synthesize(const StateFeatures& features, double r_clg, const RewardConfig& cfg,
                        std::span<const double> history) {
  if (history.size() > cfg.window) history = history.subspan(history.size() - cfg.window);

  RewardBundle b;
  b.r_clg = r_clg;
  b.r_clg_normalized = clamp01((r_clg + cfg.beta) / (cfg.alpha + cfg.beta));
  b.v_target = b.r_clg_normalized * cfg.v_max;
  b.r_speed = clamp01(1.0 - std::fabs(features[StateFeatures::Speed] - b.v_target) / cfg.v_max);
  b.f_center = clamp01(1.0 - std::fabs(features[StateFeatures::LateralOffset]) / cfg.d_max);
  b.f_angle = clamp01(1.0 - std::fabs(features[StateFeatures::HeadingError]) / cfg.theta_max);

  double sd = 0.0;
  if (!history.empty()) {
    double mean = 0.0;
    for (double x : history) mean += x;
    mean /= static_cast<double>(history.size());
    double var = 0.0;
    for (double x : history) var += (x - mean) * (x - mean);
    sd = std::sqrt(var / static_cast<double>(history.size()));
  }
  b.f_stability = clamp01(1.0 - sd / cfg.d_max);
  b.r_synthesis = b.r_speed * b.f_center * b.f_angle * b.f_stability;
  return b;
}

RewardLab::RewardLab(const EmbeddingProvider& provider, LanguageGoals goals, RewardConfig cfg)
    : provider_(provider), cfg_(cfg) {
  cfg_.validate();
  if (goals.positive.empty() || goals.negative.empty())
    throw Error(ErrorCode::ConfigError, "language goals must be non-empty");
  e_pos_ = provider_.embed_text(goals.positive);
  e_neg_ = provider_.embed_text(goals.negative);
}

RewardBundle RewardLab::evaluate(const WorldState& world, AgentId agent, const ScenarioSpec& spec) {
  const StateFeatures f = extract_features(world, agent, spec);
  auto& h = history_[agent];
  h.push_back(f[StateFeatures::LateralOffset]);
  while (h.size() > cfg_.window) h.pop_front();
  const std::vector<double> hist(h.begin(), h.end());
  return synthesize(f, clg_reward(provider_.embed_state(f), e_pos_, e_neg_, cfg_), cfg_, hist);
}

}  // namespace skylite::reward
