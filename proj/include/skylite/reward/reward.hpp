#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skylite/world/scenario.hpp"
#include "skylite/world/types.hpp"

namespace skylite::reward {

using Embedding = std::vector<double>;

/// Fixed-order numeric summary of one agent's situation.
struct StateFeatures {
  static constexpr std::size_t kSize = 6;
  enum Index : std::size_t { Speed, LateralOffset, HeadingError, MinGap, MinTtc, Collision };

  std::array<double, kSize> values{};

  double operator[](Index i) const { return values[i]; }
  double& operator[](Index i) { return values[i]; }
  bool operator==(const StateFeatures&) const = default;
};

inline constexpr double kFeatureGapCap = 200.0;
inline constexpr double kFeatureTtcCap = 100.0;

/// Gap and TTC are capped so every entry stays finite. Throws UnknownAgent.
StateFeatures extract_features(const WorldState& world, AgentId agent, const ScenarioSpec& spec);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  virtual Embedding embed_state(const StateFeatures& features) const = 0;
  virtual Embedding embed_text(std::string_view text) const = 0;
};

inline constexpr std::size_t kMockDimension = 64;

/// Deterministic stand-in for a vision-language encoder. Text is a normalized
/// sum of seeded per-token hash vectors; features go through a seeded random
/// projection whose collision column is the embedding of the token "collided".
class MockProvider final : public EmbeddingProvider {
 public:
  explicit MockProvider(std::uint64_t seed);
  std::size_t dimension() const override { return kMockDimension; }
  Embedding embed_state(const StateFeatures& features) const override;
  Embedding embed_text(std::string_view text) const override;

 private:
  Embedding token_vector(std::string_view token) const;

  std::uint64_t seed_;
  std::vector<Embedding> columns_;  // one per feature
  Embedding bias_;
};

std::unique_ptr<EmbeddingProvider> mock_provider(std::uint64_t seed);

/// Talks to an external embedding service over TCP, one JSON line per request:
/// {"kind": "text"|"features", "payload": ...} answered by a JSON array of D numbers.
/// Throws ProviderFailure on connection errors, bad replies, or non-unit vectors.
class SocketProvider final : public EmbeddingProvider {
 public:
  SocketProvider(std::string host, std::uint16_t port, std::size_t dimension);
  std::size_t dimension() const override { return dimension_; }
  Embedding embed_state(const StateFeatures& features) const override;
  Embedding embed_text(std::string_view text) const override;

 private:
  Embedding request(const std::string& line) const;

  std::string host_;
  std::uint16_t port_;
  std::size_t dimension_;
};

struct RewardConfig {
  double alpha = 1.0;
  double beta = 1.0;
  double v_max = 30.0;
  double d_max = 1.75;
  double theta_max = 0.35;
  std::size_t window = 20;

  /// Throws ConfigError.
  void validate() const;
};

struct RewardBundle {
  double r_clg = 0.0;
  double r_clg_normalized = 0.0;
  double v_target = 0.0;
  double r_speed = 0.0;
  double f_center = 0.0;
  double f_angle = 0.0;
  double f_stability = 0.0;
  double r_synthesis = 0.0;
};

/// Throws DimensionMismatch when sizes differ and ProviderFailure on a zero vector.
double cosine(std::span<const double> a, std::span<const double> b);

/// alpha cos(e_s, e_pos) - beta cos(e_s, e_neg).
double clg_reward(std::span<const double> e_state, std::span<const double> e_pos,
                  std::span<const double> e_neg, const RewardConfig& cfg);
double clg_reward(const StateFeatures& features, const LanguageGoals& goals,
                  const EmbeddingProvider& provider, const RewardConfig& cfg);

/// Only the last `cfg.window` entries of `history` are used.
RewardBundle synthesize(const StateFeatures& features, double r_clg, const RewardConfig& cfg,
                        std::span<const double> history);

/// Per-agent online evaluator keeping the lateral-offset history.
/// Goal embeddings are computed once.
class RewardLab {
 public:
  RewardLab(const EmbeddingProvider& provider, LanguageGoals goals, RewardConfig cfg = {});

  RewardBundle evaluate(const WorldState& world, AgentId agent, const ScenarioSpec& spec);
  void reset() { history_.clear(); }

 private:
  const EmbeddingProvider& provider_;
  RewardConfig cfg_;
  Embedding e_pos_, e_neg_;
  std::map<AgentId, std::deque<double>> history_;
};

}  // namespace skylite::reward
