#pragma once

#include <vector>

#include "skylite/haim/policy_math.hpp"
#include "skylite/world/scenario.hpp"

namespace skylite::haim {

/// Bin edges for the (gap, speed, TTC) state grid. A value lands in the bin
/// whose upper edge is the first edge greater than it; values beyond the last
/// edge (including infinity) fall in the final bin.
struct StateGrid {
  std::vector<double> gap_edges = {2.5, 5, 7.5, 10, 15, 20, 30, 40, 60, 80, 120};     // 12 bins, m
  std::vector<double> speed_edges = {3, 6, 9, 12, 15, 18, 21, 24, 27};                 // 10 bins, m/s
  std::vector<double> ttc_edges = {0.5, 1, 1.5, 2, 2.5, 3, 4};                         // 8 bins, s

  std::size_t gap_bins() const { return gap_edges.size() + 1; }
  std::size_t speed_bins() const { return speed_edges.size() + 1; }
  std::size_t ttc_bins() const { return ttc_edges.size() + 1; }
  std::size_t size() const { return gap_bins() * speed_bins() * ttc_bins(); }
  std::size_t index(double gap, double speed, double ttc) const;
  bool operator==(const StateGrid&) const = default;
};

/// Ego observation used for discretization.
struct Observation {
  double gap = 0.0;
  double speed = 0.0;
  double ttc = 0.0;
};

Observation observe_ego(const WorldState& world, AgentId ego, const ScenarioSpec& spec);

/// Tabular Q-hat, Q^EX, Q^IM over states x actions, row-major.
class CriticSet {
 public:
  CriticSet() = default;
  CriticSet(std::size_t states, std::size_t actions);

  std::size_t states() const { return states_; }
  std::size_t actions() const { return actions_; }

  double& q_hat(std::size_t s, std::size_t a) { return q_hat_[at(s, a)]; }
  double& q_ex(std::size_t s, std::size_t a) { return q_ex_[at(s, a)]; }
  double& q_im(std::size_t s, std::size_t a) { return q_im_[at(s, a)]; }
  double q_hat(std::size_t s, std::size_t a) const { return q_hat_[at(s, a)]; }
  double q_ex(std::size_t s, std::size_t a) const { return q_ex_[at(s, a)]; }
  double q_im(std::size_t s, std::size_t a) const { return q_im_[at(s, a)]; }

  /// Throws MissingCriticEntry when out of range.
  std::size_t at(std::size_t s, std::size_t a) const;
  /// Throws DivergedValues naming the first non-finite entry.
  void require_finite() const;
  bool ex_all_zero() const;

 private:
  std::size_t states_ = 0;
  std::size_t actions_ = 0;
  std::vector<double> q_hat_, q_ex_, q_im_;
};

struct LearningConfig {
  double psi = 1.0;
  double alpha = 0.2;  // entropy temperature, > 0
  double beta = 1.0;
  double phi = 0.2;
  double learning_rate = 0.3;
  double discount = 0.95;
  int episodes = 300;
  double eta = 0.5;            // admissibility radius, m/s^2
  double mentor_ttc = 2.5;     // guardian threshold, s
  double ex_cost = 1.0;        // Q^EX cost per intervened step
  std::vector<double> accel_levels = kDefaultAccelLevels;
  StateGrid grid;

  void validate() const;  // throws ConfigError
};

/// psi Q-hat - alpha log pi(a|s) - beta Q^EX - phi Q^IM for one sample.
double objective(std::size_t state, std::size_t action, const CriticSet& critics,
                 std::span<const double> pi_av_row, const LearningConfig& cfg);

/// softmax over a of (psi Q-hat - beta Q^EX - phi Q^IM) / alpha.
Distribution optimal_policy(std::size_t state, const CriticSet& critics, const LearningConfig& cfg);

}  // namespace skylite::haim
