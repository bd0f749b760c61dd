#pragma once

namespace skylite {

/// Intelligent Driver Model parameters. `v0 <= 0` means "use the lane speed
/// limit" when a controller resolves the parameters for a concrete lane.
struct IDMParams {
  double v0 = 0.0;  // desired speed, m/s
  double T = 1.5;   // time headway, s
  double a = 2.0;   // maximum acceleration, m/s^2
  double b = 3.0;   // comfortable deceleration, m/s^2
  double s0 = 2.0;  // jam distance, m
  double delta = 4.0;

  bool operator==(const IDMParams&) const = default;
};

struct MOBILParams {
  double politeness = 0.5;
  double delta_a_th = 0.1;  // switching threshold, m/s^2
  double b_safe = 4.0;      // maximum deceleration imposed on the new follower, m/s^2

  bool operator==(const MOBILParams&) const = default;
};

struct BehaviorParams {
  IDMParams idm;
  MOBILParams mobil;
  double leader_horizon = 200.0;  // m; beyond this the road counts as free

  bool operator==(const BehaviorParams&) const = default;
};

}  // namespace skylite
