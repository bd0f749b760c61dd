#pragma once

#include <optional>

#include "skylite/behavior/params.hpp"

namespace skylite {

struct MobilVehicle {
  double s = 0.0;  // common longitudinal coordinate, m
  double v = 0.0;
  double length = 4.5;
};

/// Ego plus its four neighbors around a prospective lane change.
struct MobilSituation {
  MobilVehicle ego;
  std::optional<MobilVehicle> current_leader;
  std::optional<MobilVehicle> current_follower;  // "old" follower
  std::optional<MobilVehicle> target_leader;
  std::optional<MobilVehicle> target_follower;   // "new" follower
};

/// The six IDM accelerations MOBIL compares; absent followers contribute 0.
struct MobilAccelerations {
  double ego_now = 0.0;
  double ego_after = 0.0;
  double new_follower_now = 0.0;
  double new_follower_after = 0.0;
  double old_follower_now = 0.0;
  double old_follower_after = 0.0;
};

enum class LaneDecision { Keep, Change };

MobilAccelerations mobil_accelerations(const MobilSituation& sit, const IDMParams& idm);

/// Safety: new_follower_after >= -b_safe. Incentive:
/// (ego_after - ego_now) + p (new gain + old gain) > delta_a_th.
double mobil_incentive(const MobilAccelerations& acc, const MOBILParams& p);
bool mobil_safe(const MobilAccelerations& acc, const MOBILParams& p);
LaneDecision mobil_criterion(const MobilAccelerations& acc, const MOBILParams& p);

/// Throws NonPositiveGap when any pair of vehicles overlaps.
LaneDecision mobil_decision(const MobilSituation& sit, const IDMParams& idm, const MOBILParams& p);

}  // namespace skylite
