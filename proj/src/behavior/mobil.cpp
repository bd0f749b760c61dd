#include "skylite/behavior/mobil.hpp"

#include <limits>

#include "skylite/behavior/idm.hpp"

namespace skylite {

namespace {

double accel_behind(const MobilVehicle& f, const std::optional<MobilVehicle>& leader,
                    const IDMParams& idm) {
  if (!leader) return idm_acceleration(f.v, std::numeric_limits<double>::infinity(), 0.0, idm);
  const double gap = leader->s - f.s - 0.5 * (leader->length + f.length);
  return idm_acceleration(f.v, gap, f.v - leader->v, idm);
}

}  // namespace

MobilAccelerations mobil_accelerations(const MobilSituation& sit, const IDMParams& idm) {
  MobilAccelerations acc;
  acc.ego_now = accel_behind(sit.ego, sit.current_leader, idm);
  acc.ego_after = accel_behind(sit.ego, sit.target_leader, idm);
  if (sit.target_follower) {
    acc.new_follower_now = accel_behind(*sit.target_follower, sit.target_leader, idm);
    acc.new_follower_after = accel_behind(*sit.target_follower, sit.ego, idm);
  }
  if (sit.current_follower) {
    acc.old_follower_now = accel_behind(*sit.current_follower, sit.ego, idm);
    acc.old_follower_after = accel_behind(*sit.current_follower, sit.current_leader, idm);
  }
  return acc;
}

double mobil_incentive(const MobilAccelerations& acc, const MOBILParams& p) {
  const double own = acc.ego_after - acc.ego_now;
  const double others = (acc.new_follower_after - acc.new_follower_now) +
                        (acc.old_follower_after - acc.old_follower_now);
  return own + p.politeness * others;
}

bool mobil_safe(const MobilAccelerations& acc, const MOBILParams& p) {
  return acc.new_follower_after >= -p.b_safe;
}

LaneDecision mobil_criterion(const MobilAccelerations& acc, const MOBILParams& p) {
  if (!mobil_safe(acc, p)) return LaneDecision::Keep;
  return mobil_incentive(acc, p) > p.delta_a_th ? LaneDecision::Change : LaneDecision::Keep;
}

LaneDecision mobil_decision(const MobilSituation& sit, const IDMParams& idm, const MOBILParams& p) {
  return mobil_criterion(mobil_accelerations(sit, idm), p);
}

}  // namespace skylite
