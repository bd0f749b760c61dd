#pragma once

#include "skylite/behavior/params.hpp"

namespace skylite {

/// Desired dynamic gap s* = s0 + max(0, vT + v dv / (2 sqrt(ab))).
double idm_desired_gap(double v, double dv, const IDMParams& p);

/// IDM acceleration a [1 - (v/v0)^delta - (s*/gap)^2].
///
/// `gap` is the bumper-to-bumper distance and may be +infinity (free road);
/// `dv` is the closing speed v - v_leader. The result is bounded above by
/// `p.a` and unbounded below; callers clamp. Throws NonPositiveGap.
double idm_acceleration(double v, double gap, double dv, const IDMParams& p);

/// Parameters with v0 resolved against a lane speed limit when unset.
IDMParams resolve_idm(const IDMParams& p, double speed_limit);

}  // namespace skylite
