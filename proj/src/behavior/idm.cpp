#include "skylite/behavior/idm.hpp"

#include <algorithm>
#include <cmath>

#include "skylite/core/error.hpp"

namespace skylite {

namespace {

// delta is integral in every configuration we ship; repeated multiplication
// keeps the result independent of the libm pow implementation
double power(double x, double delta) {
  const double r = std::nearbyint(delta);
  if (r == delta && r >= 0.0 && r <= 16.0) {
    double out = 1.0;
    for (int i = 0; i < static_cast<int>(r); ++i) out = out * x;
    return out;
  }
  return std::pow(x, delta);
}

}  // namespace

double idm_desired_gap(double v, double dv, const IDMParams& p) {
  const double dyn = v * p.T + v * dv / (2.0 * std::sqrt(p.a * p.b));
  return p.s0 + std::max(0.0, dyn);
}

double idm_acceleration(double v, double gap, double dv, const IDMParams& p) {
  if (!std::isfinite(v) || std::isnan(gap) || !std::isfinite(dv))
    throw Error(ErrorCode::NonFiniteInput, "idm input is not finite");
  if (!(gap > 0.0)) throw Error(ErrorCode::NonPositiveGap, "idm gap must be positive");
  if (!(p.v0 > 0.0)) throw Error(ErrorCode::ConfigError, "idm v0 must be positive");
  const double free_term = power(v / p.v0, p.delta);
  if (std::isinf(gap)) return p.a * (1.0 - free_term);
  const double ratio = idm_desired_gap(v, dv, p) / gap;
  return p.a * (1.0 - free_term - ratio * ratio);
}

IDMParams resolve_idm(const IDMParams& p, double speed_limit) {
  IDMParams out = p;
  if (!(out.v0 > 0.0)) out.v0 = speed_limit;
  return out;
}

}  // namespace skylite
