#pragma once

// Reproducible elementary functions for the simulation step.
//
// Only IEEE-754 add/sub/mul/div/sqrt are used, each expression is written out
// in a fixed evaluation order, and the build disables FMA contraction, so the
// results are bit-identical on every conforming platform. Platform libm
// transcendentals are not allowed inside world stepping.

#include <cmath>

namespace skylite::det {

inline constexpr double kPi = 3.14159265358979311600;
inline constexpr double kHalfPi = 1.57079632679489655800;
inline constexpr double kTwoPi = 6.28318530717958623200;
// Cody-Waite split of pi/2 for argument reduction.
inline constexpr double kHalfPiHi = 1.57079632673412561417e+00;
inline constexpr double kHalfPiLo = 6.07710050650619224932e-11;

inline double hypot(double x, double y) { return std::sqrt(x * x + y * y); }

namespace detail {

// atan on |z| <= tan(pi/16), odd Taylor series through z^19, Horner order.
inline double atan_small(double z) {
  const double z2 = z * z;
  double p = -1.0 / 19.0;
  p = p * z2 + 1.0 / 17.0;
  p = p * z2 - 1.0 / 15.0;
  p = p * z2 + 1.0 / 13.0;
  p = p * z2 - 1.0 / 11.0;
  p = p * z2 + 1.0 / 9.0;
  p = p * z2 - 1.0 / 7.0;
  p = p * z2 + 1.0 / 5.0;
  p = p * z2 - 1.0 / 3.0;
  p = p * z2 + 1.0;
  return p * z;
}

// Half-angle identity atan(z) = 2 atan(z / (1 + sqrt(1 + z^2))).
inline double atan_unit(double z) {
  double t = z / (1.0 + std::sqrt(1.0 + z * z));
  t = t / (1.0 + std::sqrt(1.0 + t * t));
  return 4.0 * atan_small(t);
}

// sin/cos on |r| <= pi/4, Taylor series in Horner order.
inline double sin_small(double r) {
  const double r2 = r * r;
  double p = 1.0 / 355687428096000.0;  // 1/17!
  p = p * r2 - 1.0 / 1307674368000.0;  // 1/15!
  p = p * r2 + 1.0 / 6227020800.0;     // 1/13!
  p = p * r2 - 1.0 / 39916800.0;       // 1/11!
  p = p * r2 + 1.0 / 362880.0;         // 1/9!
  p = p * r2 - 1.0 / 5040.0;           // 1/7!
  p = p * r2 + 1.0 / 120.0;
  p = p * r2 - 1.0 / 6.0;
  p = p * r2 + 1.0;
  return p * r;
}

inline double cos_small(double r) {
  const double r2 = r * r;
  double p = -1.0 / 6402373705728000.0;  // 1/18!
  p = p * r2 + 1.0 / 20922789888000.0;   // 1/16!
  p = p * r2 - 1.0 / 87178291200.0;      // 1/14!
  p = p * r2 + 1.0 / 479001600.0;        // 1/12!
  p = p * r2 - 1.0 / 3628800.0;          // 1/10!
  p = p * r2 + 1.0 / 40320.0;            // 1/8!
  p = p * r2 - 1.0 / 720.0;
  p = p * r2 + 1.0 / 24.0;
  p = p * r2 - 0.5;
  p = p * r2 + 1.0;
  return p;
}

}  // namespace detail

inline double atan2(double y, double x) {
  if (x == 0.0 && y == 0.0) return 0.0;
  const double ax = std::fabs(x);
  const double ay = std::fabs(y);
  double r;
  if (ay <= ax) {
    r = detail::atan_unit(ay / ax);
  } else {
    r = kHalfPi - detail::atan_unit(ax / ay);
  }
  if (x < 0.0) r = kPi - r;
  return y < 0.0 ? -r : r;
}

/// Wraps an angle into [-pi, pi].
inline double wrap_angle(double a) {
  const double k = std::nearbyint(a / kTwoPi);
  double r = a - k * kTwoPi;
  if (r > kPi) r -= kTwoPi;
  if (r < -kPi) r += kTwoPi;
  return r;
}

struct SinCos {
  double sin;
  double cos;
};

inline SinCos sincos(double a) {
  const double q = std::nearbyint(a / kHalfPi);
  const double r = (a - q * kHalfPiHi) - q * kHalfPiLo;
  const double s = detail::sin_small(r);
  const double c = detail::cos_small(r);
  // quadrant = q mod 4, computed without integer overflow for large |a|
  const double qm = q - 4.0 * std::floor(q / 4.0);
  switch (static_cast<int>(qm)) {
    case 0: return {s, c};
    case 1: return {c, -s};
    case 2: return {-s, -c};
    default: return {-c, s};
  }
}

}  // namespace skylite::det
