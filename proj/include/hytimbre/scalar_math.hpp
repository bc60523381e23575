#pragma once

// Scalar kernels shared by the plain geometry code and the autodiff
// primitives.  Each function is analytic on its stated domain; Taylor branches
// keep values and derivatives accurate where the closed forms lose digits.

#include <cmath>

namespace hytimbre::num {

// log( sinh(x)/x ), x >= 0.
inline double log_sinhc(double x) {
  if (x < 1e-4) return std::log1p(x * x / 6.0 * (1.0 + x * x / 20.0));
  if (x > 30.0) return x - std::log(2.0 * x) + std::log1p(-std::exp(-2.0 * x));
  return std::log(std::sinh(x) / x);
}

// s / sinh(s), s >= 0.
inline double s_over_sinh(double s) {
  if (s < 1e-6) return 1.0 - s * s / 6.0;
  if (s > 30.0) return 2.0 * s * std::exp(-s) / (1.0 - std::exp(-2.0 * s));
  return s / std::sinh(s);
}

// cosh(sqrt(t)); analytic continuation cos(sqrt(-t)) absorbs tiny negative
// rounding in squared-norm arguments.
inline double cosh_sqrt(double t) {
  return t >= 0.0 ? std::cosh(std::sqrt(t)) : std::cos(std::sqrt(-t));
}

// sinh(sqrt(t))/sqrt(t), smooth at t = 0 (value 1); sin branch for t < 0.
inline double sinhc_sqrt(double t) {
  if (std::abs(t) < 1e-4) return 1.0 + t / 6.0 * (1.0 + t / 20.0 * (1.0 + t / 42.0));
  if (t > 0.0) {
    const double s = std::sqrt(t);
    return std::sinh(s) / s;
  }
  const double s = std::sqrt(-t);
  return std::sin(s) / s;
}

// d/dt sinhc_sqrt(t) = (cosh(sqrt t) - sinhc_sqrt(t)) / (2t), limit 1/6 at 0.
inline double sinhc_sqrt_grad(double t) {
  if (std::abs(t) < 1e-4)
    return 1.0 / 6.0 + t / 60.0 * (1.0 + t / 28.0);
  return (cosh_sqrt(t) - sinhc_sqrt(t)) / (2.0 * t);
}

// acosh(a)^2 for a >= 1 (0 below); analytic in a at the boundary.
inline double acosh_sq(double a) {
  const double u = a - 1.0;
  if (u <= 0.0) return 0.0;
  if (u < 1e-6) return 2.0 * u - u * u / 3.0 + 4.0 * u * u * u / 45.0;
  const double s = std::acosh(a);
  return s * s;
}

// acosh(a)/sqrt(a^2-1) = s/sinh(s) with s = acosh(a); smooth, value 1 at a=1.
inline double acosh_ratio(double a) {
  const double u = a - 1.0;
  if (u <= 0.0) return 1.0;
  if (u < 1e-6) return 1.0 - u / 3.0 + 2.0 * u * u / 15.0;
  const double s = std::acosh(a);
  return s / std::sqrt(a * a - 1.0);
}

// d/da acosh_ratio(a).
inline double acosh_ratio_grad(double a) {
  const double u = a - 1.0;
  if (u <= 0.0) return -1.0 / 3.0;
  if (u < 1e-4) return -1.0 / 3.0 + 4.0 * u / 15.0 - 6.0 * u * u / 35.0;
  const double q = a * a - 1.0;
  return 1.0 / q - std::acosh(a) * a / (q * std::sqrt(q));
}

// d/da acosh(a)^2 = 2 acosh(a)/sqrt(a^2-1); one-sided value 2 at the clamp.
inline double acosh_sq_grad(double a) { return 2.0 * acosh_ratio(a); }

// log( sinh(s)/s ) with s = acosh(a), a >= 1 (0 below); smooth at a = 1.
inline double log_sinhc_acosh(double a) {
  const double u = a - 1.0;
  if (u <= 0.0) return 0.0;
  if (u < 1e-6) return u / 3.0 - 7.0 * u * u / 90.0 + u * u * u / 45.0;
  return log_sinhc(std::acosh(a));
}

// d/da log_sinhc_acosh(a) = a/(a^2-1) - 1/(acosh(a) sqrt(a^2-1)), limit 1/3.
inline double log_sinhc_acosh_grad(double a) {
  const double u = a - 1.0;
  if (u <= 0.0) return 1.0 / 3.0;
  if (u < 1e-4) return 1.0 / 3.0 - 7.0 * u / 45.0 + u * u / 15.0;
  const double q = a * a - 1.0;
  return a / q - 1.0 / (std::acosh(a) * std::sqrt(q));
}

}  // namespace hytimbre::num
