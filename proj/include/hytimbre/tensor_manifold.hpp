#pragma once

// Differentiable Lorentz-model geometry over batched tensor rows.  Every
// function here is a pure composition of tensor primitives (no hand-written
// backward rules); the smooth kernels cosh_sqrt / sinhc_sqrt / acosh_sq /
// acosh_ratio / log_sinhc_acosh keep compositions finite at zero tangents and
// coincident points.
//
// Conventions: points and tangents are rows of [B, d+1] tensors; curvature K
// is a compile-constant double (never differentiated); tangent coordinates at
// the origin are [B, d] rows lifted with a zero time column.

#include <cmath>
#include <cstddef>
#include <vector>

#include "hytimbre/tensor.hpp"

namespace hytimbre::ad {

// Constant row (-1, 1, ..., 1) implementing the Minkowski metric.
inline Tensor minkowski_row(std::size_t d1) {
  std::vector<double> g(d1, 1.0);
  g[0] = -1.0;
  return Tensor::matrix(std::move(g), 1, d1);
}

inline Tensor origin_row(int d, double K) {
  std::vector<double> o(static_cast<std::size_t>(d) + 1, 0.0);
  o[0] = 1.0 / std::sqrt(-K);
  return Tensor::matrix(std::move(o), 1, static_cast<std::size_t>(d) + 1);
}

// <a,b>_L per row -> [B,1]
inline Tensor lorentz_inner_rows(const Tensor& a, const Tensor& b) {
  return sum_rows(mul(mul(a, b), minkowski_row(std::max(a.cols(), b.cols()))));
}

// [B,d] -> [B,d+1] with zero time coordinate.
inline Tensor lift_rows(const Tensor& w) {
  return concat_cols(Tensor::zeros({w.rows(), 1}), w);
}

// exp_base(v) = cosh(x) base + (sinh(x)/x) v with x = sqrt(-K)||v||_L; written
// in t = x^2 = -K <v,v>_L so the zero-tangent limit is exact.
inline Tensor exp_map_rows(const Tensor& base, const Tensor& v, double K) {
  Tensor t = scale(lorentz_inner_rows(v, v), -K);
  return add(mul(cosh_sqrt(t), base), mul(sinhc_sqrt(t), v));
}

// log_base(target) = acosh_ratio(alpha) (target - alpha base), alpha = K<base,target>_L.
inline Tensor log_map_rows(const Tensor& base, const Tensor& target, double K) {
  Tensor alpha = scale(lorentz_inner_rows(base, target), K);
  return mul(acosh_ratio(alpha), sub(target, mul(alpha, base)));
}

// PT_{from->to}(v) = v - K<to,v>/(1 + K<from,to>) (from + to).
inline Tensor transport_rows(const Tensor& from, const Tensor& to, const Tensor& v, double K) {
  Tensor denom = add_const(scale(lorentz_inner_rows(from, to), K), 1.0);
  Tensor coef = div(scale(lorentz_inner_rows(to, v), K), denom);
  return sub(v, mul(coef, add(from, to)));
}

// proj_base(w): transport the origin-tangent [0;w] to base and exponentiate.
inline Tensor proj_rows(const Tensor& base, const Tensor& w, double K) {
  const int d = static_cast<int>(w.cols());
  Tensor u = lift_rows(w);
  Tensor o = origin_row(d, K);
  return exp_map_rows(base, transport_rows(o, base, u, K), K);
}

// Geodesic distance per row -> [B,1].  Not smooth at coincident points; used
// for evaluation, not inside training losses.
inline Tensor distance_rows(const Tensor& a, const Tensor& b, double K) {
  Tensor alpha = scale(lorentz_inner_rows(a, b), K);
  return scale(acosh_clamped(alpha), 1.0 / std::sqrt(-K));
}

// log G(z; mu_j, sigma^2 I) for every component j: [B,T].
// For isotropic components only the geodesic radius enters the Gaussian
// factor: r = R acosh(alpha), s = sqrt(-K) r = acosh(alpha).
inline Tensor wrapped_prior_log_density(const Tensor& z, const Tensor& means, double sigma,
                                        double K) {
  const std::size_t d1 = z.cols();
  const int d = static_cast<int>(d1) - 1;
  const double R2 = -1.0 / K;
  constexpr double log2pi = 1.8378770664093454835606594728112;
  Tensor zg = mul(z, minkowski_row(d1));
  Tensor alpha = scale(matmul(zg, transpose(means)), K);  // [B,T]
  Tensor quad = scale(acosh_sq(alpha), -R2 / (2.0 * sigma * sigma));
  Tensor corr = scale(log_sinhc_acosh(alpha), -static_cast<double>(d - 1));
  const double c = -0.5 * d * (log2pi + 2.0 * std::log(sigma));
  return add_const(add(quad, corr), c);
}

// log G(z; mean, diag(eta^2)) evaluated at the reparameterized sample
// z = proj_mean([0;w]), w = eps * eta: the tangent draw w is reused directly,
// log G = log N(w; 0, diag(eta^2)) - (d-1) log sinhc(sqrt(-K)||w||).
inline Tensor wrapped_log_density_from_w(const Tensor& w, const Tensor& log_eta, double K) {
  const int d = static_cast<int>(w.cols());
  constexpr double log2pi = 1.8378770664093454835606594728112;
  Tensor ratio = div(w, exp(log_eta));
  Tensor gauss = add_const(
      add(scale(sum_rows(mul(ratio, ratio)), -0.5), neg(sum_rows(log_eta))),
      -0.5 * d * log2pi);
  Tensor t = scale(sum_rows(mul(w, w)), -K);
  Tensor corr = scale(log(sinhc_sqrt(t)), -static_cast<double>(d - 1));
  return add(gauss, corr);
}

// Euclidean counterparts used when the timbre latent is flat.

inline Tensor gaussian_log_density_from_w(const Tensor& w, const Tensor& log_eta) {
  const int d = static_cast<int>(w.cols());
  constexpr double log2pi = 1.8378770664093454835606594728112;
  Tensor ratio = div(w, exp(log_eta));
  return add_const(add(scale(sum_rows(mul(ratio, ratio)), -0.5), neg(sum_rows(log_eta))),
                   -0.5 * d * log2pi);
}

// log N(z; mu_j, sigma^2 I) for every component j: [B,T].
inline Tensor gaussian_prior_log_density(const Tensor& z, const Tensor& means, double sigma) {
  const int d = static_cast<int>(z.cols());
  constexpr double log2pi = 1.8378770664093454835606594728112;
  Tensor znorm = sum_rows(mul(z, z));                            // [B,1]
  Tensor cross = scale(matmul(z, transpose(means)), -2.0);      // [B,T]
  Tensor mnorm = transpose(sum_rows(mul(means, means)));        // [1,T]
  Tensor sq = add(add(znorm, cross), mnorm);
  const double c = -0.5 * d * (log2pi + 2.0 * std::log(sigma));
  return add_const(scale(sq, -1.0 / (2.0 * sigma * sigma)), c);
}

}  // namespace hytimbre::ad
