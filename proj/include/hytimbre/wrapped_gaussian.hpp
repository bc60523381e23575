#pragma once

// Pseudo-hyperbolic (wrapped) Gaussian G(z; mu, Sigma) on the Lorentz model:
// sample w ~ N(0, Sigma) in R^d, lift to the tangent space at the origin,
// parallel-transport to mu and follow the geodesic (proj).  The density is the
// Gaussian density of w divided by the Jacobian of the wrapping,
//   log G(z) = log N(w; 0, Sigma) - (d-1) log( sinh(sqrt(-K) r) / (sqrt(-K) r) ),
// with r = ||log_mu(z)||_L the geodesic radius.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "hytimbre/lorentz.hpp"
#include "hytimbre/rng.hpp"
#include "hytimbre/scalar_math.hpp"

namespace hytimbre::hypergauss {

struct WrappedGaussianParams {
  lorentz::ManifoldPoint mean;
  std::vector<double> sigma;  // d per-axis standard deviations in the tangent space

  int dim() const { return mean.dim(); }
};

struct WrappedSample {
  lorentz::ManifoldPoint z;
  std::vector<double> w;  // the tangent-space Gaussian draw that produced z
};

namespace detail {

inline void check_params(const WrappedGaussianParams& p, const char* who) {
  if (p.sigma.size() != static_cast<std::size_t>(p.dim()))
    throw std::invalid_argument(std::string(who) + ": sigma dimension mismatch");
  for (double s : p.sigma)
    if (!(s > 0.0)) throw std::domain_error(std::string(who) + ": sigma entries must be positive");
}

inline double log_normal_diag(std::span<const double> w, std::span<const double> sigma) {
  constexpr double log2pi = 1.8378770664093454835606594728112;
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double t = w[i] / sigma[i];
    acc += -0.5 * log2pi - std::log(sigma[i]) - 0.5 * t * t;
  }
  return acc;
}

}  // namespace detail

inline WrappedSample sample(const WrappedGaussianParams& p, Rng& rng) {
  detail::check_params(p, "hypergauss::sample");
  std::vector<double> w(p.sigma.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = p.sigma[i] * rng.gaussian();
  auto z = lorentz::proj(p.mean, lorentz::lift_to_tangent(std::span<const double>(w), p.mean.curv));
  return WrappedSample{std::move(z), std::move(w)};
}

inline double log_density(const lorentz::ManifoldPoint& z, const WrappedGaussianParams& p) {
  detail::check_params(p, "hypergauss::log_density");
  if (!(z.curv == p.mean.curv)) throw std::domain_error("hypergauss::log_density: curvature mismatch");
  if (z.coords.size() != p.mean.coords.size())
    throw std::invalid_argument("hypergauss::log_density: dimension mismatch");
  const double K = z.curv.K;
  if (lorentz::manifold_defect(z) > 1e-6 * (1.0 + std::abs(1.0 / K)))
    throw std::domain_error("hypergauss::log_density: z is not on the manifold");

  const auto u = lorentz::log_map(p.mean, z);
  const double r = lorentz::tangent_norm(u);
  const auto o = lorentz::origin(z.curv, z.dim());
  const auto v0 = lorentz::parallel_transport(p.mean, o, u);
  std::span<const double> w(v0.coords.data() + 1, v0.coords.size() - 1);

  const int d = z.dim();
  const double sk = std::sqrt(-K);
  return detail::log_normal_diag(w, std::span<const double>(p.sigma)) -
         (d - 1) * num::log_sinhc(sk * r);
}

// (1/n) sum_i [ log q(z_i) - log p(z_i) ], z_i ~ q.  Both densities are
// evaluated through the same code path, so q == p gives exactly zero per
// sample.
inline double kl_monte_carlo(const WrappedGaussianParams& q, const WrappedGaussianParams& p,
                             int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("kl_monte_carlo: need n >= 1");
  detail::check_params(q, "kl_monte_carlo");
  detail::check_params(p, "kl_monte_carlo");
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto s = sample(q, rng);
    acc += log_density(s.z, q) - log_density(s.z, p);
  }
  return acc / n;
}

// Posterior over mixture components with the given log prior weights:
// log p(y=j|z) = log G(z; params_j) + log_prior_j - logsumexp(...)
inline std::vector<double> timbre_posterior(const lorentz::ManifoldPoint& z,
                                            const std::vector<WrappedGaussianParams>& components,
                                            const std::vector<double>& log_prior) {
  if (components.empty()) throw std::invalid_argument("timbre_posterior: no components");
  if (log_prior.size() != components.size())
    throw std::invalid_argument("timbre_posterior: prior size mismatch");
  std::vector<double> lp(components.size());
  double mx = -1e300;
  for (std::size_t j = 0; j < components.size(); ++j) {
    lp[j] = log_density(z, components[j]) + log_prior[j];
    if (lp[j] > mx) mx = lp[j];
  }
  double z_acc = 0.0;
  for (double v : lp) z_acc += std::exp(v - mx);
  const double lse = mx + std::log(z_acc);
  std::vector<double> out(lp.size());
  for (std::size_t j = 0; j < lp.size(); ++j) out[j] = std::exp(lp[j] - lse);
  return out;
}

inline std::vector<double> timbre_posterior_uniform(const lorentz::ManifoldPoint& z,
                                                    const std::vector<WrappedGaussianParams>& components) {
  std::vector<double> lp(components.size(), -std::log(static_cast<double>(components.size())));
  return timbre_posterior(z, components, lp);
}

}  // namespace hytimbre::hypergauss
