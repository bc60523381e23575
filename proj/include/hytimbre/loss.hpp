#pragma once

// Training objective for the factorized-latent VAE: Gaussian reconstruction
// likelihood, closed-form pitch KL, Monte-Carlo timbre KL against the mixture
// of wrapped (or flat) Gaussian priors, categorical KL of the inferred timbre
// responsibilities against a uniform prior, and the two auxiliary
// cross-entropies.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "hytimbre/model.hpp"
#include "hytimbre/tensor.hpp"
#include "hytimbre/tensor_manifold.hpp"

namespace hytimbre::loss {

// ---------------------------------------------------------------------------
// scalar reference ops
// ---------------------------------------------------------------------------

// KL(N(xi, diag(eta^2)) || N(mu, sigma^2 I)), summed over dimensions.
// Computed per dimension as (expm1(2t) - 2t)/2 + (d/sigma)^2/2 with
// t = log(eta/sigma); both addends are nonnegative in floating point, so the
// result is exactly >= 0.
inline double kl_gaussian_diag(const std::vector<double>& xi, const std::vector<double>& eta,
                               const std::vector<double>& mu, double sigma) {
  if (xi.size() != eta.size() || xi.size() != mu.size())
    throw std::invalid_argument("kl_gaussian_diag: argument lengths differ");
  if (!(sigma > 0.0)) throw std::domain_error("kl_gaussian_diag: prior scale must be positive");
  double acc = 0.0;
  for (std::size_t i = 0; i < xi.size(); ++i) {
    if (!(eta[i] > 0.0)) throw std::domain_error("kl_gaussian_diag: posterior scale must be positive");
    double t2 = 2.0 * std::log(eta[i] / sigma);
    double d = (xi[i] - mu[i]) / sigma;
    acc += 0.5 * (std::expm1(t2) - t2) + 0.5 * d * d;
  }
  return acc;
}

// KL(q || uniform) = sum_j q_j log(|q| q_j), with 0 log 0 := 0.  The value is
// mathematically nonnegative; rounding of the sum is clamped at zero.
inline double kl_categorical_uniform(const std::vector<double>& q) {
  if (q.empty()) throw std::invalid_argument("kl_categorical_uniform: empty distribution");
  double logn = std::log(static_cast<double>(q.size()));
  double acc = 0.0;
  for (double p : q)
    if (p > 0.0) acc += p * (std::log(p) + logn);
  return acc > 0.0 ? acc : 0.0;
}

// ---------------------------------------------------------------------------
// batched graph pieces
// ---------------------------------------------------------------------------

namespace detail {

// Per-example KL of the diagonal-Gaussian posterior (xi, exp(log_eta)) against
// N(mu, sigma^2 I), as a [B,1] tensor.  Same exactly-nonnegative form as the
// scalar op.
inline ad::Tensor kl_gaussian_rows(const ad::Tensor& xi, const ad::Tensor& log_eta,
                                   const ad::Tensor& mu, double sigma) {
  ad::Tensor t2 = ad::add_const(ad::scale(log_eta, 2.0), -2.0 * std::log(sigma));
  ad::Tensor scale_term = ad::sub(ad::expm1(t2), t2);  // >= 0 elementwise
  ad::Tensor d = ad::scale(ad::sub(xi, mu), 1.0 / sigma);
  return ad::scale(ad::sum_rows(ad::add(scale_term, ad::mul(d, d))), 0.5);
}

// [B,1] mask-select of one column per row: sum_j onehot[b,j] * m[b,j].
inline ad::Tensor select_cols(const ad::Tensor& m, const std::vector<int>& idx,
                              const char* what) {
  std::size_t b = m.rows(), n = m.cols();
  if (idx.size() != b) throw std::invalid_argument(std::string(what) + ": label count differs from batch size");
  std::vector<double> mask(b * n, 0.0);
  for (std::size_t r = 0; r < b; ++r) {
    if (idx[r] < 0 || static_cast<std::size_t>(idx[r]) >= n)
      throw std::domain_error(std::string(what) + ": label " + std::to_string(idx[r]) + " out of range");
    mask[r * n + static_cast<std::size_t>(idx[r])] = 1.0;
  }
  return ad::sum_rows(ad::mul(m, ad::Tensor::matrix(std::move(mask), b, n, false)));
}

// Log density of every prior component at the timbre sample: [B, n_timbre].
inline ad::Tensor component_log_density(model::Model& m, const ad::Tensor& z) {
  const model::LatentConfig& cfg = m.config();
  if (cfg.geometry == model::Geometry::hyperbolic)
    return ad::wrapped_prior_log_density(z, m.timbre_prior_means(), cfg.timbre_sigma, cfg.K());
  return ad::gaussian_prior_log_density(z, m.timbre_prior_means(), cfg.timbre_sigma);
}

// Log density of the posterior at its own sample, via the tangent draw w.
inline ad::Tensor own_log_density(model::Model& m, const model::PosteriorParams& post,
                                  const model::TimbreSample& s) {
  if (m.config().geometry == model::Geometry::hyperbolic)
    return ad::wrapped_log_density_from_w(s.w, post.log_eta_t, m.config().K());
  return ad::gaussian_log_density_from_w(s.w, post.log_eta_t);
}

}  // namespace detail

// Timbre-label responsibilities q(y | x) as a [B, n_timbre] probability
// tensor.  The class prior is uniform, so the responsibilities are the row
// softmax of the per-component log densities.  When `rng` is given the
// posterior is represented by one reparameterized sample (training); when it
// is null the density is evaluated at the posterior mean (deterministic MAP
// evaluation).
inline ad::Tensor q_timbre_label(model::Model& m, const ad::Tensor& x, Rng* rng) {
  model::PosteriorParams post = m.encode(x);
  ad::Tensor z;
  if (rng) {
    z = m.reparameterize_timbre(post, *rng).z;
  } else {
    z = post.mean_t;
  }
  return ad::exp(ad::log_softmax(detail::component_log_density(m, z)));
}

// ---------------------------------------------------------------------------
// full objective
// ---------------------------------------------------------------------------

struct LossBreakdown {
  double recon = 0.0;               // E[log p(x | z)] up to an additive constant
  double kl_pitch = 0.0;            // KL(q(z_p) || p(z_p | y_p)), closed form
  double kl_timbre_expected = 0.0;  // sum_j q_j KL(q(z_t) || p(z_t | j)), MC
  double kl_category = 0.0;         // KL(q(y | x) || uniform)
  double ce_pitch = 0.0;            // -log p(y_p | z_p)
  double ce_timbre = 0.0;           // -log q(y_t | x)
  double total = 0.0;
};

// total = -(recon - kl_pitch - kl_timbre - kl_category) + ce_pitch + ce_timbre
inline double breakdown_gap(const LossBreakdown& b) {
  double expect = -(b.recon - b.kl_pitch - b.kl_timbre_expected - b.kl_category) +
                  b.ce_pitch + b.ce_timbre;
  return std::abs(b.total - expect);
}

struct LossResult {
  ad::Tensor total;  // scalar graph tensor; backward() drives training
  LossBreakdown parts;
};

// Builds the complete objective graph for one batch.  All terms are batch
// means.  One latent sample feeds the reconstruction, the cross-entropies and
// the responsibilities; `mc_samples` controls how many tangent draws average
// the timbre KL estimate (the first is the shared sample).
inline LossResult total_loss(model::Model& m, const ad::Tensor& x, const std::vector<int>& y_pitch,
                             const std::vector<int>& y_timbre, Rng& rng, int mc_samples = 1,
                             const ad::Tensor* x_timbre = nullptr) {
  const model::LatentConfig& cfg = m.config();
  std::size_t b = x.rows();
  if (b == 0) throw std::invalid_argument("total_loss: empty batch");
  if (mc_samples < 1) throw std::invalid_argument("total_loss: mc_samples must be >= 1");
  if (y_pitch.size() != b || y_timbre.size() != b)
    throw std::invalid_argument("total_loss: label count differs from batch size");
  for (int y : y_pitch)
    if (y < 0 || y >= cfg.n_pitch)
      throw std::domain_error("total_loss: pitch label " + std::to_string(y) + " out of range");
  for (int y : y_timbre)
    if (y < 0 || y >= cfg.n_timbre)
      throw std::domain_error("total_loss: timbre label " + std::to_string(y) + " out of range");

  double inv_b = 1.0 / static_cast<double>(b);
  model::PosteriorParams post = x_timbre ? m.encode(x, *x_timbre) : m.encode(x);
  ad::Tensor z_p = m.reparameterize_pitch(post, rng);
  model::TimbreSample s = m.reparameterize_timbre(post, rng);

  // Gaussian log likelihood with unit scale, constant term dropped.
  ad::Tensor err = ad::sub(x, m.decode(z_p, s.z));
  ad::Tensor recon = ad::scale(ad::sum_all(ad::mul(err, err)), -0.5 * inv_b);

  ad::Tensor mu_p = ad::gather_rows(m.pitch_prior_means(), y_pitch);
  ad::Tensor kl_p = ad::scale(ad::sum_all(detail::kl_gaussian_rows(post.xi_p, post.log_eta_p,
                                                                   mu_p, cfg.pitch_sigma)),
                              inv_b);

  // Responsibilities from the shared sample; log q is its log_softmax.
  ad::Tensor comp_ll = detail::component_log_density(m, s.z);  // [B, T]
  ad::Tensor log_q = ad::log_softmax(comp_ll);
  ad::Tensor q = ad::exp(log_q);

  // sum_j q_j KL(q(z_t) || p_j) estimated as the average over tangent draws of
  // log q(z) - sum_j q_j log p_j(z), with the responsibilities held at the
  // shared sample.
  ad::Tensor kl_t_acc = ad::sub(detail::own_log_density(m, post, s), ad::sum_rows(ad::mul(q, comp_ll)));
  for (int draw = 1; draw < mc_samples; ++draw) {
    model::TimbreSample extra = m.reparameterize_timbre(post, rng);
    ad::Tensor comp_extra = detail::component_log_density(m, extra.z);
    kl_t_acc = ad::add(kl_t_acc, ad::sub(detail::own_log_density(m, post, extra),
                                         ad::sum_rows(ad::mul(q, comp_extra))));
  }
  ad::Tensor kl_t = ad::scale(ad::sum_all(kl_t_acc), inv_b / static_cast<double>(mc_samples));

  // KL(q(y|x) || uniform) = log T + sum_j q_j log q_j; clamped at its
  // mathematical floor of zero (relu keeps the gradient where it is positive).
  ad::Tensor kl_cat = ad::relu(ad::add_const(ad::scale(ad::sum_all(ad::mul(q, log_q)), inv_b),
                                             std::log(static_cast<double>(cfg.n_timbre))));

  ad::Tensor ce_p = ad::scale(ad::sum_all(detail::select_cols(ad::log_softmax(m.pitch_logits(z_p)),
                                                              y_pitch, "total_loss")),
                              -inv_b);
  ad::Tensor ce_t = ad::scale(ad::sum_all(detail::select_cols(log_q, y_timbre, "total_loss")),
                              -inv_b);

  LossResult out;
  out.total = ad::add(ad::neg(ad::sub(recon, ad::add(ad::add(kl_p, kl_t), kl_cat))),
                      ad::add(ce_p, ce_t));
  out.parts.recon = recon.item();
  out.parts.kl_pitch = kl_p.item();
  out.parts.kl_timbre_expected = kl_t.item();
  out.parts.kl_category = kl_cat.item();
  out.parts.ce_pitch = ce_p.item();
  out.parts.ce_timbre = ce_t.item();
  out.parts.total = out.total.item();
  return out;
}

}  // namespace hytimbre::loss
