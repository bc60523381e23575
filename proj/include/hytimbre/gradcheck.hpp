#pragma once

// Finite-difference validation of the full objective gradient: every
// parameter element of a small model is perturbed centrally and compared
// against the backward pass.  Shared by the test suite and the `gradcheck`
// command line tool.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "hytimbre/loss.hpp"
#include "hytimbre/model.hpp"
#include "hytimbre/rng.hpp"

namespace hytimbre::gradcheck {

// Central differences carry rounding noise of order eps * |f| / (2h); a
// disagreement smaller than that resolution says nothing about the analytic
// gradient.  The excess over the resolution is compared relatively.
inline double rel_err(double fd, double an, double atol) {
  double excess = std::abs(fd - an) - atol;
  if (excess <= 0.0) return 0.0;
  return excess / (std::abs(fd) + std::abs(an) + 1e-8);
}

// Max relative error between analytic and central-difference gradients of
// total_loss over every parameter element.  The latent sample stream is
// replayed from a fixed seed for every evaluation so the objective is a
// deterministic function of the parameters.
inline double loss_fd_max_rel(const model::LatentConfig& cfg, std::uint64_t seed,
                              std::size_t batch = 2, int mc_samples = 2, double h = 1e-4) {
  model::Model m(cfg, seed);
  Rng data_rng(derive_seed(seed, 1));
  std::vector<double> xv(batch * static_cast<std::size_t>(cfg.input_dim));
  for (double& v : xv) v = data_rng.gaussian();
  ad::Tensor x = ad::Tensor::matrix(std::move(xv), batch, static_cast<std::size_t>(cfg.input_dim), false);
  std::vector<int> yp(batch), yt(batch);
  for (std::size_t i = 0; i < batch; ++i) {
    yp[i] = static_cast<int>(data_rng.index(static_cast<std::size_t>(cfg.n_pitch)));
    yt[i] = static_cast<int>(data_rng.index(static_cast<std::size_t>(cfg.n_timbre)));
  }

  const std::uint64_t eval_seed = derive_seed(seed, 2);
  auto eval = [&]() {
    Rng r(eval_seed);
    return loss::total_loss(m, x, yp, yt, r, mc_samples).parts.total;
  };

  double f0 = 0.0;
  {
    Rng r(eval_seed);
    loss::LossResult res = loss::total_loss(m, x, yp, yt, r, mc_samples);
    m.store().zero_grad();
    ad::backward(res.total);
    f0 = res.parts.total;
  }
  std::vector<std::pair<std::string, std::vector<double>>> grads;
  for (auto& [name, t] : m.store().params()) grads.emplace_back(name, t.node()->grad);

  const double atol = 1e-12 * std::max(1.0, std::abs(f0)) / (2.0 * h);
  double worst = 0.0;
  for (auto& [name, an] : grads) {
    ad::Tensor& t = m.store().get(name);
    std::vector<double>& v = t.mutable_value();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double keep = v[i];
      v[i] = keep + h;
      const double fp = eval();
      v[i] = keep - h;
      const double fm = eval();
      v[i] = keep;
      worst = std::max(worst, rel_err((fp - fm) / (2.0 * h), an[i], atol));
    }
  }
  return worst;
}

struct Check {
  std::string name;
  double max_rel = 0.0;
};

// Standard end-to-end battery: flat geometry plus curved at unit and large
// radius, each on a two-example model covering every parameter.
inline std::vector<Check> loss_gradient_battery(std::uint64_t seed = 9001) {
  model::LatentConfig base;
  base.dp = 2;
  base.dt = 2;
  base.n_pitch = 3;
  base.n_timbre = 3;
  base.input_dim = 8;
  base.hidden = {6};

  std::vector<Check> out;
  {
    model::LatentConfig cfg = base;
    cfg.geometry = model::Geometry::euclidean;
    out.push_back({"euclidean", loss_fd_max_rel(cfg, seed)});
  }
  for (double radius : {1.0, 100.0}) {
    model::LatentConfig cfg = base;
    cfg.geometry = model::Geometry::hyperbolic;
    cfg.radius = radius;
    char name[64];
    std::snprintf(name, sizeof name, "hyperbolic R=%g", radius);
    out.push_back({name, loss_fd_max_rel(cfg, seed)});
  }
  return out;
}

}  // namespace hytimbre::gradcheck
