#pragma once

// Dual-latent VAE: a Euclidean pitch factor and a timbre factor that lives
// either in flat space or on the Lorentz hyperboloid behind a geometry
// switch.  Encoders emit posterior means and log-scales; the hyperbolic
// timbre mean is parameterized in the tangent space at the origin and mapped
// through exp.  Per-label priors (trainable means, fixed sigmas) and a linear
// pitch classifier complete the model.
//
// All operations are batched: mel inputs are [B, input_dim] rows, latents
// [B, D] (or [B, D+1] ambient coordinates on the hyperboloid).

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hytimbre/errors.hpp"
#include "hytimbre/rng.hpp"
#include "hytimbre/tensor.hpp"
#include "hytimbre/tensor_manifold.hpp"

namespace hytimbre::model {

enum class Geometry { euclidean, hyperbolic };

inline const char* geometry_name(Geometry g) {
  return g == Geometry::euclidean ? "euclidean" : "hyperbolic";
}

inline Geometry geometry_from_name(const std::string& s) {
  if (s == "euclidean") return Geometry::euclidean;
  if (s == "hyperbolic") return Geometry::hyperbolic;
  throw ConfigError("unknown geometry '" + s + "' (expected euclidean|hyperbolic)");
}

struct LatentConfig {
  int dp = 16;  // pitch latent dimension
  int dt = 4;   // timbre latent dimension
  Geometry geometry = Geometry::hyperbolic;
  double radius = 1.0;  // curvature radius R, hyperbolic only
  int n_pitch = 20;
  int n_timbre = 12;
  int input_dim = 64 * 16;  // flattened mel
  std::vector<int> hidden = {512, 256};
  bool decoder_tangent_input = false;  // feed log-mapped tangent coords instead of ambient
  double pitch_sigma = std::exp(-2.0);
  double timbre_sigma = 1.0;

  double K() const { return -1.0 / (radius * radius); }

  void validate() const {
    if (dp < 1 || dt < 1) throw ConfigError("latent dimensions must be >= 1");
    if (!(radius > 0.0)) throw ConfigError("curvature radius must be positive");
    if (n_pitch < 1 || n_timbre < 1) throw ConfigError("label counts must be >= 1");
    if (input_dim < 1) throw ConfigError("input dimension must be >= 1");
    for (int h : hidden)
      if (h < 1) throw ConfigError("hidden sizes must be >= 1");
    if (!(pitch_sigma > 0.0) || !(timbre_sigma > 0.0))
      throw ConfigError("prior sigmas must be positive");
  }
};

// Batched posterior parameters from the two encoders.
struct PosteriorParams {
  ad::Tensor xi_p, log_eta_p;  // [B, D_p]
  ad::Tensor xi_t, log_eta_t;  // [B, D_t] (xi_t in tangent coordinates)
  ad::Tensor mean_t;           // [B, D_t+1] on-manifold mean, or xi_t when flat
};

struct TimbreSample {
  ad::Tensor z;  // [B, D_t+1] ambient (hyperbolic) or [B, D_t] (euclidean)
  ad::Tensor w;  // [B, D_t] tangent draw eps * eta
};

class Model {
 public:
  Model(LatentConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng init(derive_seed(seed, 0, 2));

    auto mlp = [&](const std::string& prefix, int in, const std::vector<int>& sizes) {
      int cur = in;
      for (std::size_t l = 0; l < sizes.size(); ++l) {
        add_linear(prefix + ".l" + std::to_string(l), cur, sizes[l], init);
        cur = sizes[l];
      }
      return cur;
    };

    const int trunk_p = mlp("enc_p", cfg_.input_dim, cfg_.hidden);
    add_linear("enc_p.mu", trunk_p, cfg_.dp, init);
    add_linear("enc_p.ls", trunk_p, cfg_.dp, init);

    const int trunk_t = mlp("enc_t", cfg_.input_dim, cfg_.hidden);
    add_linear("enc_t.mu", trunk_t, cfg_.dt, init);
    add_linear("enc_t.ls", trunk_t, cfg_.dt, init);

    std::vector<int> dec_hidden(cfg_.hidden.rbegin(), cfg_.hidden.rend());
    const int trunk_d = mlp("dec", decoder_input_dim(), dec_hidden);
    add_linear("dec.out", trunk_d, cfg_.input_dim, init);

    add_linear("cls", cfg_.dp, cfg_.n_pitch, init);

    auto& pm = store_.create("prior.pitch_means",
                             {static_cast<std::size_t>(cfg_.n_pitch), static_cast<std::size_t>(cfg_.dp)});
    ad::xavier_uniform(pm, init);
    auto& tt = store_.create("prior.timbre_tangents",
                             {static_cast<std::size_t>(cfg_.n_timbre), static_cast<std::size_t>(cfg_.dt)});
    ad::xavier_uniform(tt, init);
  }

  const LatentConfig& config() const { return cfg_; }
  ad::ParamStore& store() { return store_; }
  const ad::ParamStore& store() const { return store_; }

  int decoder_input_dim() const {
    const int zt = cfg_.geometry == Geometry::hyperbolic && !cfg_.decoder_tangent_input
                       ? cfg_.dt + 1
                       : cfg_.dt;
    return cfg_.dp + zt;
  }

  // --- encoders -----------------------------------------------------------

  void check_input(const ad::Tensor& x) const {
    if (static_cast<int>(x.cols()) != cfg_.input_dim)
      throw std::invalid_argument("model: input has " + std::to_string(x.cols()) +
                                  " features, expected " + std::to_string(cfg_.input_dim));
  }

  PosteriorParams encode(const ad::Tensor& x) { return encode(x, x); }

  // The two factors may see different views of the batch (the training loop
  // feeds the timbre encoder an augmented copy); rows must correspond.
  PosteriorParams encode(const ad::Tensor& x_pitch, const ad::Tensor& x_timbre) {
    check_input(x_pitch);
    check_input(x_timbre);
    if (x_pitch.rows() != x_timbre.rows())
      throw std::invalid_argument("model: encoder views have different batch sizes");
    PosteriorParams out;
    ad::Tensor hp = trunk("enc_p", x_pitch);
    out.xi_p = linear("enc_p.mu", hp);
    out.log_eta_p = linear("enc_p.ls", hp);
    ad::Tensor ht = trunk("enc_t", x_timbre);
    out.xi_t = linear("enc_t.mu", ht);
    out.log_eta_t = linear("enc_t.ls", ht);
    out.mean_t = cfg_.geometry == Geometry::hyperbolic
                     ? ad::exp_map_rows(ad::origin_row(cfg_.dt, cfg_.K()),
                                        ad::lift_rows(out.xi_t), cfg_.K())
                     : out.xi_t;
    return out;
  }

  // --- reparameterization -------------------------------------------------

  // z_p = xi_p + eps * eta_p; eps is drawn row-major so the stream is
  // identical across geometries.
  ad::Tensor reparameterize_pitch(const PosteriorParams& p, Rng& rng) {
    ad::Tensor eps = gaussian_tensor(p.xi_p.rows(), p.xi_p.cols(), rng);
    return ad::add(p.xi_p, ad::mul(eps, ad::exp(p.log_eta_p)));
  }

  TimbreSample reparameterize_timbre(const PosteriorParams& p, Rng& rng) {
    ad::Tensor eps = gaussian_tensor(p.xi_t.rows(), p.xi_t.cols(), rng);
    TimbreSample s;
    s.w = ad::mul(eps, ad::exp(p.log_eta_t));
    s.z = cfg_.geometry == Geometry::hyperbolic ? ad::proj_rows(p.mean_t, s.w, cfg_.K())
                                                : ad::add(p.xi_t, s.w);
    return s;
  }

  // --- decoder / classifier -----------------------------------------------

  ad::Tensor decode(const ad::Tensor& z_p, const ad::Tensor& z_t) {
    if (static_cast<int>(z_p.cols()) != cfg_.dp)
      throw std::invalid_argument("decode: pitch latent has wrong dimension");
    ad::Tensor zt_in = z_t;
    if (cfg_.geometry == Geometry::hyperbolic) {
      if (static_cast<int>(z_t.cols()) != cfg_.dt + 1)
        throw std::invalid_argument("decode: timbre latent must be ambient coordinates");
      if (cfg_.decoder_tangent_input) {
        ad::Tensor u = ad::log_map_rows(ad::origin_row(cfg_.dt, cfg_.K()), z_t, cfg_.K());
        zt_in = ad::slice_cols(u, 1, static_cast<std::size_t>(cfg_.dt));
      }
    } else if (static_cast<int>(z_t.cols()) != cfg_.dt) {
      throw std::invalid_argument("decode: timbre latent has wrong dimension");
    }
    ad::Tensor h = trunk("dec", ad::concat_cols(z_p, zt_in));
    return linear("dec.out", h);
  }

  ad::Tensor pitch_logits(const ad::Tensor& z_p) {
    if (static_cast<int>(z_p.cols()) != cfg_.dp)
      throw std::invalid_argument("classify_pitch: latent has wrong dimension");
    return linear("cls", z_p);
  }

  ad::Tensor classify_pitch(const ad::Tensor& z_p) {
    return ad::exp(ad::log_softmax(pitch_logits(z_p)));
  }

  // --- priors ---------------------------------------------------------------

  ad::Tensor pitch_prior_means() { return store_.get("prior.pitch_means"); }

  // [T, D_t+1] on-manifold means (hyperbolic) or the raw [T, D_t] matrix.
  ad::Tensor timbre_prior_means() {
    ad::Tensor tangents = store_.get("prior.timbre_tangents");
    if (cfg_.geometry == Geometry::euclidean) return tangents;
    return ad::exp_map_rows(ad::origin_row(cfg_.dt, cfg_.K()), ad::lift_rows(tangents), cfg_.K());
  }

  // --- persistence ----------------------------------------------------------

  void save(const std::string& path) const {
    store_.save(path);
    io::write_file(path + ".json", config_json());
  }

  static Model load(const std::string& path);

  std::string config_json() const;

 private:
  void add_linear(const std::string& name, int in, int out, Rng& rng) {
    auto& w = store_.create(name + ".w",
                            {static_cast<std::size_t>(in), static_cast<std::size_t>(out)});
    ad::xavier_uniform(w, rng);
    store_.create(name + ".b", {1, static_cast<std::size_t>(out)});
  }

  ad::Tensor linear(const std::string& name, const ad::Tensor& x) {
    return ad::add(ad::matmul(x, store_.get(name + ".w")), store_.get(name + ".b"));
  }

  // hidden stack: linear -> ReLU -> layer norm
  ad::Tensor trunk(const std::string& prefix, const ad::Tensor& x) {
    ad::Tensor h = x;
    for (std::size_t l = 0; store_.has(prefix + ".l" + std::to_string(l) + ".w"); ++l)
      h = ad::layer_norm(ad::relu(linear(prefix + ".l" + std::to_string(l), h)));
    return h;
  }

  static ad::Tensor gaussian_tensor(std::size_t rows, std::size_t cols, Rng& rng) {
    std::vector<double> v(rows * cols);
    for (auto& x : v) x = rng.gaussian();
    return ad::Tensor::matrix(std::move(v), rows, cols, false);
  }

  LatentConfig cfg_;
  ad::ParamStore store_;
};

}  // namespace hytimbre::model

// --- JSON sidecar -----------------------------------------------------------

#include <json.hpp>

namespace hytimbre::model {

inline std::string Model::config_json() const {
  nlohmann::json j;
  j["geometry"] = geometry_name(cfg_.geometry);
  j["radius"] = cfg_.radius;
  j["dp"] = cfg_.dp;
  j["dt"] = cfg_.dt;
  j["n_pitch"] = cfg_.n_pitch;
  j["n_timbre"] = cfg_.n_timbre;
  j["input_dim"] = cfg_.input_dim;
  j["hidden"] = cfg_.hidden;
  j["decoder_tangent_input"] = cfg_.decoder_tangent_input;
  j["pitch_sigma"] = cfg_.pitch_sigma;
  j["timbre_sigma"] = cfg_.timbre_sigma;
  return j.dump(2) + "\n";
}

inline Model Model::load(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path + ".json"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ".json: invalid model header: " + e.what(), 0);
  }
  LatentConfig cfg;
  try {
    cfg.geometry = geometry_from_name(j.at("geometry").get<std::string>());
    cfg.radius = j.at("radius").get<double>();
    cfg.dp = j.at("dp").get<int>();
    cfg.dt = j.at("dt").get<int>();
    cfg.n_pitch = j.at("n_pitch").get<int>();
    cfg.n_timbre = j.at("n_timbre").get<int>();
    cfg.input_dim = j.at("input_dim").get<int>();
    cfg.hidden = j.at("hidden").get<std::vector<int>>();
    cfg.decoder_tangent_input = j.at("decoder_tangent_input").get<bool>();
    cfg.pitch_sigma = j.at("pitch_sigma").get<double>();
    cfg.timbre_sigma = j.at("timbre_sigma").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ".json: missing or mistyped model header field: " + e.what(), 0);
  }
  Model m(cfg, 0);
  m.store_.load(path);  // shapes validated against the freshly built store
  return m;
}

}  // namespace hytimbre::model
