#pragma once

// Mini-batch Adam training loop with early stopping on a validation ELBO
// criterion, deterministic given the seed, plus the plain-text run
// configuration format shared with the command line tools.

#include <algorithm>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "hytimbre/dataset.hpp"
#include "hytimbre/errors.hpp"
#include "hytimbre/loss.hpp"
#include "hytimbre/model.hpp"
#include "hytimbre/rng.hpp"

namespace hytimbre::train {

struct TrainConfig {
  int batch_size = 128;  // capped at the training-split size
  double learning_rate = 1e-4;
  int max_epochs = 2000;
  int patience = 50;  // epochs without validation improvement before stopping
  int mc_samples = 1;
  std::uint64_t seed = 0;
  bool full_elbo_stop = false;   // include the pitch KL in the stopping criterion
  double weight_decay = 0.0;     // decoupled decay on matrix weights ("*.w") only
  double input_noise = 0.0;      // stddev of iid Gaussian added to training inputs
  int freq_shift = 0;            // max train-time mel-bin shift (pitch-like augmentation)

  void validate() const {
    if (batch_size < 1) throw ConfigError("train: batch_size must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
    if (max_epochs < 1) throw ConfigError("train: max_epochs must be positive");
    if (patience < 0) throw ConfigError("train: patience must be >= 0");
    if (mc_samples < 1) throw ConfigError("train: mc_samples must be positive");
    if (weight_decay < 0.0) throw ConfigError("train: weight_decay must be >= 0");
    if (input_noise < 0.0) throw ConfigError("train: input_noise must be >= 0");
    if (freq_shift < 0) throw ConfigError("train: freq_shift must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// run configuration files: `key = value` lines, '#' comments
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value '" + v + "' for key '" + key + "'");
  }
}

inline long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer value '" + v + "' for key '" + key + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config: bad boolean value '" + v + "' for key '" + key + "'");
}

inline std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::string cur;
  for (std::size_t i = 0; i <= v.size(); ++i) {
    if (i == v.size() || v[i] == ',') {
      std::string item = trim(cur);
      if (!item.empty()) out.push_back(static_cast<int>(to_int(key, item)));
      cur.clear();
    } else {
      cur += v[i];
    }
  }
  return out;
}

}  // namespace detail

// Ordered key/value pairs from a config file.  Lines are `key = value`;
// blank lines and '#' comments are skipped; anything else is an error.
inline std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int ln = 0;
  while (std::getline(in, line)) {
    ++ln;
    std::string s = detail::trim(line);
    if (s.empty() || s[0] == '#') continue;
    std::size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(ln) + " is not 'key = value'");
    std::string key = detail::trim(s.substr(0, eq));
    std::string val = detail::trim(s.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ConfigError("config: line " + std::to_string(ln) + " is not 'key = value'");
    out.emplace_back(std::move(key), std::move(val));
  }
  return out;
}

// Applies config entries to the training and model settings.  Unknown keys
// are errors.
inline void apply_config(const std::vector<std::pair<std::string, std::string>>& entries,
                         TrainConfig& tc, model::LatentConfig& mc) {
  for (const auto& [key, val] : entries) {
    if (key == "batch_size") tc.batch_size = static_cast<int>(detail::to_int(key, val));
    else if (key == "learning_rate") tc.learning_rate = detail::to_double(key, val);
    else if (key == "max_epochs") tc.max_epochs = static_cast<int>(detail::to_int(key, val));
    else if (key == "patience") tc.patience = static_cast<int>(detail::to_int(key, val));
    else if (key == "mc_samples") tc.mc_samples = static_cast<int>(detail::to_int(key, val));
    else if (key == "seed") tc.seed = static_cast<std::uint64_t>(detail::to_int(key, val));
    else if (key == "full_elbo_stop") tc.full_elbo_stop = detail::to_bool(key, val);
    else if (key == "weight_decay") tc.weight_decay = detail::to_double(key, val);
    else if (key == "input_noise") tc.input_noise = detail::to_double(key, val);
    else if (key == "freq_shift") tc.freq_shift = static_cast<int>(detail::to_int(key, val));
    else if (key == "hidden") mc.hidden = detail::to_int_list(key, val);
    else if (key == "pitch_sigma") mc.pitch_sigma = detail::to_double(key, val);
    else if (key == "timbre_sigma") mc.timbre_sigma = detail::to_double(key, val);
    else if (key == "decoder_tangent_input") mc.decoder_tangent_input = detail::to_bool(key, val);
    else throw ConfigError("config: unknown key '" + key + "'");
  }
}

inline void load_config_file(const std::string& path, TrainConfig& tc, model::LatentConfig& mc) {
  apply_config(parse_config_file(path), tc, mc);
}

// ---------------------------------------------------------------------------
// training loop
// ---------------------------------------------------------------------------

struct EpochRow {
  int epoch = 0;                 // 1-based
  loss::LossBreakdown train;     // batch-weighted epoch means
  double val_criterion = 0.0;
};

struct TrainResult {
  std::vector<EpochRow> log;
  int best_epoch = 0;
  double best_criterion = 0.0;
  int steps = 0;  // optimizer updates performed
};

namespace detail {

inline ad::Tensor feature_tensor(const data::Dataset& ds, const std::vector<std::size_t>& idx) {
  std::size_t dim = ds.feature_dim();
  std::vector<double> v;
  v.reserve(idx.size() * dim);
  for (std::size_t i : idx) {
    std::vector<double> f = ds.features(i);
    v.insert(v.end(), f.begin(), f.end());
  }
  return ad::Tensor::matrix(std::move(v), idx.size(), dim, false);
}

inline void labels_of(const data::Dataset& ds, const std::vector<std::size_t>& idx,
                      std::vector<int>& y_pitch, std::vector<int>& y_timbre) {
  y_pitch.clear();
  y_timbre.clear();
  for (std::size_t i : idx) {
    y_pitch.push_back(ds.examples[i].pitch);
    y_timbre.push_back(ds.examples[i].timbre);
  }
}

inline std::string tsv_row(const EpochRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%d\t%.12g\t%.12g\t%.12g\t%.12g\t%.12g\t%.12g\t%.12g\t%.12g",
                r.epoch, r.train.recon, r.train.kl_pitch, r.train.kl_timbre_expected,
                r.train.kl_category, r.train.ce_pitch, r.train.ce_timbre, r.train.total,
                r.val_criterion);
  return buf;
}

}  // namespace detail

inline const char* log_header() {
  return "epoch\trecon\tkl_pitch\tkl_timbre\tkl_category\tce_pitch\tce_timbre\ttotal\tval_criterion";
}

// ELBO-based validation criterion (higher is better): recon - kl_timbre -
// kl_category, plus -kl_pitch when the full ELBO is requested.  Evaluated
// with one shared latent sample from `rng`.
inline double validation_criterion(model::Model& m, const ad::Tensor& x,
                                   const std::vector<int>& y_pitch, const std::vector<int>& y_timbre,
                                   Rng& rng, const TrainConfig& cfg) {
  loss::LossResult res = loss::total_loss(m, x, y_pitch, y_timbre, rng, cfg.mc_samples);
  double crit = res.parts.recon - res.parts.kl_timbre_expected - res.parts.kl_category;
  if (cfg.full_elbo_stop) crit -= res.parts.kl_pitch;
  return crit;
}

// Trains `m` in place and restores the parameters of the best validation
// epoch before returning.  Writes one TSV row per epoch to `log_out` when
// given; identical seeds and inputs produce identical logs.
inline TrainResult train(model::Model& m, const data::Dataset& ds, const TrainConfig& cfg,
                         std::ostream* log_out = nullptr) {
  cfg.validate();
  std::vector<std::size_t> train_idx = ds.split_indices(data::Split::train);
  std::vector<std::size_t> val_idx = ds.split_indices(data::Split::val);
  if (train_idx.empty()) throw ConfigError("train: training split is empty");
  if (val_idx.empty()) throw ConfigError("train: validation split is empty");

  ad::Tensor val_x = detail::feature_tensor(ds, val_idx);
  std::vector<int> val_yp, val_yt;
  detail::labels_of(ds, val_idx, val_yp, val_yt);

  const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size),
                                                  train_idx.size());
  Rng sample_rng(derive_seed(cfg.seed, 0, 4));

  TrainResult out;
  std::map<std::string, std::vector<double>> best = m.store().snapshot();
  double best_crit = 0.0;
  bool have_best = false;
  int since_best = 0;

  if (log_out) *log_out << log_header() << "\n";

  std::vector<int> yp, yt;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 3));
    std::vector<std::size_t> order = train_idx;
    shuffle_rng.shuffle(order);
    Rng noise_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 6));

    loss::LossBreakdown mean;
    double seen = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      std::size_t stop = std::min(order.size(), start + batch);
      std::vector<std::size_t> bidx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(stop));
      ad::Tensor x = detail::feature_tensor(ds, bidx);
      detail::labels_of(ds, bidx, yp, yt);
      const bool augment = cfg.freq_shift > 0 || cfg.input_noise > 0.0;
      ad::Tensor x_t;
      if (augment) {
        // The timbre encoder sees an augmented view; the pitch encoder, the
        // labels and the reconstruction target stay clean.
        x_t = detail::feature_tensor(ds, bidx);
        std::vector<double>& v = x_t.node()->val;
        if (cfg.freq_shift > 0) {
          // Per example, translate the mel axis by a random whole-bin offset
          // (features are row-major n_mel x n_frames); vacated bins become 0,
          // the post-standardization mean.  Approximates a pitch change, so
          // the timbre factor cannot key on absolute partial positions.
          const int nm = static_cast<int>(ds.n_mel), nf = static_cast<int>(ds.n_frames);
          std::vector<double> orig(static_cast<std::size_t>(nm) * static_cast<std::size_t>(nf));
          for (std::size_t e = 0; e < bidx.size(); ++e) {
            const int sh = static_cast<int>(std::floor(
                               noise_rng.uniform(0.0, 2.0 * cfg.freq_shift + 1.0))) -
                           cfg.freq_shift;
            if (sh == 0) continue;
            double* base = v.data() + e * orig.size();
            std::copy(base, base + orig.size(), orig.begin());
            for (int b = 0; b < nm; ++b) {
              double* dst = base + static_cast<std::size_t>(b) * static_cast<std::size_t>(nf);
              const int src = b - sh;
              if (src < 0 || src >= nm)
                std::fill(dst, dst + nf, 0.0);
              else
                std::copy(orig.begin() + static_cast<std::size_t>(src) * static_cast<std::size_t>(nf),
                          orig.begin() + static_cast<std::size_t>(src + 1) * static_cast<std::size_t>(nf),
                          dst);
            }
          }
        }
        if (cfg.input_noise > 0.0)
          for (double& c : v) c += cfg.input_noise * noise_rng.gaussian();
      }

      loss::LossResult res = loss::total_loss(m, x, yp, yt, sample_rng, cfg.mc_samples,
                                              augment ? &x_t : nullptr);
      m.store().zero_grad();
      ad::backward(res.total);
      m.store().adam_step(cfg.learning_rate, 0.9, 0.999, 1e-8, cfg.weight_decay);
      ++out.steps;

      double w = static_cast<double>(bidx.size());
      mean.recon += w * res.parts.recon;
      mean.kl_pitch += w * res.parts.kl_pitch;
      mean.kl_timbre_expected += w * res.parts.kl_timbre_expected;
      mean.kl_category += w * res.parts.kl_category;
      mean.ce_pitch += w * res.parts.ce_pitch;
      mean.ce_timbre += w * res.parts.ce_timbre;
      mean.total += w * res.parts.total;
      seen += w;
    }
    mean.recon /= seen;
    mean.kl_pitch /= seen;
    mean.kl_timbre_expected /= seen;
    mean.kl_category /= seen;
    mean.ce_pitch /= seen;
    mean.ce_timbre /= seen;
    mean.total /= seen;

    Rng val_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 5));
    EpochRow row;
    row.epoch = epoch;
    row.train = mean;
    row.val_criterion = validation_criterion(m, val_x, val_yp, val_yt, val_rng, cfg);
    out.log.push_back(row);
    if (log_out) *log_out << detail::tsv_row(row) << "\n";

    if (!have_best || row.val_criterion > best_crit) {
      have_best = true;
      best_crit = row.val_criterion;
      out.best_epoch = epoch;
      best = m.store().snapshot();
      since_best = 0;
    } else {
      ++since_best;
      if (since_best > cfg.patience) break;
    }
  }

  m.store().restore(best);
  out.best_criterion = best_crit;
  return out;
}

}  // namespace hytimbre::train
