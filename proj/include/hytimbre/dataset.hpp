#pragma once

// Synthetic corpus builder, dataset container, stratified splits, and the
// MEL1 on-disk format.  Features are ln(mel + 1e-5) standardized with
// training-split statistics; the statistics live in the file header so a
// loaded corpus is self-describing.
//
// MEL1 layout (little-endian):
//   magic "MEL1" | u32 version | u32 example count | u16 n_mel | u16 n_frames
//   | u16 |P| | u16 |T| | f64 mean | f64 std | |P| names | |T| names
//   | per example: u16 pitch, u16 timbre, u8 split, f32 mel values row-major.
// Names are u16-length-prefixed UTF-8; timbre names follow the convention
// "family/instrument", which is where the family partition comes from.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "hytimbre/bytes.hpp"
#include "hytimbre/errors.hpp"
#include "hytimbre/mel.hpp"
#include "hytimbre/rng.hpp"
#include "hytimbre/synth.hpp"

namespace hytimbre::data {

enum class Split : std::uint8_t { train = 0, val = 1, test = 2 };

struct MelExample {
  std::vector<float> mel;  // standardized, row-major n_mel x n_frames
  std::uint16_t pitch = 0;
  std::uint16_t timbre = 0;
  Split split = Split::train;
};

struct Dataset {
  std::uint16_t n_mel = 0, n_frames = 0;
  double mean = 0.0, stddev = 1.0;  // training-split compression statistics
  std::vector<std::string> pitch_names;
  std::vector<std::string> timbre_names;
  std::vector<MelExample> examples;

  std::size_t feature_dim() const {
    return static_cast<std::size_t>(n_mel) * static_cast<std::size_t>(n_frames);
  }

  std::vector<std::size_t> split_indices(Split s) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < examples.size(); ++i)
      if (examples[i].split == s) out.push_back(i);
    return out;
  }

  std::vector<double> features(std::size_t idx) const {
    const auto& m = examples[idx].mel;
    return std::vector<double>(m.begin(), m.end());
  }

  // family of each timbre label, from the "family/instrument" name prefix;
  // ids are assigned in order of first appearance.
  std::vector<int> family_ids() const {
    std::vector<int> out;
    std::map<std::string, int> seen;
    for (const auto& name : timbre_names) {
      const auto slash = name.find('/');
      const std::string fam = slash == std::string::npos ? name : name.substr(0, slash);
      auto it = seen.find(fam);
      if (it == seen.end()) it = seen.emplace(fam, static_cast<int>(seen.size())).first;
      out.push_back(it->second);
    }
    return out;
  }

  int n_families() const {
    int mx = -1;
    for (int f : family_ids()) mx = std::max(mx, f);
    return mx + 1;
  }
};

struct CorpusConfig {
  std::vector<synth::InstrumentSpec> instruments = synth::default_instruments();
  std::vector<int> family_sizes = {6, 3, 2, 1};
  std::vector<double> pitches = synth::pitch_set();
  double sample_rate = 16000.0;
  double window_ms = 32.0, hop_ms = 16.0;
  std::size_t n_mel = 64, n_frames = 16;
  double fmin_hz = 50.0, fmax_hz = 8000.0;
  int train_per_instrument = 16, val_per_instrument = 2, test_per_instrument = 2;

  double duration_s() const {
    return (static_cast<double>(n_frames - 1) * hop_ms + window_ms) / 1000.0;
  }
};

inline void validate(const CorpusConfig& cfg) {
  int fam_sum = 0;
  for (int s : cfg.family_sizes) {
    if (s <= 0) throw ConfigError("corpus: family sizes must be positive");
    fam_sum += s;
  }
  if (fam_sum != static_cast<int>(cfg.instruments.size()))
    throw ConfigError("corpus: family sizes sum to " + std::to_string(fam_sum) + " but " +
                      std::to_string(cfg.instruments.size()) + " instruments are configured");
  int fi = 0, left = cfg.family_sizes.empty() ? 0 : cfg.family_sizes[0];
  for (const auto& inst : cfg.instruments) {
    while (left == 0 && fi + 1 < static_cast<int>(cfg.family_sizes.size()))
      left = cfg.family_sizes[static_cast<std::size_t>(++fi)];
    if (inst.family_id != fi)
      throw ConfigError("corpus: instrument '" + inst.name + "' does not match the family partition");
    --left;
  }
  if (cfg.pitches.empty()) throw ConfigError("corpus: empty pitch set");
  const int per = cfg.train_per_instrument + cfg.val_per_instrument + cfg.test_per_instrument;
  if (per != static_cast<int>(cfg.pitches.size()))
    throw ConfigError("corpus: split sizes must sum to the pitch count");
  if (cfg.train_per_instrument < 1 || cfg.val_per_instrument < 1 || cfg.test_per_instrument < 1)
    throw ConfigError("corpus: every split needs at least one example per instrument");
  if (cfg.n_frames < 1 || cfg.n_mel < 1) throw ConfigError("corpus: invalid feature shape");
}

inline Dataset build_corpus(const CorpusConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  const std::size_t I = cfg.instruments.size(), P = cfg.pitches.size();

  Dataset ds;
  ds.n_mel = static_cast<std::uint16_t>(cfg.n_mel);
  ds.n_frames = static_cast<std::uint16_t>(cfg.n_frames);
  for (double hz : cfg.pitches) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2fHz", hz);
    ds.pitch_names.emplace_back(buf);
  }
  for (const auto& inst : cfg.instruments) ds.timbre_names.push_back(inst.name);

  // render: per-example random stream derived from (seed, example index)
  std::vector<std::vector<double>> raw(I * P);
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t j = 0; j < P; ++j) {
      const std::size_t e = i * P + j;
      Rng rng(derive_seed(seed, e, 0));
      const auto wave = synth::synth_tone(cfg.instruments[i], cfg.pitches[j], cfg.duration_s(),
                                          cfg.sample_rate, rng);
      mel::MelMatrix m = mel::stft_mel(wave, cfg.sample_rate, cfg.window_ms, cfg.hop_ms,
                                       cfg.n_mel, cfg.fmin_hz, cfg.fmax_hz);
      if (m.n_frames != cfg.n_frames)
        throw std::logic_error("build_corpus: rendered frame count mismatch");
      raw[e] = std::move(m.v);
    }

  // stratified split per instrument over its pitches
  std::vector<Split> split_of(I * P);
  for (std::size_t i = 0; i < I; ++i) {
    std::vector<std::size_t> order(P);
    for (std::size_t j = 0; j < P; ++j) order[j] = j;
    Rng rng(derive_seed(seed, i, 1));
    rng.shuffle(order);
    for (std::size_t r = 0; r < P; ++r) {
      Split s = Split::test;
      if (r < static_cast<std::size_t>(cfg.train_per_instrument))
        s = Split::train;
      else if (r < static_cast<std::size_t>(cfg.train_per_instrument + cfg.val_per_instrument))
        s = Split::val;
      split_of[i * P + order[r]] = s;
    }
  }

  // training-split standardization
  double sum = 0.0, sumsq = 0.0;
  std::size_t count = 0;
  for (std::size_t e = 0; e < raw.size(); ++e)
    if (split_of[e] == Split::train)
      for (double x : raw[e]) {
        sum += x;
        sumsq += x * x;
        ++count;
      }
  ds.mean = sum / static_cast<double>(count);
  const double var = sumsq / static_cast<double>(count) - ds.mean * ds.mean;
  ds.stddev = var > 1e-24 ? std::sqrt(var) : 1.0;

  ds.examples.resize(I * P);
  for (std::size_t i = 0; i < I; ++i)
    for (std::size_t j = 0; j < P; ++j) {
      const std::size_t e = i * P + j;
      MelExample& ex = ds.examples[e];
      ex.pitch = static_cast<std::uint16_t>(j);
      ex.timbre = static_cast<std::uint16_t>(i);
      ex.split = split_of[e];
      ex.mel.resize(raw[e].size());
      for (std::size_t k = 0; k < raw[e].size(); ++k)
        ex.mel[k] = static_cast<float>((raw[e][k] - ds.mean) / ds.stddev);
    }
  return ds;
}

inline std::string serialize_dataset(const Dataset& ds) {
  std::string out;
  out += "MEL1";
  io::put_u32(out, 1u);
  io::put_u32(out, static_cast<std::uint32_t>(ds.examples.size()));
  io::put_u16(out, ds.n_mel);
  io::put_u16(out, ds.n_frames);
  io::put_u16(out, static_cast<std::uint16_t>(ds.pitch_names.size()));
  io::put_u16(out, static_cast<std::uint16_t>(ds.timbre_names.size()));
  io::put_f64(out, ds.mean);
  io::put_f64(out, ds.stddev);
  for (const auto& tab : {&ds.pitch_names, &ds.timbre_names})
    for (const auto& name : *tab) {
      io::put_u16(out, static_cast<std::uint16_t>(name.size()));
      out += name;
    }
  const std::size_t dim = ds.feature_dim();
  for (const auto& ex : ds.examples) {
    if (ex.mel.size() != dim) throw std::logic_error("serialize_dataset: feature size mismatch");
    io::put_u16(out, ex.pitch);
    io::put_u16(out, ex.timbre);
    io::put_u8(out, static_cast<std::uint8_t>(ex.split));
    for (float f : ex.mel) io::put_f32(out, f);
  }
  return out;
}

inline Dataset deserialize_dataset(std::string bytes, const std::string& origin) {
  io::ByteReader r(std::move(bytes), origin);
  if (r.bytes(4, "magic") != "MEL1") throw FormatError(origin + ": bad magic", 0);
  const std::uint32_t version = r.u32("version");
  if (version != 1) throw FormatError(origin + ": unsupported version " + std::to_string(version), 4);
  const std::uint32_t count = r.u32("example count");
  Dataset ds;
  ds.n_mel = r.u16("n_mel");
  ds.n_frames = r.u16("n_frames");
  const std::uint16_t n_pitch = r.u16("pitch label count");
  const std::uint16_t n_timbre = r.u16("timbre label count");
  if (ds.n_mel == 0 || ds.n_frames == 0 || n_pitch == 0 || n_timbre == 0)
    throw FormatError(origin + ": empty dimension in header", r.offset());
  ds.mean = r.f64("compression mean");
  ds.stddev = r.f64("compression std");
  if (!std::isfinite(ds.mean) || !std::isfinite(ds.stddev) || ds.stddev <= 0.0)
    throw FormatError(origin + ": invalid compression statistics", r.offset());
  for (std::uint16_t i = 0; i < n_pitch; ++i)
    ds.pitch_names.push_back(r.bytes(r.u16("pitch name length"), "pitch name"));
  for (std::uint16_t i = 0; i < n_timbre; ++i)
    ds.timbre_names.push_back(r.bytes(r.u16("timbre name length"), "timbre name"));
  const std::size_t dim = ds.feature_dim();
  ds.examples.resize(count);
  for (std::uint32_t e = 0; e < count; ++e) {
    MelExample& ex = ds.examples[e];
    ex.pitch = r.u16("pitch label");
    if (ex.pitch >= n_pitch) throw FormatError(origin + ": pitch label out of range", r.offset() - 2);
    ex.timbre = r.u16("timbre label");
    if (ex.timbre >= n_timbre)
      throw FormatError(origin + ": timbre label out of range", r.offset() - 2);
    const std::uint8_t tag = r.u8("split tag");
    if (tag > 2) throw FormatError(origin + ": invalid split tag", r.offset() - 1);
    ex.split = static_cast<Split>(tag);
    ex.mel.resize(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      ex.mel[k] = r.f32("mel value");
      if (!std::isfinite(ex.mel[k]))
        throw FormatError(origin + ": non-finite mel value", r.offset() - 4);
    }
  }
  r.expect_end();
  return ds;
}

inline void save_dataset(const Dataset& ds, const std::string& path) {
  io::write_file(path, serialize_dataset(ds));
}

inline Dataset load_dataset(const std::string& path) {
  return deserialize_dataset(io::read_file(path), path);
}

}  // namespace hytimbre::data
