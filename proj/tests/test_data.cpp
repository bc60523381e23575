#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hytimbre/dataset.hpp"
#include "hytimbre/mel.hpp"
#include "hytimbre/rng.hpp"
#include "hytimbre/synth.hpp"

using namespace hytimbre;

#ifndef HYTIMBRE_TEST_DATA_DIR
#define HYTIMBRE_TEST_DATA_DIR "tests/data"
#endif

namespace {

// spectral centroid (Hz) of a waveform from its zero-padded magnitude FFT
double spectral_centroid(const std::vector<double>& x, double sample_rate) {
  const std::size_t nfft = mel::next_pow2(x.size());
  std::vector<std::complex<double>> buf(nfft, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) buf[i] = x[i];
  mel::fft_radix2(buf);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k <= nfft / 2; ++k) {
    const double f = sample_rate * static_cast<double>(k) / static_cast<double>(nfft);
    const double m = std::abs(buf[k]);
    num += f * m;
    den += m;
  }
  return num / den;
}

std::size_t dominant_fft_bin(const std::vector<double>& x) {
  const std::size_t nfft = mel::next_pow2(x.size());
  std::vector<std::complex<double>> buf(nfft, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) buf[i] = x[i];
  mel::fft_radix2(buf);
  std::size_t best = 0;
  double mx = -1.0;
  for (std::size_t k = 0; k <= nfft / 2; ++k)
    if (std::abs(buf[k]) > mx) {
      mx = std::abs(buf[k]);
      best = k;
    }
  return best;
}

data::CorpusConfig tiny_config() {
  data::CorpusConfig cfg;
  auto all = synth::default_instruments();
  cfg.instruments = {all[0], all[6]};  // one woodwind, one brass
  cfg.family_sizes = {1, 1};
  cfg.pitches = synth::pitch_set(3, 220.0, 2.0);
  cfg.n_mel = 8;
  cfg.n_frames = 4;
  cfg.train_per_instrument = 1;
  cfg.val_per_instrument = 1;
  cfg.test_per_instrument = 1;
  return cfg;
}

}  // namespace

TEST_CASE("single partial without vibrato is a pure sine", "[synth]") {
  synth::InstrumentSpec spec;
  spec.partial_gains = {1.0};
  Rng rng(3);
  const double sr = 16000.0;
  const auto wave = synth::synth_tone(spec, 440.0, 0.256, sr, rng);
  REQUIRE(wave.size() == 4096);

  double peak = 0.0;
  for (double x : wave) peak = std::max(peak, std::abs(x));
  CHECK(peak == Catch::Approx(0.9).margin(1e-12));

  const std::size_t bin = dominant_fft_bin(wave);
  const double f = sr * static_cast<double>(bin) / 4096.0;
  CHECK(f == Catch::Approx(440.0).margin(sr / 4096.0 + 1e-9));
}

TEST_CASE("synth input guards", "[synth]") {
  synth::InstrumentSpec spec;
  spec.partial_gains = {1.0};
  Rng rng(3);
  CHECK_THROWS_AS(synth::synth_tone(spec, 440.0, 0.0, 16000.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(synth::synth_tone(spec, 9000.0, 0.1, 16000.0, rng), std::invalid_argument);
  synth::InstrumentSpec bad = spec;
  bad.partial_gains = {1.0, -0.5};
  CHECK_THROWS_AS(synth::synth_tone(bad, 440.0, 0.1, 16000.0, rng), std::invalid_argument);
}

TEST_CASE("partials above the Nyquist frequency are dropped", "[synth]") {
  synth::InstrumentSpec spec;
  spec.partial_gains = {1.0, 1.0};  // second partial at 10 kHz > 8 kHz Nyquist
  Rng rng(4);
  const double sr = 16000.0;
  const auto wave = synth::synth_tone(spec, 5000.0, 0.256, sr, rng);
  const std::size_t bin = dominant_fft_bin(wave);
  const double f = sr * static_cast<double>(bin) / 4096.0;
  CHECK(f == Catch::Approx(5000.0).margin(sr / 4096.0 + 1e-9));
  // energy outside the fundamental's neighborhood is negligible
  std::vector<std::complex<double>> buf(4096, 0.0);
  for (std::size_t i = 0; i < wave.size(); ++i) buf[i] = wave[i];
  mel::fft_radix2(buf);
  double other = 0.0;
  for (std::size_t k = 0; k <= 2048; ++k) {
    const double fk = sr * static_cast<double>(k) / 4096.0;
    if (std::abs(fk - 5000.0) > 200.0) other = std::max(other, std::abs(buf[k]));
  }
  CHECK(other < std::abs(buf[dominant_fft_bin(wave)]) * 0.05);
}

TEST_CASE("family prototypes order by spectral centroid", "[synth]") {
  const auto instruments = synth::default_instruments();
  REQUIRE(instruments.size() == 12);
  std::map<int, std::vector<double>> centroids;
  for (const auto& inst : instruments) {
    Rng rng(11);
    const auto wave = synth::synth_tone(inst, 220.0, 0.256, 16000.0, rng);
    centroids[inst.family_id].push_back(spectral_centroid(wave, 16000.0));
  }
  auto avg = [&](int fam) {
    double s = 0.0;
    for (double c : centroids[fam]) s += c;
    return s / static_cast<double>(centroids[fam].size());
  };
  const double woodwind = avg(0), brass = avg(1), strings = avg(2);
  INFO("woodwind=" << woodwind << " brass=" << brass << " strings=" << strings);
  CHECK(brass > strings);
  CHECK(strings > woodwind);
}

TEST_CASE("silence maps to the compression floor", "[mel]") {
  const std::vector<double> silence(4352, 0.0);
  const auto m = mel::stft_mel(silence, 16000.0, 32.0, 16.0, 64, 50.0, 8000.0);
  CHECK(m.n_mel == 64);
  CHECK(m.n_frames == 16);
  for (double v : m.v) CHECK(v == Catch::Approx(mel::compression_floor()).margin(1e-12));
}

TEST_CASE("frame count follows the window/hop arithmetic", "[mel]") {
  const std::vector<double> x(16000, 0.0);  // one second at 16 kHz
  const auto m = mel::stft_mel(x, 16000.0, 32.0, 16.0, 8, 50.0, 8000.0);
  // 1 + floor((16000 - 512)/256) = 1 + 60
  CHECK(m.n_frames == 61);
}

TEST_CASE("a 440 Hz sine lands in the filterbank's 440 Hz band", "[mel]") {
  const double sr = 16000.0;
  synth::InstrumentSpec spec;
  spec.partial_gains = {1.0};
  Rng rng(5);
  const auto wave = synth::synth_tone(spec, 440.0, 0.272, sr, rng);
  const std::size_t n_mel = 64;
  const auto bank = mel::make_mel_bank(n_mel, 50.0, 8000.0, sr);

  std::size_t want = 0;
  double best = -1.0;
  for (std::size_t m = 0; m < n_mel; ++m)
    if (bank.weight(m, 440.0) > best) {
      best = bank.weight(m, 440.0);
      want = m;
    }

  const auto mels = mel::stft_mel(wave, sr, 32.0, 16.0, n_mel, 50.0, 8000.0);
  std::size_t got = 0;
  double mx = -1e300;
  for (std::size_t m = 0; m < n_mel; ++m) {
    double row = 0.0;
    for (std::size_t t = 0; t < mels.n_frames; ++t) row += mels.at(m, t);
    if (row > mx) {
      mx = row;
      got = m;
    }
  }
  CHECK(got == want);
}

TEST_CASE("triangle filters sum to one between the outer centers", "[mel]") {
  const auto bank = mel::make_mel_bank(64, 50.0, 8000.0, 16000.0);
  REQUIRE(bank.centers_hz.size() == 64);
  CHECK(std::is_sorted(bank.centers_hz.begin(), bank.centers_hz.end()));
  for (std::size_t m = 0; m < 64; ++m)
    CHECK(bank.weight(m, bank.centers_hz[m]) == Catch::Approx(1.0).margin(1e-9));

  const double lo = bank.centers_hz.front(), hi = bank.centers_hz.back();
  for (int i = 0; i <= 500; ++i) {
    const double f = lo + (hi - lo) * static_cast<double>(i) / 500.0;
    double total = 0.0;
    for (std::size_t m = 0; m < 64; ++m) total += bank.weight(m, f);
    CHECK(total >= 0.99);
    CHECK(total <= 1.01);
  }
}

TEST_CASE("invalid band edges are configuration errors", "[mel]") {
  CHECK_THROWS_AS(mel::make_mel_bank(32, 8000.0, 50.0, 16000.0), ConfigError);
  CHECK_THROWS_AS(mel::make_mel_bank(32, 50.0, 9000.0, 16000.0), ConfigError);
  CHECK_THROWS_AS(mel::stft_mel({0.0}, 16000.0, 0.0, 16.0, 8, 50.0, 8000.0), ConfigError);
}

TEST_CASE("default corpus has the documented shape", "[data]") {
  data::CorpusConfig cfg;
  const data::Dataset ds = data::build_corpus(cfg, 1234);

  CHECK(ds.examples.size() == 240);
  CHECK(ds.pitch_names.size() == 20);
  CHECK(ds.timbre_names.size() == 12);
  CHECK(ds.n_mel == 64);
  CHECK(ds.n_frames == 16);

  const auto fams = ds.family_ids();
  std::map<int, int> fam_count;
  for (int f : fams) fam_count[f]++;
  REQUIRE(fam_count.size() == 4);
  CHECK(fam_count[0] == 6);
  CHECK(fam_count[1] == 3);
  CHECK(fam_count[2] == 2);
  CHECK(fam_count[3] == 1);

  // stratified 16/2/2 per instrument; every instrument in every split
  std::map<std::pair<int, int>, int> split_count;
  for (const auto& ex : ds.examples)
    split_count[{static_cast<int>(ex.timbre), static_cast<int>(ex.split)}]++;
  for (int i = 0; i < 12; ++i) {
    CHECK(split_count[{i, 0}] == 16);
    CHECK(split_count[{i, 1}] == 2);
    CHECK(split_count[{i, 2}] == 2);
  }

  // dense labels
  std::vector<bool> seen_p(20, false), seen_t(12, false);
  for (const auto& ex : ds.examples) {
    seen_p[ex.pitch] = true;
    seen_t[ex.timbre] = true;
  }
  CHECK(std::all_of(seen_p.begin(), seen_p.end(), [](bool b) { return b; }));
  CHECK(std::all_of(seen_t.begin(), seen_t.end(), [](bool b) { return b; }));

  // finite values; destandardized values never fall below the compression floor
  for (const auto& ex : ds.examples)
    for (float f : ex.mel) {
      REQUIRE(std::isfinite(f));
      CHECK(static_cast<double>(f) * ds.stddev + ds.mean >= mel::compression_floor() - 1e-5);
    }
}

TEST_CASE("family partition yields the documented pair-set sizes", "[data]") {
  data::CorpusConfig cfg;
  const data::Dataset ds = data::build_corpus(cfg, 7);
  const auto fams = ds.family_ids();
  int same = 0, diff = 0;
  for (std::size_t a = 0; a < fams.size(); ++a)
    for (std::size_t b = a + 1; b < fams.size(); ++b)
      (fams[a] == fams[b] ? same : diff)++;
  CHECK(same == 19);
  CHECK(diff == 47);
}

TEST_CASE("corpus generation is deterministic in the seed", "[data]") {
  const auto cfg = tiny_config();
  const auto a = data::serialize_dataset(data::build_corpus(cfg, 99));
  const auto b = data::serialize_dataset(data::build_corpus(cfg, 99));
  const auto c = data::serialize_dataset(data::build_corpus(cfg, 100));
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("bad corpus configurations are rejected", "[data]") {
  auto cfg = tiny_config();
  cfg.family_sizes = {2, 1};
  CHECK_THROWS_AS(data::build_corpus(cfg, 1), ConfigError);
  cfg = tiny_config();
  cfg.train_per_instrument = 2;  // 2+1+1 != 3 pitches
  CHECK_THROWS_AS(data::build_corpus(cfg, 1), ConfigError);
  cfg = tiny_config();
  cfg.pitches.clear();
  CHECK_THROWS_AS(data::build_corpus(cfg, 1), ConfigError);
}

TEST_CASE("dataset round trip is exact", "[data]") {
  namespace fs = std::filesystem;
  const auto cfg = tiny_config();
  const data::Dataset ds = data::build_corpus(cfg, 2025);
  const auto path = (fs::temp_directory_path() / "hytimbre_roundtrip.mel").string();
  data::save_dataset(ds, path);
  const data::Dataset back = data::load_dataset(path);
  fs::remove(path);

  CHECK(back.n_mel == ds.n_mel);
  CHECK(back.n_frames == ds.n_frames);
  CHECK(std::memcmp(&back.mean, &ds.mean, 8) == 0);
  CHECK(std::memcmp(&back.stddev, &ds.stddev, 8) == 0);
  CHECK(back.pitch_names == ds.pitch_names);
  CHECK(back.timbre_names == ds.timbre_names);
  REQUIRE(back.examples.size() == ds.examples.size());
  for (std::size_t e = 0; e < ds.examples.size(); ++e) {
    CHECK(back.examples[e].pitch == ds.examples[e].pitch);
    CHECK(back.examples[e].timbre == ds.examples[e].timbre);
    CHECK(back.examples[e].split == ds.examples[e].split);
    REQUIRE(back.examples[e].mel.size() == ds.examples[e].mel.size());
    CHECK(std::memcmp(back.examples[e].mel.data(), ds.examples[e].mel.data(),
                      ds.examples[e].mel.size() * 4) == 0);
  }
  // serializing the loaded dataset reproduces the same bytes
  CHECK(data::serialize_dataset(back) == data::serialize_dataset(ds));
}

TEST_CASE("malformed dataset files raise format errors with offsets", "[data]") {
  const auto cfg = tiny_config();
  const std::string good = data::serialize_dataset(data::build_corpus(cfg, 5));

  SECTION("bad magic") {
    std::string bad = good;
    bad[0] = 'X';
    try {
      data::deserialize_dataset(bad, "mem");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.offset() == 0);
    }
  }
  SECTION("unsupported version") {
    std::string bad = good;
    bad[4] = 9;
    try {
      data::deserialize_dataset(bad, "mem");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.offset() == 4);
    }
  }
  SECTION("truncation") {
    const std::string bad = good.substr(0, good.size() - 10);
    try {
      data::deserialize_dataset(bad, "mem");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.offset() > 0);
      CHECK(e.offset() <= bad.size());
      CHECK(std::string(e.what()).find("truncated") != std::string::npos);
      CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
    }
  }
  SECTION("trailing bytes") {
    const std::string bad = good + "zz";
    try {
      data::deserialize_dataset(bad, "mem");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.offset() == good.size());
    }
  }
  SECTION("invalid split tag") {
    // locate the first example's split byte: header + label tables + 4
    data::Dataset ds = data::build_corpus(cfg, 5);
    std::size_t pos = 4 + 4 + 4 + 2 + 2 + 2 + 2 + 8 + 8;
    for (const auto& n : ds.pitch_names) pos += 2 + n.size();
    for (const auto& n : ds.timbre_names) pos += 2 + n.size();
    pos += 4;
    std::string bad = good;
    bad[pos] = 7;
    try {
      data::deserialize_dataset(bad, "mem");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.offset() == pos);
    }
  }
}

TEST_CASE("golden dataset file parses and resaves identically", "[data]") {
  const std::string path = std::string(HYTIMBRE_TEST_DATA_DIR) + "/golden.mel";
  const data::Dataset ds = data::load_dataset(path);
  CHECK(ds.examples.size() == 6);
  CHECK(ds.n_mel == 8);
  CHECK(ds.n_frames == 4);
  CHECK(ds.mean == 1.8527319582751465);
  CHECK(ds.stddev == 2.9991931029905508);
  CHECK(ds.pitch_names == std::vector<std::string>{"220.00Hz", "440.00Hz", "880.00Hz"});
  CHECK(ds.timbre_names == std::vector<std::string>{"woodwind/flute", "brass/trumpet"});
  CHECK(ds.family_ids() == std::vector<int>{0, 1});

  const std::string original = hytimbre::io::read_file(path);
  CHECK(original.size() == 895);
  CHECK(data::serialize_dataset(ds) == original);
}
