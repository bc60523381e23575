#pragma once

// Magnitude STFT (Hann window, radix-2 FFT with zero padding) and a
// triangular mel filterbank with centers uniform on mel(f) = 2595 log10(1 +
// f/700).  Triangles are evaluated in the mel domain, so adjacent filters sum
// to one exactly between the first and last centers.  stft_mel applies the
// log compression ln(mel + 1e-5); corpus-level standardization happens in the
// dataset builder.

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "hytimbre/errors.hpp"

namespace hytimbre::mel {

constexpr double kCompressionEps = 1e-5;
inline double compression_floor() { return std::log(kCompressionEps); }

inline double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
inline double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

// In-place iterative radix-2 Cooley-Tukey; size must be a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft_radix2: size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * 3.14159265358979323846 / static_cast<double>(len);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

struct MelBank {
  std::size_t n_mel = 0;
  std::vector<double> centers_hz;  // n_mel centers
  double fmin = 0.0, fmax = 0.0;
  double mel_lo = 0.0, mel_step = 0.0;

  // response of filter m at frequency f (continuous; triangle in mel domain)
  double weight(std::size_t m, double f_hz) const {
    const double c = mel_lo + mel_step * static_cast<double>(m + 1);
    const double d = std::abs(hz_to_mel(f_hz) - c) / mel_step;
    return d < 1.0 ? 1.0 - d : 0.0;
  }
};

inline MelBank make_mel_bank(std::size_t n_mel, double fmin_hz, double fmax_hz,
                             double sample_rate) {
  if (n_mel == 0) throw ConfigError("mel bank: need at least one filter");
  if (!(fmin_hz >= 0.0) || !(fmin_hz < fmax_hz))
    throw ConfigError("mel bank: require 0 <= fmin < fmax");
  if (fmax_hz > sample_rate / 2.0 + 1e-9)
    throw ConfigError("mel bank: fmax exceeds the Nyquist frequency");
  MelBank b;
  b.n_mel = n_mel;
  b.fmin = fmin_hz;
  b.fmax = fmax_hz;
  b.mel_lo = hz_to_mel(fmin_hz);
  b.mel_step = (hz_to_mel(fmax_hz) - b.mel_lo) / static_cast<double>(n_mel + 1);
  b.centers_hz.resize(n_mel);
  for (std::size_t m = 0; m < n_mel; ++m)
    b.centers_hz[m] = mel_to_hz(b.mel_lo + b.mel_step * static_cast<double>(m + 1));
  return b;
}

struct MelMatrix {
  std::size_t n_mel = 0, n_frames = 0;
  std::vector<double> v;  // row-major: [mel bin][frame]
  double& at(std::size_t m, std::size_t t) { return v[m * n_frames + t]; }
  double at(std::size_t m, std::size_t t) const { return v[m * n_frames + t]; }
};

// Magnitude spectrum of one Hann-windowed frame, zero padded to a power of two.
inline std::vector<double> frame_magnitude(const std::vector<double>& x, std::size_t start,
                                           std::size_t win, std::size_t nfft) {
  std::vector<std::complex<double>> buf(nfft, 0.0);
  for (std::size_t i = 0; i < win; ++i) {
    const double w =
        0.5 * (1.0 - std::cos(2.0 * 3.14159265358979323846 * static_cast<double>(i) /
                              static_cast<double>(win)));
    const double s = start + i < x.size() ? x[start + i] : 0.0;
    buf[i] = s * w;
  }
  fft_radix2(buf);
  std::vector<double> mag(nfft / 2 + 1);
  for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(buf[k]);
  return mag;
}

inline MelMatrix stft_mel(const std::vector<double>& waveform, double sample_rate,
                          double window_ms, double hop_ms, std::size_t n_mel, double fmin_hz,
                          double fmax_hz) {
  if (!(sample_rate > 0.0)) throw ConfigError("stft_mel: sample rate must be positive");
  if (!(window_ms > 0.0) || !(hop_ms > 0.0))
    throw ConfigError("stft_mel: window and hop must be positive");
  const std::size_t win = static_cast<std::size_t>(std::llround(window_ms * sample_rate / 1000.0));
  const std::size_t hop = static_cast<std::size_t>(std::llround(hop_ms * sample_rate / 1000.0));
  if (win == 0 || hop == 0) throw ConfigError("stft_mel: window and hop too short");
  const MelBank bank = make_mel_bank(n_mel, fmin_hz, fmax_hz, sample_rate);

  const std::size_t n = std::max(waveform.size(), win);
  const std::size_t n_frames = 1 + (n - win) / hop;
  const std::size_t nfft = next_pow2(win);

  // filter weights sampled at the FFT bin frequencies
  std::vector<double> weights(n_mel * (nfft / 2 + 1), 0.0);
  for (std::size_t m = 0; m < n_mel; ++m)
    for (std::size_t k = 0; k <= nfft / 2; ++k) {
      const double f = sample_rate * static_cast<double>(k) / static_cast<double>(nfft);
      weights[m * (nfft / 2 + 1) + k] = bank.weight(m, f);
    }

  MelMatrix out;
  out.n_mel = n_mel;
  out.n_frames = n_frames;
  out.v.assign(n_mel * n_frames, 0.0);
  for (std::size_t t = 0; t < n_frames; ++t) {
    const std::vector<double> mag = frame_magnitude(waveform, t * hop, win, nfft);
    for (std::size_t m = 0; m < n_mel; ++m) {
      double acc = 0.0;
      const double* wrow = weights.data() + m * (nfft / 2 + 1);
      for (std::size_t k = 0; k < mag.size(); ++k) acc += wrow[k] * mag[k];
      out.at(m, t) = std::log(acc + kCompressionEps);
    }
  }
  return out;
}

}  // namespace hytimbre::mel
