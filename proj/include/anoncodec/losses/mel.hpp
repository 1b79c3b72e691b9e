// Copyright 2026 The AnonCodec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Log10 mel spectrograms and the multi-scale mel reconstruction loss.
//
// Scale i uses a 2^i Hann window (periodic), hop 2^i / 4, FFT size 2^i and
// 5 * i HTK mel bands spanning 0 Hz to Nyquist. Frames are centred with
// reflect padding of half a window on each side. Filters are unnormalized
// triangles; magnitudes are floored at 1e-5 before log10.

#ifndef ANONCODEC_LOSSES_MEL_HPP_
#define ANONCODEC_LOSSES_MEL_HPP_

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "anoncodec/core/error.hpp"
#include "anoncodec/core/matrix.hpp"

namespace anoncodec::losses {

struct MelScaleConfig {
  std::vector<int> scale_exponents{5, 6, 7, 8, 9, 10, 11};
  double sample_rate_hz = 16000.0;
  double log_floor = 1e-5;

  static std::size_t window(int i) { return std::size_t{1} << i; }
  static std::size_t hop(int i) { return window(i) / 4; }
  static std::size_t mel_bins(int i) { return static_cast<std::size_t>(5 * i); }

  void validate() const {
    if (scale_exponents.empty()) throw ConfigError("mel: no scales configured");
    for (int i : scale_exponents)
      if (i < 2 || i > 20) throw ConfigError("mel: scale exponent " + std::to_string(i) + " out of range");
    if (!(sample_rate_hz > 0.0)) throw ConfigError("mel: sample rate must be positive");
    if (!(log_floor > 0.0)) throw ConfigError("mel: log floor must be positive");
  }
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

/// n_mels x (n_fft/2 + 1) triangular filterbank, band edges evenly spaced
/// in mel between 0 and sample_rate / 2.
inline Matrix mel_filterbank(std::size_t n_fft, std::size_t n_mels, double sample_rate_hz) {
  if (n_fft < 2 || n_mels < 1) throw RangeError("mel_filterbank: bad sizes");
  const std::size_t bins = n_fft / 2 + 1;
  const double top = hz_to_mel(sample_rate_hz / 2.0);
  std::vector<double> edges(n_mels + 2);
  for (std::size_t k = 0; k < edges.size(); ++k)
    edges[k] = mel_to_hz(top * static_cast<double>(k) / static_cast<double>(n_mels + 1));
  Matrix fb(n_mels, bins);
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (std::size_t b = 0; b < bins; ++b) {
      const double f = static_cast<double>(b) * sample_rate_hz / static_cast<double>(n_fft);
      const double up = (f - lo) / (mid - lo);
      const double down = (hi - f) / (hi - mid);
      fb(m, b) = std::max(0.0, std::min(up, down));
    }
  }
  return fb;
}

namespace detail {

/// FFTW plans are created under a lock and executed with the new-array
/// interface, which is thread safe.
inline fftw_plan r2c_plan(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, fftw_plan> plans;
  std::lock_guard lock(mu);
  auto it = plans.find(n);
  if (it != plans.end()) return it->second;
  std::vector<double> in(n);
  std::vector<fftw_complex> out(n / 2 + 1);
  fftw_plan p = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), out.data(),
                                     FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (p == nullptr) throw ComputationError("fftw: cannot plan size " + std::to_string(n));
  plans.emplace(n, p);
  return p;
}

inline std::vector<double> reflect_pad(std::span<const double> x, std::size_t pad) {
  const std::size_t n = x.size();
  std::vector<double> out(n + 2 * pad);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const long long j = static_cast<long long>(k) - static_cast<long long>(pad);
    long long src = j;
    if (j < 0) src = -j;
    if (j >= static_cast<long long>(n)) src = 2 * (static_cast<long long>(n) - 1) - j;
    out[k] = x[static_cast<std::size_t>(src)];
  }
  return out;
}

}  // namespace detail

/// Magnitude STFT, frames x (n_fft/2 + 1).
inline Matrix stft_magnitude(std::span<const double> x, std::size_t n_fft, std::size_t hop) {
  if (x.size() < n_fft)
    throw RangeError("stft: signal of " + std::to_string(x.size()) +
                     " samples is shorter than one window of " + std::to_string(n_fft));
  const std::size_t pad = n_fft / 2;
  const std::vector<double> padded = detail::reflect_pad(x, pad);
  const std::size_t frames = 1 + (padded.size() - n_fft) / hop;
  const std::size_t bins = n_fft / 2 + 1;
  std::vector<double> window(n_fft);
  for (std::size_t k = 0; k < n_fft; ++k)
    window[k] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) /
                                     static_cast<double>(n_fft));
  const fftw_plan plan = detail::r2c_plan(n_fft);
  std::vector<double> buf(n_fft);
  std::vector<fftw_complex> spec(bins);
  Matrix out(frames, bins);
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t k = 0; k < n_fft; ++k) buf[k] = padded[f * hop + k] * window[k];
    fftw_execute_dft_r2c(plan, buf.data(), spec.data());
    for (std::size_t b = 0; b < bins; ++b) out(f, b) = std::hypot(spec[b][0], spec[b][1]);
  }
  return out;
}

/// Log10 mel spectrogram at scale exponent i, frames x 5i.
inline Matrix mel_spectrogram(std::span<const double> x, int i, const MelScaleConfig& cfg) {
  cfg.validate();
  const std::size_t n_fft = MelScaleConfig::window(i);
  const Matrix mag = stft_magnitude(x, n_fft, MelScaleConfig::hop(i));
  const Matrix fb = mel_filterbank(n_fft, MelScaleConfig::mel_bins(i), cfg.sample_rate_hz);
  Matrix out(mag.rows(), fb.rows());
  for (std::size_t f = 0; f < mag.rows(); ++f)
    for (std::size_t m = 0; m < fb.rows(); ++m) {
      const double e = dot(mag.row(f), fb.row(m));
      out(f, m) = std::log10(std::max(e, cfg.log_floor));
    }
  return out;
}

/// Sum over scales of the mean absolute difference between log-mel
/// spectrograms. Scales are accumulated in ascending order.
inline double multiscale_mel_loss(std::span<const double> x, std::span<const double> x_hat,
                                  const MelScaleConfig& cfg = {}) {
  if (x.size() != x_hat.size())
    throw RangeError("multiscale_mel_loss: lengths differ (" + std::to_string(x.size()) +
                     " vs " + std::to_string(x_hat.size()) + ")");
  std::vector<int> scales = cfg.scale_exponents;
  std::sort(scales.begin(), scales.end());
  double total = 0.0;
  for (int i : scales) {
    const Matrix a = mel_spectrogram(x, i, cfg);
    const Matrix b = mel_spectrogram(x_hat, i, cfg);
    double s = 0.0;
    for (std::size_t k = 0; k < a.data().size(); ++k) s += std::abs(a.data()[k] - b.data()[k]);
    total += s / static_cast<double>(a.data().size());
  }
  return total;
}

}  // namespace anoncodec::losses

#endif  // ANONCODEC_LOSSES_MEL_HPP_
