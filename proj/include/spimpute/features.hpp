// Copyright 2026 The spimpute Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spimpute/detail/fft.hpp"
#include "spimpute/error.hpp"
#include "spimpute/spectrogram.hpp"

namespace spimpute {

struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 8000;

  std::size_t size() const { return samples.size(); }
};

/// Mel filterbank frontend settings. Defaults follow the common 8 kHz digit
/// recognition frontend: 25 ms Hamming frames every 10 ms, 23 bands, 256-point
/// FFT. No pre-emphasis, no DC removal, no dither.
struct FrontendConfig {
  double frame_length_ms = 25.0;
  double frame_shift_ms = 10.0;
  int band_count = 23;
  int fft_size = 256;  // bumped to the next power of two if shorter than a frame
  double energy_floor = 1e-10;
  double low_freq = 64.0;
  double high_freq = 0.0;  // <= 0 means Nyquist

  void validate() const {
    require(frame_length_ms > 0 && frame_shift_ms > 0 && frame_shift_ms <= frame_length_ms,
            ErrorCode::kInvalidArgument, "frame_shift must be in (0, frame_length]");
    require(band_count >= 1, ErrorCode::kInvalidArgument, "band_count must be >= 1");
    require(fft_size >= 2, ErrorCode::kInvalidArgument, "fft_size must be >= 2");
    require(energy_floor > 0, ErrorCode::kInvalidArgument, "energy_floor must be > 0");
  }

  std::size_t frame_samples(int sample_rate) const {
    return static_cast<std::size_t>(std::lround(frame_length_ms * sample_rate / 1000.0));
  }
  std::size_t shift_samples(int sample_rate) const {
    return static_cast<std::size_t>(std::lround(frame_shift_ms * sample_rate / 1000.0));
  }
  std::size_t effective_fft_size(int sample_rate) const {
    return detail::next_power_of_two(
        std::max<std::size_t>(static_cast<std::size_t>(fft_size), frame_samples(sample_rate)));
  }
};

inline double hz_to_mel(double hz) { return 1127.0 * std::log1p(hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * std::expm1(mel / 1127.0); }

/// Triangular filters equally spaced on the mel scale, one row per band, one
/// column per FFT bin 0..n/2. Weights are triangular in mel.
struct MelFilterbank {
  Eigen::MatrixXd weights;
  std::vector<double> center_hz;
};

inline MelFilterbank make_mel_filterbank(const FrontendConfig& cfg, int sample_rate) {
  cfg.validate();
  const std::size_t n = cfg.effective_fft_size(sample_rate);
  const double nyquist = 0.5 * sample_rate;
  const double hi = cfg.high_freq > 0 ? std::min(cfg.high_freq, nyquist) : nyquist;
  require(cfg.low_freq >= 0 && cfg.low_freq < hi, ErrorCode::kInvalidArgument,
          "low_freq must be below high_freq");
  const double mel_lo = hz_to_mel(cfg.low_freq);
  const double mel_hi = hz_to_mel(hi);
  const int k_bands = cfg.band_count;
  const double step = (mel_hi - mel_lo) / (k_bands + 1);

  MelFilterbank fb;
  fb.weights = Eigen::MatrixXd::Zero(k_bands, static_cast<Eigen::Index>(n / 2 + 1));
  fb.center_hz.resize(static_cast<std::size_t>(k_bands));
  for (int k = 0; k < k_bands; ++k) {
    const double left = mel_lo + k * step;
    const double center = left + step;
    const double right = center + step;
    fb.center_hz[static_cast<std::size_t>(k)] = mel_to_hz(center);
    for (std::size_t j = 0; j <= n / 2; ++j) {
      const double mel = hz_to_mel(static_cast<double>(j) * sample_rate / static_cast<double>(n));
      double w = 0.0;
      if (mel > left && mel <= center) {
        w = (mel - left) / step;
      } else if (mel > center && mel < right) {
        w = (right - mel) / step;
      }
      fb.weights(k, static_cast<Eigen::Index>(j)) = w;
    }
  }
  return fb;
}

inline std::size_t frame_count(std::size_t num_samples, const FrontendConfig& cfg,
                               int sample_rate) {
  const std::size_t frame = cfg.frame_samples(sample_rate);
  const std::size_t shift = cfg.shift_samples(sample_rate);
  if (num_samples < frame || frame == 0 || shift == 0) return 0;
  return (num_samples - frame) / shift + 1;
}

/// Natural-log mel band energies, floored at log(energy_floor).
inline Spectrogram log_mel(const AudioClip& clip, const FrontendConfig& cfg = {}) {
  cfg.validate();
  require(clip.sample_rate > 0, ErrorCode::kInvalidArgument, "sample_rate must be positive");
  require(std::all_of(clip.samples.begin(), clip.samples.end(),
                      [](double s) { return std::isfinite(s); }),
          ErrorCode::kInvalidArgument, "audio contains non-finite samples");
  const std::size_t frames = frame_count(clip.size(), cfg, clip.sample_rate);
  require(frames >= 1, ErrorCode::kInsufficientAudio, "insufficient audio");

  const std::size_t flen = cfg.frame_samples(clip.sample_rate);
  const std::size_t shift = cfg.shift_samples(clip.sample_rate);
  const std::size_t n = cfg.effective_fft_size(clip.sample_rate);
  const MelFilterbank fb = make_mel_filterbank(cfg, clip.sample_rate);

  std::vector<double> window(flen);
  for (std::size_t i = 0; i < flen; ++i) {
    window[i] = flen == 1 ? 1.0
                          : 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                                   static_cast<double>(flen - 1));
  }

  const double log_floor = std::log(cfg.energy_floor);
  Spectrogram out(cfg.band_count, static_cast<Eigen::Index>(frames));
  std::vector<double> frame(flen);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t i = 0; i < flen; ++i) frame[i] = clip.samples[t * shift + i] * window[i];
    const std::vector<double> power = detail::power_spectrum(frame, n);
    const Eigen::Map<const Eigen::VectorXd> p(power.data(), static_cast<Eigen::Index>(power.size()));
    const Eigen::VectorXd energy = fb.weights * p;
    for (Eigen::Index k = 0; k < energy.size(); ++k) {
      out(k, static_cast<Eigen::Index>(t)) =
          energy[k] > cfg.energy_floor ? std::log(energy[k]) : log_floor;
    }
  }
  return out;
}

inline double mean_power(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

struct MixResult {
  AudioClip mixture;
  double scale = 0.0;
};

/// speech + scale*noise with the noise truncated to the speech length and
/// scale chosen so the mixture has the requested SNR.
inline MixResult mix_at_snr(const AudioClip& speech, const AudioClip& noise, double snr_db) {
  require(speech.sample_rate == noise.sample_rate, ErrorCode::kInvalidArgument,
          "sample rates differ");
  require(!speech.samples.empty(), ErrorCode::kInvalidArgument, "empty speech clip");
  require(noise.size() >= speech.size(), ErrorCode::kInvalidArgument,
          "noise shorter than speech");
  const std::span<const double> noise_region(noise.samples.data(), speech.size());
  const double ps = mean_power(speech.samples);
  const double pn = mean_power(noise_region);
  require(ps > 0.0 && pn > 0.0, ErrorCode::kDegeneratePower, "degenerate power");

  MixResult r;
  r.scale = std::sqrt(ps / (pn * std::pow(10.0, snr_db / 10.0)));
  r.mixture.sample_rate = speech.sample_rate;
  r.mixture.samples.resize(speech.size());
  for (std::size_t i = 0; i < speech.size(); ++i) {
    r.mixture.samples[i] = speech.samples[i] + r.scale * noise_region[i];
  }
  return r;
}

/// Element-wise log(exp(S) + exp(N)), i.e. power addition of log spectra.
inline Spectrogram additive_spectrogram_mix(const Spectrogram& s, const Spectrogram& n) {
  require_same_shape(s, n, "additive_spectrogram_mix");
  Spectrogram y(s.bands(), s.frames());
  const Eigen::ArrayXXd hi = s.values.array().max(n.values.array());
  const Eigen::ArrayXXd lo = s.values.array().min(n.values.array());
  y.values = (hi + (lo - hi).exp().log1p()).matrix();
  return y;
}

/// Log-domain gain g such that sum(exp S) / sum(exp(N + g)) = 10^(snr_db/10).
inline double log_gain_for_snr(const Spectrogram& s, const Spectrogram& n, double snr_db) {
  require_same_shape(s, n, "log_gain_for_snr");
  const double ps = s.values.array().exp().sum();
  const double pn = n.values.array().exp().sum();
  require(ps > 0.0 && pn > 0.0 && std::isfinite(ps) && std::isfinite(pn),
          ErrorCode::kDegeneratePower, "degenerate power");
  return std::log(ps / pn) - snr_db * std::log(10.0) / 10.0;
}

/// Noise spectrogram rescaled so that S over the result has the given SNR.
inline Spectrogram scale_noise_to_snr(const Spectrogram& s, const Spectrogram& n,
                                      double snr_db) {
  Spectrogram out = n;
  out.values.array() += log_gain_for_snr(s, n, snr_db);
  return out;
}

}  // namespace spimpute
