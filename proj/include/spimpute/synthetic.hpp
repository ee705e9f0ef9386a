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
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "spimpute/evaluation.hpp"
#include "spimpute/spectrogram.hpp"

namespace spimpute::synthetic {

/// Uniform double in [0, 1) from the top 53 bits of the generator.
inline double unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * unit(rng);
}
inline Eigen::Index uniform_index(std::mt19937_64& rng, Eigen::Index lo, Eigen::Index hi) {
  return lo + static_cast<Eigen::Index>(
                  detail::uniform_below(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

/// Toy "digit" corpus: each utterance is a random sequence of words drawn
/// from a small vocabulary of fixed log-spectral templates, every word scaled
/// by a random gain.
struct CorpusSpec {
  Eigen::Index bands = 6;
  Eigen::Index vocabulary = 4;
  Eigen::Index word_frames_min = 8;
  Eigen::Index word_frames_max = 16;
  Eigen::Index words_min = 4;
  Eigen::Index words_max = 7;
  double level_lo = 4.0;
  double level_hi = 12.0;
  double gain_lo = 0.85;
  double gain_hi = 1.15;
  std::uint64_t vocabulary_seed = 1;  // corpora sharing this seed share words
  // Low-level silence before and after each utterance and between words.
  // Both edge bounds at 0 and pause_max at 0 disable silence entirely.
  Eigen::Index edge_silence_min = 0;
  Eigen::Index edge_silence_max = 0;
  Eigen::Index pause_max = 0;
  double silence_lo = 0.0;
  double silence_hi = 1.5;

  /// Utterances framed by silence, like isolated recordings of digit strings.
  static CorpusSpec with_silence() {
    CorpusSpec s;
    s.edge_silence_min = 10;
    s.edge_silence_max = 30;
    s.pause_max = 8;
    return s;
  }
};

inline std::vector<Spectrogram> vocabulary(const CorpusSpec& spec, std::mt19937_64& rng) {
  std::vector<Spectrogram> words;
  for (Eigen::Index w = 0; w < spec.vocabulary; ++w) {
    const Eigen::Index len = uniform_index(rng, spec.word_frames_min, spec.word_frames_max);
    Spectrogram word(spec.bands, len);
    for (Eigen::Index t = 0; t < len; ++t) {
      for (Eigen::Index k = 0; k < spec.bands; ++k) {
        word(k, t) = uniform(rng, spec.level_lo, spec.level_hi);
      }
    }
    words.push_back(std::move(word));
  }
  return words;
}

inline std::vector<Utterance> corpus(const CorpusSpec& spec, Eigen::Index utterances,
                                     std::uint64_t seed) {
  std::mt19937_64 word_rng(spec.vocabulary_seed);
  const std::vector<Spectrogram> words = vocabulary(spec, word_rng);
  std::mt19937_64 rng(seed);
  std::vector<Utterance> out;
  for (Eigen::Index u = 0; u < utterances; ++u) {
    const Eigen::Index n_words = uniform_index(rng, spec.words_min, spec.words_max);
    std::vector<Eigen::MatrixXd> parts;
    Eigen::Index frames = 0;
    auto silence = [&](Eigen::Index lo, Eigen::Index hi) {
      if (hi <= 0) return;
      const Eigen::Index n = uniform_index(rng, lo, hi);
      Eigen::MatrixXd quiet(spec.bands, n);
      for (Eigen::Index i = 0; i < quiet.size(); ++i) {
        quiet.data()[i] = uniform(rng, spec.silence_lo, spec.silence_hi);
      }
      parts.push_back(std::move(quiet));
      frames += n;
    };
    silence(spec.edge_silence_min, spec.edge_silence_max);
    for (Eigen::Index i = 0; i < n_words; ++i) {
      const auto& w = words[static_cast<std::size_t>(uniform_index(rng, 0, spec.vocabulary - 1))];
      parts.push_back(uniform(rng, spec.gain_lo, spec.gain_hi) * w.values);
      frames += w.frames();
      if (i + 1 < n_words) silence(0, spec.pause_max);
    }
    silence(spec.edge_silence_min, spec.edge_silence_max);
    Spectrogram s(spec.bands, frames);
    Eigen::Index t = 0;
    for (const auto& p : parts) {
      s.values.middleCols(t, p.cols()) = p;
      t += p.cols();
    }
    out.push_back({"synth" + std::to_string(u), std::move(s)});
  }
  return out;
}

/// Log-power noise: a per-band level plus uniform jitter in every cell.
inline Spectrogram noise(Eigen::Index bands, Eigen::Index frames, double level,
                         double jitter, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Spectrogram n(bands, frames);
  Eigen::VectorXd base(bands);
  for (Eigen::Index k = 0; k < bands; ++k) base[k] = level + uniform(rng, -1.0, 1.0);
  for (Eigen::Index t = 0; t < frames; ++t) {
    for (Eigen::Index k = 0; k < bands; ++k) n(k, t) = base[k] + uniform(rng, -jitter, jitter);
  }
  return n;
}

}  // namespace spimpute::synthetic
