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


// Builds a toy corpus, samples a dictionary from it, corrupts one held-out
// utterance with noise at 0 dB and reconstructs the masked cells at two
// window shifts.

#include <cstdio>
#include <vector>

#include "spimpute/spimpute.hpp"
#include "spimpute/synthetic.hpp"

int main() {
  using namespace spimpute;
  const synthetic::CorpusSpec spec{};
  const std::vector<Utterance> corpus = synthetic::corpus(spec, 40, 7);
  std::vector<Spectrogram> train;
  for (std::size_t i = 1; i < corpus.size(); ++i) train.push_back(corpus[i].clean);
  const Dictionary dict = build_dictionary(train, 600, 20, 11);

  const Spectrogram& clean = corpus[0].clean;
  const Spectrogram noise = scale_noise_to_snr(
      clean, synthetic::noise(spec.bands, clean.frames(), 8.0, 1.5, 3), 0.0);
  const Spectrogram noisy = additive_spectrogram_mix(clean, noise);
  const Mask mask = oracle_mask(clean, noise);
  std::printf("frames=%lld reliable=%.1f%%\n", static_cast<long long>(clean.frames()),
              100.0 * static_cast<double>(mask.reliable_count()) / static_cast<double>(mask.size()));

  for (Eigen::Index shift : {1, 20}) {
    ImputationOptions opts;
    opts.shift_frames = shift;
    const ImputationResult r = impute_sliding(noisy, mask, dict, opts);
    const ImputationMetrics before = score(clean, noisy, mask);
    const ImputationMetrics after = score(clean, r.imputed, mask);
    std::printf("shift=%2lld windows=%zu unreliable rmse: noisy %.3f -> imputed %.3f\n",
                static_cast<long long>(shift), r.per_window.size(),
                before.unreliable_rmse.value_or(0.0), after.unreliable_rmse.value_or(0.0));
  }
  return 0;
}
