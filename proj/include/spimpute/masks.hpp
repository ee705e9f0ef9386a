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
#include <cmath>

#include "spimpute/error.hpp"
#include "spimpute/spectrogram.hpp"

namespace spimpute {

struct MaskStats {
  double reliable_pct = 0.0;        // estimated cells with value >= 0.5
  double false_reliable_pct = 0.0;  // reliable in estimate, unreliable in oracle
};

/// 1 where speech strictly dominates noise, 0 otherwise (ties are unreliable).
inline Mask oracle_mask(const Spectrogram& speech, const Spectrogram& noise) {
  require_same_shape(speech, noise, "oracle_mask");
  return Mask((speech.values.array() > noise.values.array()).cast<double>().matrix());
}

/// 1 where the observation exceeds the noise estimate by more than
/// snr_threshold_db, compared in natural-log power units.
inline Mask threshold_mask(const Spectrogram& noisy, const Spectrogram& noise_estimate,
                           double snr_threshold_db = 0.0) {
  require_same_shape(noisy, noise_estimate, "threshold_mask");
  const double margin = snr_threshold_db * std::log(10.0) / 10.0;
  return Mask(((noisy.values.array() - noise_estimate.values.array()) > margin)
                  .cast<double>()
                  .matrix());
}

/// Drops false reliables: a cell stays reliable only where the oracle agrees.
inline Mask remove_false_reliables(const Mask& estimated, const Mask& oracle) {
  require_same_shape(estimated, oracle, "remove_false_reliables");
  require(estimated.binary() && oracle.binary(), ErrorCode::kInvalidArgument,
          "remove_false_reliables requires binary masks");
  return Mask(estimated.values.cwiseMin(oracle.values));
}

inline MaskStats mask_stats(const Mask& estimated, const Mask& oracle) {
  require_same_shape(estimated, oracle, "mask_stats");
  const auto est = estimated.values.array() >= 0.5;
  const auto orc = oracle.values.array() >= 0.5;
  const double cells = static_cast<double>(estimated.size());
  MaskStats s;
  if (cells == 0) return s;
  s.reliable_pct = 100.0 * static_cast<double>(est.count()) / cells;
  s.false_reliable_pct = 100.0 * static_cast<double>((est && !orc).count()) / cells;
  return s;
}

}  // namespace spimpute
