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
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "spimpute/dictionary.hpp"
#include "spimpute/error.hpp"
#include "spimpute/features.hpp"
#include "spimpute/imputation.hpp"
#include "spimpute/masks.hpp"
#include "spimpute/spectrogram.hpp"

namespace spimpute {

/// Reconstruction quality against a known clean spectrogram. Unreliable
/// metrics are absent when the mask has no unreliable cell.
struct ImputationMetrics {
  std::optional<double> unreliable_rmse;
  double overall_rmse = 0.0;
  std::optional<double> imputation_snr_db;  // linear power domain, unreliable non-floor cells
  Eigen::Index unreliable_cells = 0;
  Eigen::Index total_cells = 0;
};

inline ImputationMetrics score(const Spectrogram& truth, const Spectrogram& imputed,
                               const Mask& mask, double energy_floor = 1e-10) {
  require_same_shape(truth, imputed, "score");
  require_same_shape(truth, mask, "score");
  const double log_floor = std::log(energy_floor);
  ImputationMetrics m;
  m.total_cells = truth.size();
  double sq_all = 0.0, sq_unrel = 0.0, sig = 0.0, err = 0.0;
  Eigen::Index above_floor = 0;
  for (Eigen::Index c = 0; c < truth.size(); ++c) {
    const double s = truth.values.data()[c];
    const double e = imputed.values.data()[c];
    const double d = e - s;
    sq_all += d * d;
    if (mask.values.data()[c] < 0.5) {
      ++m.unreliable_cells;
      sq_unrel += d * d;
      if (s > log_floor) {
        ++above_floor;
        const double sl = std::exp(s);
        const double el = std::exp(e);
        sig += sl * sl;
        err += (sl - el) * (sl - el);
      }
    }
  }
  if (m.total_cells > 0) m.overall_rmse = std::sqrt(sq_all / static_cast<double>(m.total_cells));
  if (m.unreliable_cells > 0) {
    m.unreliable_rmse = std::sqrt(sq_unrel / static_cast<double>(m.unreliable_cells));
  }
  if (above_floor > 0) {
    m.imputation_snr_db = err > 0.0 ? 10.0 * std::log10(sig / err)
                                    : std::numeric_limits<double>::infinity();
  }
  return m;
}

/// ||imputed - truth|| / ||truth|| over unreliable cells; absent when none.
inline std::optional<double> unreliable_relative_rmse(const Spectrogram& truth,
                                                      const Spectrogram& imputed,
                                                      const Mask& mask) {
  require_same_shape(truth, imputed, "unreliable_relative_rmse");
  require_same_shape(truth, mask, "unreliable_relative_rmse");
  double num = 0.0, den = 0.0;
  Eigen::Index n = 0;
  for (Eigen::Index c = 0; c < truth.size(); ++c) {
    if (mask.values.data()[c] >= 0.5) continue;
    const double s = truth.values.data()[c];
    const double d = imputed.values.data()[c] - s;
    num += d * d;
    den += s * s;
    ++n;
  }
  if (n == 0 || den == 0.0) return std::nullopt;
  return std::sqrt(num / den);
}

enum class MaskType { kOracle, kThreshold, kCorrected };

inline std::string to_string(MaskType t) {
  switch (t) {
    case MaskType::kOracle: return "oracle";
    case MaskType::kThreshold: return "threshold";
    case MaskType::kCorrected: return "corrected";
  }
  return "unknown";
}

inline MaskType parse_mask_type(const std::string& s) {
  if (s == "oracle") return MaskType::kOracle;
  if (s == "threshold") return MaskType::kThreshold;
  if (s == "corrected") return MaskType::kCorrected;
  throw Error(ErrorCode::kInvalidArgument, "unknown mask type: " + s);
}

struct Utterance {
  std::string id;
  Spectrogram clean;
};

struct NoiseSource {
  std::string name;
  Spectrogram noise;
};

struct SweepConfig {
  std::vector<double> snr_db{10.0, 5.0, 0.0, -5.0};
  std::vector<MaskType> masks{MaskType::kOracle};
  std::vector<Eigen::Index> shifts{1, 5, 10, 15, 20, 25, 30, 35};
  double threshold_db = 0.0;
  ImputationOptions imputation{};
  double energy_floor = 1e-10;
  double utterance_fraction = 1.0;  // random subset of the corpus, at least one utterance
  std::uint64_t seed = 0;
  std::function<void(const std::string&)> warn;  // optional sink for skipped utterances
};

struct SweepRow {
  std::string noise_type;
  double snr_db = 0.0;
  MaskType mask_type = MaskType::kOracle;
  Eigen::Index window_shift = 1;
  std::optional<double> unreliable_rmse;
  double overall_rmse = 0.0;
  std::optional<double> imputation_snr_db;
  Eigen::Index unreliable_cells = 0;
  Eigen::Index total_cells = 0;
  double reliable_pct = 0.0;
  double false_reliable_pct = 0.0;
  Eigen::Index utterances = 0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
};

inline constexpr const char* kSweepCsvHeader =
    "noise_type,snr_db,mask_type,window_shift,unreliable_rmse,overall_rmse,imputation_snr_db,"
    "unreliable_cells,total_cells,reliable_pct,false_reliable_pct";

namespace detail {

/// Noise frames aligned to an utterance: a seeded random offset into the
/// noise, wrapping around when the noise is shorter.
inline Spectrogram noise_segment(const Spectrogram& noise, Eigen::Index frames,
                                 std::mt19937_64& rng) {
  const auto offset =
      static_cast<Eigen::Index>(uniform_below(rng, static_cast<std::uint64_t>(noise.frames())));
  Spectrogram seg(noise.bands(), frames);
  for (Eigen::Index t = 0; t < frames; ++t) {
    seg.values.col(t) = noise.values.col((offset + t) % noise.frames());
  }
  return seg;
}

/// Stand-in noise estimate for the threshold mask: the per-band maximum of
/// the noise over the utterance, held constant over time.
inline Spectrogram band_max_noise(const Spectrogram& noise) {
  Spectrogram est(noise.bands(), noise.frames());
  const Eigen::VectorXd peak = noise.values.rowwise().maxCoeff();
  est.values.colwise() = peak;
  return est;
}

struct Accumulator {
  double unrel = 0.0;
  Eigen::Index unrel_n = 0;
  double overall = 0.0;
  double snr = 0.0;
  Eigen::Index snr_n = 0;
  Eigen::Index unreliable_cells = 0;
  Eigen::Index total_cells = 0;
  double reliable_pct = 0.0;
  double false_reliable_pct = 0.0;
  Eigen::Index n = 0;
};

inline std::string format_fixed(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace detail

/// Mix -> mask -> impute -> score for every utterance, noise, SNR, mask type
/// and window shift. Rows are means over utterances (cell counts are summed),
/// sorted by (mask type, snr, shift, noise type).
inline SweepReport run_sweep(std::span<const Utterance> corpus,
                             std::span<const NoiseSource> noises, const Dictionary& dict,
                             const SweepConfig& cfg) {
  require(!corpus.empty(), ErrorCode::kInvalidArgument, "sweep: empty corpus");
  require(!noises.empty(), ErrorCode::kInvalidArgument, "sweep: no noise sources");
  require(!cfg.snr_db.empty() && !cfg.masks.empty() && !cfg.shifts.empty(),
          ErrorCode::kInvalidArgument, "sweep: empty configuration grid");
  require(cfg.utterance_fraction > 0.0 && cfg.utterance_fraction <= 1.0,
          ErrorCode::kInvalidArgument, "sweep: utterance_fraction must be in (0, 1]");

  std::vector<std::size_t> selected(corpus.size());
  std::iota(selected.begin(), selected.end(), std::size_t{0});
  std::mt19937_64 pick_rng(cfg.seed);
  if (cfg.utterance_fraction < 1.0) {
    const auto keep = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(cfg.utterance_fraction * corpus.size())));
    for (std::size_t i = 0; i < keep; ++i) {
      std::swap(selected[i], selected[i + detail::uniform_below(pick_rng, selected.size() - i)]);
    }
    selected.resize(keep);
    std::sort(selected.begin(), selected.end());
  }

  const std::size_t n_cfg = noises.size() * cfg.snr_db.size() * cfg.masks.size() * cfg.shifts.size();
  std::vector<detail::Accumulator> acc(n_cfg);
  auto slot = [&](std::size_t ni, std::size_t si, std::size_t mi, std::size_t hi) {
    return ((ni * cfg.snr_db.size() + si) * cfg.masks.size() + mi) * cfg.shifts.size() + hi;
  };

  std::size_t succeeded = 0;
  for (std::size_t u : selected) {
    const Utterance& utt = corpus[u];
    try {
      std::vector<std::pair<std::size_t, detail::Accumulator>> local;
      for (std::size_t ni = 0; ni < noises.size(); ++ni) {
        require(noises[ni].noise.bands() == utt.clean.bands() && noises[ni].noise.frames() >= 1,
                ErrorCode::kShapeMismatch, "noise band count differs from utterance");
        std::mt19937_64 rng(cfg.seed ^ (0x9e3779b97f4a7c15ULL * (u + 1)) ^ (ni + 1));
        const Spectrogram raw = detail::noise_segment(noises[ni].noise, utt.clean.frames(), rng);
        for (std::size_t si = 0; si < cfg.snr_db.size(); ++si) {
          const Spectrogram noise = scale_noise_to_snr(utt.clean, raw, cfg.snr_db[si]);
          const Spectrogram noisy = additive_spectrogram_mix(utt.clean, noise);
          const Mask oracle = oracle_mask(utt.clean, noise);
          for (std::size_t mi = 0; mi < cfg.masks.size(); ++mi) {
            Mask mask = oracle;
            if (cfg.masks[mi] != MaskType::kOracle) {
              mask = threshold_mask(noisy, detail::band_max_noise(noise), cfg.threshold_db);
              if (cfg.masks[mi] == MaskType::kCorrected) mask = remove_false_reliables(mask, oracle);
            }
            const MaskStats stats = mask_stats(mask, oracle);
            for (std::size_t hi = 0; hi < cfg.shifts.size(); ++hi) {
              ImputationOptions opts = cfg.imputation;
              opts.shift_frames = cfg.shifts[hi];
              const ImputationResult res = impute_sliding(noisy, mask, dict, opts);
              const ImputationMetrics m = score(utt.clean, res.imputed, mask, cfg.energy_floor);
              detail::Accumulator a;
              if (m.unreliable_rmse) {
                a.unrel = *m.unreliable_rmse;
                a.unrel_n = 1;
              }
              if (m.imputation_snr_db) {
                a.snr = *m.imputation_snr_db;
                a.snr_n = 1;
              }
              a.overall = m.overall_rmse;
              a.unreliable_cells = m.unreliable_cells;
              a.total_cells = m.total_cells;
              a.reliable_pct = stats.reliable_pct;
              a.false_reliable_pct = stats.false_reliable_pct;
              a.n = 1;
              local.emplace_back(slot(ni, si, mi, hi), a);
            }
          }
        }
      }
      for (const auto& [s, a] : local) {
        auto& t = acc[s];
        t.unrel += a.unrel;
        t.unrel_n += a.unrel_n;
        t.overall += a.overall;
        t.snr += a.snr;
        t.snr_n += a.snr_n;
        t.unreliable_cells += a.unreliable_cells;
        t.total_cells += a.total_cells;
        t.reliable_pct += a.reliable_pct;
        t.false_reliable_pct += a.false_reliable_pct;
        t.n += a.n;
      }
      ++succeeded;
    } catch (const Error& e) {
      if (cfg.warn) cfg.warn("skipping utterance " + utt.id + ": " + e.what());
    }
  }
  require(succeeded > 0, ErrorCode::kInvalidArgument, "sweep: every utterance failed");

  SweepReport report;
  for (std::size_t ni = 0; ni < noises.size(); ++ni) {
    for (std::size_t si = 0; si < cfg.snr_db.size(); ++si) {
      for (std::size_t mi = 0; mi < cfg.masks.size(); ++mi) {
        for (std::size_t hi = 0; hi < cfg.shifts.size(); ++hi) {
          const auto& a = acc[slot(ni, si, mi, hi)];
          SweepRow row;
          row.noise_type = noises[ni].name;
          row.snr_db = cfg.snr_db[si];
          row.mask_type = cfg.masks[mi];
          row.window_shift = cfg.shifts[hi];
          const double n = static_cast<double>(a.n);
          if (a.unrel_n > 0) row.unreliable_rmse = a.unrel / static_cast<double>(a.unrel_n);
          if (a.snr_n > 0) row.imputation_snr_db = a.snr / static_cast<double>(a.snr_n);
          row.overall_rmse = a.overall / n;
          row.unreliable_cells = a.unreliable_cells;
          row.total_cells = a.total_cells;
          row.reliable_pct = a.reliable_pct / n;
          row.false_reliable_pct = a.false_reliable_pct / n;
          row.utterances = a.n;
          report.rows.push_back(std::move(row));
        }
      }
    }
  }
  std::stable_sort(report.rows.begin(), report.rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return std::tuple(to_string(a.mask_type), a.snr_db, a.window_shift, a.noise_type) <
           std::tuple(to_string(b.mask_type), b.snr_db, b.window_shift, b.noise_type);
  });
  return report;
}

inline void write_sweep_csv(std::ostream& out, const SweepReport& report) {
  using detail::format_fixed;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  out << kSweepCsvHeader << '\n';
  for (const SweepRow& r : report.rows) {
    out << r.noise_type << ',' << format_fixed(r.snr_db) << ',' << to_string(r.mask_type) << ','
        << r.window_shift << ',' << format_fixed(r.unreliable_rmse.value_or(nan)) << ','
        << format_fixed(r.overall_rmse) << ',' << format_fixed(r.imputation_snr_db.value_or(nan))
        << ',' << r.unreliable_cells << ',' << r.total_cells << ','
        << format_fixed(r.reliable_pct) << ',' << format_fixed(r.false_reliable_pct) << '\n';
  }
}

}  // namespace spimpute
