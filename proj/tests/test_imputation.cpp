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


#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "spimpute/evaluation.hpp"
#include "spimpute/imputation.hpp"
#include "spimpute/synthetic.hpp"

namespace spimpute {
namespace {

Dictionary random_dictionary(std::mt19937_64& rng, Eigen::Index bands, Eigen::Index frames,
                             Eigen::Index atoms, double lo = 1.0, double hi = 10.0) {
  Dictionary d;
  d.bands = bands;
  d.frames = frames;
  d.atoms = oracle::random_matrix(rng, bands * frames, atoms, lo, hi);
  d.provenance.resize(static_cast<std::size_t>(atoms));
  return d;
}

Mask random_binary_mask(std::mt19937_64& rng, Eigen::Index bands, Eigen::Index frames,
                        double p_reliable) {
  std::bernoulli_distribution b(p_reliable);
  Eigen::MatrixXd m(bands, frames);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = b(rng) ? 1.0 : 0.0;
  return Mask(m);
}

struct CountingSolver {
  std::atomic<int>* calls;
  SolveResult operator()(const SolveProblem& p) const {
    ++*calls;
    return solve(p);
  }
};

TEST(PlanWindows, Examples) {
  const WindowPlan p = plan_windows(23 * 100, 23 * 35, 23);
  EXPECT_EQ(p.count(), 66);
  EXPECT_EQ(p.max_candidates(), 35);
  EXPECT_EQ(p.rows_in(0), 805);
  EXPECT_EQ(p.starts.back(), 65 * 23);
  EXPECT_EQ(p.rows_in(65), 2300 - 65 * 23);

  const WindowPlan single = plan_windows(40, 40, 7);
  EXPECT_EQ(single.count(), 1);
  EXPECT_EQ(single.rows_in(0), 40);
}

TEST(PlanWindows, AgreesWithCountingOracle) {
  for (Eigen::Index D = 1; D <= 40; ++D) {
    for (Eigen::Index L = 1; L <= D; ++L) {
      for (Eigen::Index delta = 1; delta <= L; ++delta) {
        const WindowPlan p = plan_windows(D, L, delta);
        const oracle::Coverage cov = oracle::count_windows(D, L, delta);
        ASSERT_EQ(p.count(), cov.windows) << D << ' ' << L << ' ' << delta;
        std::vector<int> counts(static_cast<std::size_t>(D), 0);
        Eigen::Index spans = 0;
        for (Eigen::Index i = 0; i < p.count(); ++i) {
          spans += p.rows_in(i);
          for (Eigen::Index d = p.starts[static_cast<std::size_t>(i)];
               d < p.starts[static_cast<std::size_t>(i)] + p.rows_in(i); ++d) {
            ++counts[static_cast<std::size_t>(d)];
          }
        }
        EXPECT_EQ(counts, cov.counts);
        EXPECT_EQ(spans, std::accumulate(counts.begin(), counts.end(), Eigen::Index{0}));
        EXPECT_GE(*std::min_element(counts.begin(), counts.end()), 1);
        EXPECT_LE(*std::max_element(counts.begin(), counts.end()), p.max_candidates());
      }
    }
  }
}

TEST(PlanWindows, Errors) {
  EXPECT_THROW(plan_windows(10, 11, 1), Error);
  EXPECT_THROW(plan_windows(10, 5, 0), Error);
  EXPECT_THROW(plan_windows(10, 5, 6), Error);
}

TEST(ImputeWhole, ExactAtomWithAllReliableCells) {
  std::mt19937_64 rng(1);
  const Dictionary d = random_dictionary(rng, 4, 6, 20);
  const Spectrogram y = unflatten(d.atoms.col(7), 4);
  ImputationOptions opts;
  opts.lambda = LambdaRule::absolute(1e-6);
  const ImputationResult r = impute_whole(y, Mask(4, 6, 1.0), d, opts);
  EXPECT_LT((r.per_window[0].reconstruction - y.flat()).lpNorm<Eigen::Infinity>(), 1e-3);
  EXPECT_EQ(r.imputed.values, y.values);
}

TEST(ImputeWhole, AllUnreliableSkipsTheSolve) {
  std::mt19937_64 rng(2);
  const Dictionary d = random_dictionary(rng, 3, 5, 10);
  const Spectrogram y(oracle::random_matrix(rng, 3, 5, 0, 4));
  std::atomic<int> calls{0};
  const ImputationResult r = impute_whole(y, Mask(3, 5, 0.0), d, {}, CountingSolver{&calls});
  EXPECT_EQ(calls.load(), 0);
  EXPECT_EQ(r.solve_calls, 0);
  EXPECT_EQ(r.skipped_windows, std::vector<Eigen::Index>{1});
  EXPECT_EQ(r.imputed.values, y.values);
  EXPECT_EQ(r.candidate_counts.maxCoeff(), 0);
  EXPECT_EQ(r.uncovered_cells.size(), 15u);
}

TEST(ImputeWhole, RecoversCorruptedCellsOfAnAtom) {
  std::mt19937_64 rng(3);
  const Dictionary d = random_dictionary(rng, 5, 4, 3);
  const Spectrogram truth = unflatten(d.atoms.col(1), 5);
  Spectrogram y = truth;
  Eigen::MatrixXd m = Eigen::MatrixXd::Ones(5, 4);
  std::vector<Eigen::Index> cells(20);
  std::iota(cells.begin(), cells.end(), 0);
  std::shuffle(cells.begin(), cells.end(), rng);
  for (int i = 0; i < 6; ++i) {  // 30% of cells
    y.values.data()[cells[i]] += 3.0;
    m.data()[cells[i]] = 0.0;
  }
  const Mask mask(m);
  ImputationOptions opts;
  opts.lambda = LambdaRule::relative(1e-6);
  const ImputationResult r = impute_whole(y, mask, d, opts);

  // brute-force solve of the same row-selected problem
  Eigen::VectorXd x;
  oracle::brute_force_objective(d.atoms, y.flat(), mask.flat(), r.per_window[0].lambda, &x);
  const Eigen::VectorXd brute = d.atoms * x;
  double se = 0.0;
  for (int i = 0; i < 6; ++i) {
    const double est = r.imputed.values.data()[cells[i]];
    se += std::pow(est - truth.values.data()[cells[i]], 2);
    EXPECT_NEAR(est, brute[cells[i]], 1e-6);
  }
  EXPECT_LT(std::sqrt(se / 6.0), 1e-2);
}

TEST(ImputeWhole, RequiresFragmentLengthEqualToUtterance) {
  std::mt19937_64 rng(4);
  const Dictionary d = random_dictionary(rng, 3, 5, 10);
  EXPECT_THROW(impute_whole(Spectrogram(3, 6, 1.0), Mask(3, 6, 1.0), d), Error);
  EXPECT_THROW(impute_whole(Spectrogram(4, 5, 1.0), Mask(4, 5, 1.0), d), Error);
}

TEST(ImputeSliding, AllUnreliableEverywhere) {
  std::mt19937_64 rng(5);
  const Dictionary d = random_dictionary(rng, 3, 4, 10);
  const Spectrogram y(oracle::random_matrix(rng, 3, 12, 0, 4));
  std::atomic<int> calls{0};
  ImputationOptions opts;
  opts.shift_frames = 2;
  const ImputationResult r = impute_sliding(y, Mask(3, 12, 0.0), d, opts, CountingSolver{&calls});
  EXPECT_EQ(calls.load(), 0);
  EXPECT_EQ(r.skipped_windows.size(), 5u);
  EXPECT_EQ(r.imputed.values, y.values);
  EXPECT_EQ(r.candidate_counts.maxCoeff(), 0);
}

TEST(ImputeSliding, SingleWindowEqualsWhole) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const Dictionary d = random_dictionary(rng, 4, 6, 30);
    const Spectrogram y(oracle::random_matrix(rng, 4, 6, 1, 10));
    const Mask m = random_binary_mask(rng, 4, 6, 0.5);
    ImputationOptions opts;
    opts.shift_frames = 1 + trial;
    const ImputationResult a = impute_sliding(y, m, d, opts);
    const ImputationResult b = impute_whole(y, m, d, opts);
    EXPECT_EQ(a.imputed.values, b.imputed.values);
  }
}

TEST(ImputeSliding, OverlappingCandidatesAreAveraged) {
  Dictionary d;
  d.bands = 1;
  d.frames = 2;
  d.atoms = Eigen::MatrixXd::Ones(2, 1);
  d.provenance.resize(1);
  const Spectrogram y(Eigen::MatrixXd::Constant(1, 3, 9.0));
  const Mask m((Eigen::MatrixXd(1, 3) << 1.0, 0.0, 1.0).finished());
  auto staged = [calls = std::make_shared<int>(0)](const SolveProblem& p) {
    SolveResult r;
    r.x = Eigen::VectorXd::Constant(p.atoms.cols(), ++*calls == 1 ? 2.0 : 4.0);
    return r;
  };
  const ImputationResult r = impute_sliding(y, m, d, {}, staged);
  EXPECT_EQ(r.candidate_counts(0, 1), 2);
  EXPECT_DOUBLE_EQ(r.imputed(0, 1), 3.0);
  EXPECT_DOUBLE_EQ(r.imputed(0, 0), 9.0);
  EXPECT_DOUBLE_EQ(r.imputed(0, 2), 9.0);
}

TEST(ImputeSliding, NonOverlappingEqualsStitchedWholeSolves) {
  std::mt19937_64 rng(7);
  const Dictionary d = random_dictionary(rng, 3, 5, 25);
  const Spectrogram y(oracle::random_matrix(rng, 3, 15, 1, 10));
  const Mask m = random_binary_mask(rng, 3, 15, 0.6);
  ImputationOptions opts;
  opts.shift_frames = 5;
  const ImputationResult sliding = impute_sliding(y, m, d, opts);
  for (Eigen::Index b = 0; b < 3; ++b) {
    const Spectrogram yb(Eigen::MatrixXd(y.values.middleCols(5 * b, 5)));
    const Mask mb(Eigen::MatrixXd(m.values.middleCols(5 * b, 5)));
    const ImputationResult whole = impute_whole(yb, mb, d, opts);
    EXPECT_EQ(Eigen::MatrixXd(sliding.imputed.values.middleCols(5 * b, 5)), whole.imputed.values);
  }
  EXPECT_EQ(sliding.candidate_counts.maxCoeff(), 1);
}

TEST(ImputeSliding, ReliableCellsAndCandidateBounds) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 8; ++trial) {
    const Dictionary d = random_dictionary(rng, 3, 6, 40);
    const Spectrogram y(oracle::random_matrix(rng, 3, 20 + trial, 1, 10));
    const Mask m = random_binary_mask(rng, 3, y.frames(), 0.3);
    ImputationOptions opts;
    opts.shift_frames = 1 + trial % 6;
    const ImputationResult r = impute_sliding(y, m, d, opts);
    const WindowPlan plan = plan_windows(y.size(), 18, 3 * opts.shift_frames);
    EXPECT_EQ(static_cast<Eigen::Index>(r.per_window.size()), plan.count());
    EXPECT_LE(r.candidate_counts.maxCoeff(), plan.max_candidates());
    for (Eigen::Index c = 0; c < y.size(); ++c) {
      if (m.values.data()[c] == 1.0) {
        EXPECT_EQ(r.imputed.values.data()[c], y.values.data()[c]);
      }
    }
    EXPECT_TRUE(r.imputed.all_finite());
    for (const auto& w : r.per_window) {
      if (!w.skipped) {
        EXPECT_TRUE(w.converged);
      }
    }
  }
}

TEST(ImputeSliding, ThreadCountDoesNotChangeTheResult) {
  std::mt19937_64 rng(9);
  const Dictionary d = random_dictionary(rng, 4, 5, 40);
  const Spectrogram y(oracle::random_matrix(rng, 4, 30, 1, 10));
  const Mask m = random_binary_mask(rng, 4, 30, 0.5);
  ImputationOptions one, many;
  many.threads = 3;
  EXPECT_EQ(impute_sliding(y, m, d, one).imputed.values,
            impute_sliding(y, m, d, many).imputed.values);
}

TEST(ImputeSliding, ShortUtteranceIsPaddedAndCropped) {
  std::mt19937_64 rng(10);
  const Dictionary d = random_dictionary(rng, 3, 8, 30);
  const Spectrogram y(oracle::random_matrix(rng, 3, 5, 1, 10));
  const Mask m = random_binary_mask(rng, 3, 5, 0.5);
  const ImputationResult r = impute_sliding(y, m, d);
  EXPECT_EQ(r.imputed.frames(), 5);
  EXPECT_EQ(r.candidate_counts.cols(), 5);
  for (Eigen::Index c = 0; c < y.size(); ++c) {
    if (m.values.data()[c] == 1.0) {
      EXPECT_EQ(r.imputed.values.data()[c], y.values.data()[c]);
    }
  }
}

TEST(ImputeSliding, FuzzyCellsBlendObservationAndEstimate) {
  std::mt19937_64 rng(11);
  const Dictionary d = random_dictionary(rng, 2, 3, 10);
  const Spectrogram y(oracle::random_matrix(rng, 2, 3, 1, 10));
  Eigen::MatrixXd mv = Eigen::MatrixXd::Ones(2, 3);
  mv(0, 1) = 0.25;
  mv(1, 2) = 0.0;
  const ImputationResult r = impute_sliding(y, Mask(mv), d);
  const Eigen::VectorXd& rec = r.per_window[0].reconstruction;
  EXPECT_NEAR(r.imputed(0, 1), 0.25 * y(0, 1) + 0.75 * rec[2], 1e-12);
  EXPECT_EQ(r.imputed(1, 2), rec[5]);
}

TEST(ImputeSliding, BandMismatch) {
  std::mt19937_64 rng(12);
  const Dictionary d = random_dictionary(rng, 3, 4, 5);
  EXPECT_THROW(impute_sliding(Spectrogram(4, 10, 1.0), Mask(4, 10, 1.0), d), Error);
}

TEST(BoundedClamp, Examples) {
  ImputationResult r;
  r.imputed = Spectrogram(Eigen::MatrixXd((Eigen::MatrixXd(1, 3) << 5.0, 1.0, 2.0).finished()));
  const Spectrogram y(Eigen::MatrixXd((Eigen::MatrixXd(1, 3) << 3.0, 3.0, 2.0).finished()));
  const Mask m((Eigen::MatrixXd(1, 3) << 0.0, 0.0, 1.0).finished());
  const ImputationResult c = bounded_clamp(r, y, m);
  EXPECT_EQ(c.imputed(0, 0), 3.0);
  EXPECT_EQ(c.imputed(0, 1), 1.0);
  EXPECT_EQ(c.imputed(0, 2), 2.0);
}

TEST(BoundedClamp, EnabledThroughOptions) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const Dictionary d = random_dictionary(rng, 3, 4, 20, 5.0, 15.0);
    const Spectrogram y(oracle::random_matrix(rng, 3, 12, 0, 10));
    const Mask m = random_binary_mask(rng, 3, 12, 0.5);
    ImputationOptions opts;
    opts.bounded_clamp = true;
    opts.shift_frames = 2;
    const ImputationResult r = impute_sliding(y, m, d, opts);
    for (Eigen::Index c = 0; c < y.size(); ++c) {
      if (m.values.data()[c] == 0.0) {
        EXPECT_LE(r.imputed.values.data()[c], y.values.data()[c]);
      } else {
        EXPECT_EQ(r.imputed.values.data()[c], y.values.data()[c]);
      }
    }
  }
}

TEST(WindowLog, Format) {
  WindowDiagnostics d;
  d.index = 3;
  d.start_frame = 2;
  d.reliable_cells = 40;
  d.sparsity = 5;
  d.iterations = 7;
  d.kkt_residual = 1.5e-9;
  EXPECT_EQ(format_window_log(d),
            "window=3 start_frame=2 reliable=40 sparsity=5 iterations=7 kkt=1.500e-09 skipped=0");
}

TEST(ImputeSliding, SmallShiftsReconstructBetterOnSyntheticSpeech) {
  synthetic::CorpusSpec spec;
  const std::vector<Utterance> corpus = synthetic::corpus(spec, 12, 21);
  std::vector<Spectrogram> clean;
  for (const auto& u : corpus) clean.push_back(u.clean);
  const Dictionary d = build_dictionary(clean, 300, 20, 4);
  double rmse_small = 0.0, rmse_large = 0.0;
  for (std::size_t u = 0; u < corpus.size(); ++u) {
    const Spectrogram noise = scale_noise_to_snr(
        corpus[u].clean, synthetic::noise(spec.bands, corpus[u].clean.frames(), 8.0, 1.5, u), 0.0);
    const Spectrogram y = additive_spectrogram_mix(corpus[u].clean, noise);
    const Mask m = oracle_mask(corpus[u].clean, noise);
    ImputationOptions small, large;
    small.shift_frames = 1;
    large.shift_frames = 20;
    rmse_small += score(corpus[u].clean, impute_sliding(y, m, d, small).imputed, m)
                      .unreliable_rmse.value_or(0.0);
    rmse_large += score(corpus[u].clean, impute_sliding(y, m, d, large).imputed, m)
                      .unreliable_rmse.value_or(0.0);
  }
  EXPECT_LE(rmse_small, rmse_large);
}

}  // namespace
}  // namespace spimpute
