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
#include <atomic>
#include <exception>
#include <cmath>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include "spimpute/dictionary.hpp"
#include "spimpute/error.hpp"
#include "spimpute/solver.hpp"
#include "spimpute/spectrogram.hpp"

namespace spimpute {

/// Geometry of overlapping windows over a flattened utterance, in rows.
/// Window i (0-based here) starts at i*shift and spans min(L, D - start) rows.
struct WindowPlan {
  Eigen::Index total_rows = 0;   // D
  Eigen::Index window_rows = 0;  // L
  Eigen::Index shift_rows = 0;   // delta
  std::vector<Eigen::Index> starts;

  Eigen::Index count() const { return static_cast<Eigen::Index>(starts.size()); }
  Eigen::Index rows_in(Eigen::Index i) const {
    return std::min(window_rows, total_rows - starts[static_cast<std::size_t>(i)]);
  }
  /// Upper bound on windows covering any one row: ceil(L / delta).
  Eigen::Index max_candidates() const {
    return (window_rows + shift_rows - 1) / shift_rows;
  }
};

/// I = ceil((D - L) / delta) + 1 windows, the last one truncated to fit.
inline WindowPlan plan_windows(Eigen::Index total_rows, Eigen::Index window_rows,
                               Eigen::Index shift_rows) {
  require(window_rows >= 1 && shift_rows >= 1, ErrorCode::kInvalidArgument,
          "window length and shift must be >= 1");
  require(window_rows <= total_rows, ErrorCode::kInvalidArgument,
          "window longer than the utterance");
  require(total_rows == window_rows || shift_rows <= window_rows, ErrorCode::kInvalidArgument,
          "window shift exceeds window length");
  WindowPlan plan{total_rows, window_rows, shift_rows, {}};
  const Eigen::Index extra = total_rows - window_rows;
  const Eigen::Index count = extra > 0 ? (extra + shift_rows - 1) / shift_rows + 1 : 1;
  plan.starts.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index i = 0; i < count; ++i) plan.starts.push_back(i * shift_rows);
  return plan;
}

struct ImputationOptions {
  Eigen::Index shift_frames = 1;
  LambdaRule lambda{};
  double tol = 1e-6;
  Eigen::Index max_iter = 0;  // 0: solver default
  bool bounded_clamp = false;
  int threads = 1;
  double pad_value = std::log(1e-10);  // fill for frames added to short utterances
};

struct WindowDiagnostics {
  Eigen::Index index = 0;  // 1-based
  Eigen::Index start_frame = 0;
  Eigen::Index rows = 0;
  Eigen::Index reliable_cells = 0;
  bool skipped = false;
  Eigen::Index sparsity = 0;
  Eigen::Index iterations = 0;
  double kkt_residual = 0.0;
  double objective = 0.0;
  double lambda = 0.0;
  bool converged = false;
  Eigen::VectorXd reconstruction;  // A x over the window rows; empty if skipped
};

struct ImputationResult {
  Spectrogram imputed;
  Eigen::MatrixXi candidate_counts;          // K x T
  std::vector<Eigen::Index> skipped_windows;  // 1-based window indices
  std::vector<Eigen::Index> uncovered_cells;  // flat indices of non-reliable cells with no candidate
  std::vector<WindowDiagnostics> per_window;
  Eigen::Index solve_calls = 0;
};

/// Default solver policy for the imputation routines. Any callable with the
/// same signature can be substituted (e.g. to instrument solve calls).
struct LassoSolver {
  SolveResult operator()(const SolveProblem& p) const { return solve(p); }
};

/// One line per window for the diagnostic log.
inline std::string format_window_log(const WindowDiagnostics& d) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "window=%lld start_frame=%lld reliable=%lld sparsity=%lld iterations=%lld "
                "kkt=%.3e skipped=%d",
                static_cast<long long>(d.index), static_cast<long long>(d.start_frame),
                static_cast<long long>(d.reliable_cells), static_cast<long long>(d.sparsity),
                static_cast<long long>(d.iterations), d.kkt_residual, d.skipped ? 1 : 0);
  return buf;
}

/// Replaces every not-fully-reliable cell's estimate by min(estimate, observed).
inline ImputationResult bounded_clamp(ImputationResult result, const Spectrogram& observed,
                                      const Mask& mask) {
  require_same_shape(result.imputed, observed, "bounded_clamp");
  require_same_shape(observed, mask, "bounded_clamp");
  for (Eigen::Index i = 0; i < observed.size(); ++i) {
    if (mask.values.data()[i] < 1.0) {
      double& v = result.imputed.values.data()[i];
      v = std::min(v, observed.values.data()[i]);
    }
  }
  return result;
}

namespace detail {

template <class Solver>
WindowDiagnostics solve_window(const Spectrogram& y, const Mask& mask, const Dictionary& dict,
                               const WindowPlan& plan, Eigen::Index i,
                               const ImputationOptions& opts, const Solver& solver) {
  const Eigen::Index start = plan.starts[static_cast<std::size_t>(i)];
  const Eigen::Index rows = plan.rows_in(i);
  WindowDiagnostics d;
  d.index = i + 1;
  d.start_frame = start / y.bands();
  d.rows = rows;
  const Eigen::Map<const Eigen::VectorXd> weights(mask.values.data() + start, rows);
  d.reliable_cells = (weights.array() > 0.0).count();
  if (d.reliable_cells == 0) {
    d.skipped = true;
    return d;
  }
  const auto atoms = dict.atoms.topRows(rows);
  const Eigen::Map<const Eigen::VectorXd> target(y.values.data() + start, rows);
  const Eigen::VectorXd w2y = weights.cwiseProduct(weights).cwiseProduct(target);
  const double lmax = (atoms.transpose() * w2y).maxCoeff();
  SolveProblem p{atoms, target, weights, opts.lambda.resolve(lmax), opts.max_iter, opts.tol};
  const SolveResult r = solver(p);
  d.sparsity = r.sparsity;
  d.iterations = r.iterations;
  d.kkt_residual = r.kkt_residual;
  d.objective = r.objective;
  d.lambda = r.lambda;
  d.converged = r.converged;
  d.reconstruction = atoms * r.x;
  return d;
}

template <class Solver>
ImputationResult impute_planned(const Spectrogram& y, const Mask& mask, const Dictionary& dict,
                                const WindowPlan& plan, const ImputationOptions& opts,
                                const Solver& solver) {
  const Eigen::Index n_windows = plan.count();
  std::vector<WindowDiagnostics> diags(static_cast<std::size_t>(n_windows));
  const int threads = std::max(1, std::min<int>(opts.threads, static_cast<int>(n_windows)));
  if (threads == 1) {
    for (Eigen::Index i = 0; i < n_windows; ++i) {
      diags[static_cast<std::size_t>(i)] = solve_window(y, mask, dict, plan, i, opts, solver);
    }
  } else {
    std::atomic<Eigen::Index> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          for (Eigen::Index i = next++; i < n_windows; i = next++) {
            diags[static_cast<std::size_t>(i)] = solve_window(y, mask, dict, plan, i, opts, solver);
          }
        } catch (...) {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  // Reduction in window order, so the result does not depend on scheduling.
  const Eigen::Index cells = y.size();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(cells);
  Eigen::VectorXi count = Eigen::VectorXi::Zero(cells);
  ImputationResult res;
  for (const WindowDiagnostics& d : diags) {
    if (d.skipped) {
      res.skipped_windows.push_back(d.index);
      continue;
    }
    ++res.solve_calls;
    const Eigen::Index start = plan.starts[static_cast<std::size_t>(d.index - 1)];
    sum.segment(start, d.rows) += d.reconstruction;
    count.segment(start, d.rows).array() += 1;
  }

  res.imputed = y;
  res.candidate_counts = Eigen::Map<const Eigen::MatrixXi>(count.data(), y.bands(), y.frames());
  const double* m = mask.values.data();
  const double* obs = y.values.data();
  double* out = res.imputed.values.data();
  for (Eigen::Index c = 0; c < cells; ++c) {
    if (m[c] >= 1.0) continue;
    if (count[c] == 0) {
      res.uncovered_cells.push_back(c);
      continue;
    }
    const double estimate = sum[c] / count[c];
    out[c] = m[c] <= 0.0 ? estimate : m[c] * obs[c] + (1.0 - m[c]) * estimate;
  }
  res.per_window = std::move(diags);
  if (opts.bounded_clamp) res = bounded_clamp(std::move(res), y, mask);
  return res;
}

inline void check_inputs(const Spectrogram& y, const Mask& mask, const Dictionary& dict) {
  require_same_shape(y, mask, "imputation");
  require(y.all_finite(), ErrorCode::kInvalidArgument, "observation contains non-finite values");
  require(dict.bands == y.bands(), ErrorCode::kShapeMismatch,
          "dictionary band count does not match the observation");
  require(dict.frames >= 1 && dict.atoms.rows() == dict.bands * dict.frames &&
              dict.atoms.cols() >= 1,
          ErrorCode::kInvalidArgument, "dictionary is malformed");
}

}  // namespace detail

/// Single solve over the whole utterance; requires R == T. With no reliable
/// cell at all the observation is returned untouched and window 1 is skipped.
template <class Solver = LassoSolver>
ImputationResult impute_whole(const Spectrogram& y, const Mask& mask, const Dictionary& dict,
                              const ImputationOptions& opts = {}, const Solver& solver = {}) {
  detail::check_inputs(y, mask, dict);
  require(dict.frames == y.frames(), ErrorCode::kInvalidArgument,
          "whole-utterance imputation needs R == T");
  const WindowPlan plan = plan_windows(y.size(), y.size(), y.size());
  return detail::impute_planned(y, mask, dict, plan, opts, solver);
}

/// Sliding-window imputation: one solve per window of R frames shifted by
/// shift_frames, candidates averaged per cell. Utterances shorter than R are
/// padded with pad_value frames (mask 0), imputed, and cropped.
template <class Solver = LassoSolver>
ImputationResult impute_sliding(const Spectrogram& y, const Mask& mask, const Dictionary& dict,
                                const ImputationOptions& opts = {}, const Solver& solver = {}) {
  detail::check_inputs(y, mask, dict);
  require(opts.shift_frames >= 1, ErrorCode::kInvalidArgument, "window shift must be >= 1");
  const Eigen::Index k = y.bands();
  const Eigen::Index t = y.frames();
  const Eigen::Index r = dict.frames;

  if (t < r) {
    Spectrogram padded(k, r, opts.pad_value);
    padded.values.leftCols(t) = y.values;
    Eigen::MatrixXd pm = Eigen::MatrixXd::Zero(k, r);
    pm.leftCols(t) = mask.values;
    const Mask padded_mask(std::move(pm));
    const WindowPlan plan = plan_windows(k * r, k * r, k * r);
    ImputationResult full = detail::impute_planned(padded, padded_mask, dict, plan, opts, solver);
    full.imputed = Spectrogram(Eigen::MatrixXd(full.imputed.values.leftCols(t)));
    full.candidate_counts = Eigen::MatrixXi(full.candidate_counts.leftCols(t));
    std::erase_if(full.uncovered_cells, [&](Eigen::Index c) { return c >= k * t; });
    return full;
  }

  const WindowPlan plan = plan_windows(k * t, k * r, k * opts.shift_frames);
  return detail::impute_planned(y, mask, dict, plan, opts, solver);
}

}  // namespace spimpute
