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

// Non-negative, reliability-weighted l1-regularized least squares:
//
//   minimize  0.5 * ||W (A x - y)||_2^2 + lambda * sum(x)   subject to  x >= 0
//
// with W = diag(weights). Note lambda is on the LASSO (squared-loss) scale.
//
// The solver is a primal active-set method in the style of Lawson-Hanson.
// Each outer iteration adds the atom with the largest KKT violation (lowest
// index on ties) and re-solves the problem restricted to the active set,
// backing off to the feasible boundary whenever a coordinate would turn
// negative. The active columns are kept linearly independent: an entering
// atom that lies in their span is absorbed by moving along the null direction,
// which lowers the l1 term and leaves the residual unchanged. Every move is
// monotone in the objective. Convergence is declared on the KKT residual.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "spimpute/error.hpp"

namespace spimpute {

struct SolveProblem {
  Eigen::Ref<const Eigen::MatrixXd> atoms;     // L x N
  Eigen::Ref<const Eigen::VectorXd> target;    // L
  Eigen::Ref<const Eigen::VectorXd> weights;   // L, in [0, 1]
  double lambda = 0.0;
  Eigen::Index max_iter = 0;  // outer sweeps; 0 means 10 * N
  double tol = 1e-6;          // on the KKT residual
};

struct SolveResult {
  Eigen::VectorXd x;
  Eigen::Index sparsity = 0;  // |{n : x_n > 0}|
  double objective = 0.0;     // 0.5*||W(Ax-y)||^2 + lambda*||x||_1
  double residual_norm = 0.0; // ||W(Ax-y)||_2
  double kkt_residual = 0.0;
  double lambda = 0.0;
  Eigen::Index iterations = 0;
  bool converged = false;
  std::vector<double> objective_trace;  // initial value, then one per sweep
};

/// How lambda is chosen for each solve.
struct LambdaRule {
  enum class Kind { kRelative, kAbsolute };
  Kind kind = Kind::kRelative;
  double value = 0.01;  // fraction of lambda_max, or an absolute value

  static LambdaRule relative(double fraction) { return {Kind::kRelative, fraction}; }
  static LambdaRule absolute(double lambda) { return {Kind::kAbsolute, lambda}; }

  double resolve(double lambda_max) const {
    if (kind == Kind::kAbsolute) return value;
    return std::max(0.0, value * lambda_max);
  }
};

namespace detail {

/// Row-selected, weight-scaled copy of the problem: B = W_r A_r, c = W_r y_r
/// over rows with positive weight.
struct ReducedProblem {
  Eigen::MatrixXd B;
  Eigen::VectorXd c;
};

inline void validate(const SolveProblem& p) {
  require(p.target.size() == p.atoms.rows() && p.weights.size() == p.atoms.rows(),
          ErrorCode::kShapeMismatch, "solve: dimension mismatch");
  require(p.atoms.cols() >= 1, ErrorCode::kInvalidArgument, "solve: no atoms");
  require(std::isfinite(p.lambda) && p.lambda >= 0.0, ErrorCode::kInvalidArgument,
          "solve: lambda must be finite and >= 0");
  require(p.tol >= 0.0, ErrorCode::kInvalidArgument, "solve: tol must be >= 0");
  require(p.atoms.allFinite() && p.target.allFinite() && p.weights.allFinite(),
          ErrorCode::kInvalidArgument, "solve: non-finite input");
  require((p.weights.array() >= 0.0).all() && (p.weights.array() <= 1.0).all(),
          ErrorCode::kInvalidArgument, "solve: weights must lie in [0, 1]");
}

inline ReducedProblem reduce(const SolveProblem& p) {
  std::vector<Eigen::Index> rows;
  for (Eigen::Index l = 0; l < p.weights.size(); ++l) {
    if (p.weights[l] > 0.0) rows.push_back(l);
  }
  require(!rows.empty(), ErrorCode::kNoReliableRows, "no reliable rows");
  const auto m = static_cast<Eigen::Index>(rows.size());
  ReducedProblem r;
  r.B.resize(m, p.atoms.cols());
  r.c.resize(m);
  for (Eigen::Index n = 0; n < p.atoms.cols(); ++n) {
    for (Eigen::Index i = 0; i < m; ++i) r.B(i, n) = p.weights[rows[i]] * p.atoms(rows[i], n);
  }
  for (Eigen::Index i = 0; i < m; ++i) r.c[i] = p.weights[rows[i]] * p.target[rows[i]];
  return r;
}

inline double objective(const Eigen::VectorXd& residual, const Eigen::VectorXd& x,
                        double lambda) {
  return 0.5 * residual.squaredNorm() + lambda * x.sum();
}

/// Max violation of: g_n + lambda = 0 on the support, g_n + lambda >= 0 off it,
/// where g = -B^T r is the gradient of the smooth part.
inline double kkt_residual(const Eigen::MatrixXd& B, const Eigen::VectorXd& residual,
                           const Eigen::VectorXd& x, double lambda) {
  const Eigen::VectorXd g = -(B.transpose() * residual);
  double worst = 0.0;
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    const double v = x[n] > 0.0 ? std::abs(g[n] + lambda) : std::max(0.0, -g[n] - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

struct ActiveSet {
  const Eigen::MatrixXd& B;
  const Eigen::VectorXd& c;
  double lambda;
  Eigen::VectorXd x;
  Eigen::VectorXd r;                  // c - B x
  std::vector<Eigen::Index> active;   // independent columns, x > 0 except a just-added one

  Eigen::MatrixXd columns(const std::vector<Eigen::Index>& idx) const {
    Eigen::MatrixXd out(B.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = B.col(idx[j]);
    return out;
  }

  void refresh_residual() { r = c - B * x; }
  double value() const { return objective(r, x, lambda); }

  /// Brings column j into the active set. If it is (numerically) in the span
  /// of the active columns, moves along the null direction until one
  /// coordinate reaches zero and drops it instead.
  void absorb(Eigen::Index j) {
    const double bj2 = B.col(j).squaredNorm();
    if (bj2 <= 0.0) {
      x[j] = 0.0;
      return;
    }
    if (active.empty()) {
      active.push_back(j);
      return;
    }
    const Eigen::MatrixXd Bp = columns(active);
    const Eigen::LLT<Eigen::MatrixXd> llt(Bp.transpose() * Bp);
    Eigen::VectorXd alpha;
    bool dependent = llt.info() != Eigen::Success;
    if (!dependent) {
      alpha = llt.solve(Bp.transpose() * B.col(j));
      dependent = !alpha.allFinite() || (B.col(j) - Bp * alpha).squaredNorm() <= 1e-10 * bj2;
    }
    if (!dependent) {
      active.push_back(j);
      return;
    }
    if (llt.info() != Eigen::Success || !alpha.allFinite()) {
      // Active set itself degenerate (should not happen); leave j out.
      x[j] = 0.0;
      return;
    }
    // Null direction: d_active = -s*alpha, d_j = s; objective changes by
    // lambda * s * (1 - sum(alpha)) per unit step.
    const double slack = 1.0 - alpha.sum();
    const double s = slack < 0.0 ? 1.0 : -1.0;
    if (s < 0.0 && x[j] <= 0.0) {
      x[j] = 0.0;
      return;
    }
    double step = s < 0.0 ? x[j] : std::numeric_limits<double>::infinity();
    Eigen::Index blocking = s < 0.0 ? -1 : -2;  // -1 marks j itself
    for (std::size_t i = 0; i < active.size(); ++i) {
      const double d = -s * alpha[static_cast<Eigen::Index>(i)];
      if (d < 0.0) {
        const double limit = x[active[i]] / -d;
        if (limit < step) {
          step = limit;
          blocking = static_cast<Eigen::Index>(i);
        }
      }
    }
    if (blocking == -2) return;  // unbounded descent cannot occur with lambda > 0 and slack < 0
    for (std::size_t i = 0; i < active.size(); ++i) {
      x[active[i]] = std::max(0.0, x[active[i]] - step * s * alpha[static_cast<Eigen::Index>(i)]);
    }
    x[j] = std::max(0.0, x[j] + step * s);
    if (blocking == -1) {
      x[j] = 0.0;
    } else {
      x[active[static_cast<std::size_t>(blocking)]] = 0.0;
      active.erase(active.begin() + blocking);
      active.push_back(j);
    }
    refresh_residual();
  }

  /// Lawson-Hanson inner loop: minimize over the active set with the
  /// inactive coordinates held at zero. Returns false if no progress was
  /// possible (numerical breakdown).
  bool solve_active() {
    double current = value();
    bool progressed = false;
    while (!active.empty()) {
      const Eigen::MatrixXd Bp = columns(active);
      const auto p = static_cast<Eigen::Index>(active.size());
      const Eigen::LLT<Eigen::MatrixXd> llt(Bp.transpose() * Bp);
      if (llt.info() != Eigen::Success) return progressed;
      const Eigen::VectorXd z =
          llt.solve(Bp.transpose() * c - Eigen::VectorXd::Constant(p, lambda));
      if (!z.allFinite()) return progressed;

      double step = 1.0;
      for (Eigen::Index i = 0; i < p; ++i) {
        const double xi = x[active[static_cast<std::size_t>(i)]];
        if (z[i] <= 0.0) step = std::min(step, xi / (xi - z[i]));
      }
      Eigen::VectorXd trial = x;
      std::vector<Eigen::Index> kept;
      for (Eigen::Index i = 0; i < p; ++i) {
        const Eigen::Index n = active[static_cast<std::size_t>(i)];
        const double v = x[n] + step * (z[i] - x[n]);
        const bool blocked = z[i] <= 0.0 && x[n] / (x[n] - z[i]) <= step;
        if (!blocked && v > 0.0) {
          trial[n] = v;
          kept.push_back(n);
        } else {
          trial[n] = 0.0;
        }
      }
      Eigen::VectorXd trial_r = c - B * trial;
      const double next = objective(trial_r, trial, lambda);
      if (!(next <= current + 1e-14 * std::abs(current))) return progressed;
      progressed = progressed || next < current || step > 0.0;
      x = std::move(trial);
      r = std::move(trial_r);
      current = next;
      active = std::move(kept);
      if (step >= 1.0) break;
    }
    return progressed;
  }
};

inline SolveResult solve_reduced(const ReducedProblem& rp, double lambda, Eigen::Index max_iter,
                                 double tol, const Eigen::VectorXd* warm_start) {
  const Eigen::Index n_atoms = rp.B.cols();
  const Eigen::Index iter_cap = max_iter > 0 ? max_iter : 10 * n_atoms;
  ActiveSet st{rp.B, rp.c, lambda, Eigen::VectorXd::Zero(n_atoms), rp.c, {}};
  if (warm_start) {
    st.x = warm_start->cwiseMax(0.0);
    st.refresh_residual();
    for (Eigen::Index n = 0; n < n_atoms; ++n) {
      if (st.x[n] > 0.0) st.absorb(n);
    }
  }

  SolveResult res;
  res.lambda = lambda;
  res.objective_trace.push_back(st.value());
  if (!st.active.empty()) {
    st.solve_active();
    res.objective_trace.push_back(st.value());
  }
  res.kkt_residual = kkt_residual(rp.B, st.r, st.x, lambda);
  res.converged = res.kkt_residual <= tol;

  Eigen::Index last_added = -1;
  while (!res.converged && res.iterations < iter_cap) {
    ++res.iterations;
    const Eigen::VectorXd g = -(rp.B.transpose() * st.r);
    Eigen::Index enter = -1;
    double worst = tol;
    for (Eigen::Index n = 0; n < n_atoms; ++n) {
      if (st.x[n] > 0.0) continue;
      const double v = -g[n] - lambda;
      if (v > worst) {
        worst = v;
        enter = n;
      }
    }
    if (enter >= 0) {
      if (enter == last_added && st.x[enter] <= 0.0 &&
          std::find(st.active.begin(), st.active.end(), enter) == st.active.end()) {
        break;  // the same atom re-enters without moving: numerical stall
      }
      last_added = enter;
      st.absorb(enter);
    }
    const bool moved = st.solve_active();
    res.objective_trace.push_back(st.value());
    st.refresh_residual();
    res.kkt_residual = kkt_residual(rp.B, st.r, st.x, lambda);
    res.converged = res.kkt_residual <= tol;
    if (enter < 0 && !moved) break;
  }
  res.x = std::move(st.x);
  res.objective = objective(st.r, res.x, lambda);
  res.residual_norm = st.r.norm();
  res.sparsity = (res.x.array() > 0.0).count();
  return res;
}

}  // namespace detail

/// max_n (A^T W^T W y)_n; any lambda at or above this yields x = 0.
inline double lambda_max(const SolveProblem& p) {
  detail::validate(p);
  const Eigen::VectorXd wy = p.weights.cwiseProduct(p.weights).cwiseProduct(p.target);
  return (p.atoms.transpose() * wy).maxCoeff();
}

inline SolveResult solve(const SolveProblem& p,
                         const std::optional<Eigen::VectorXd>& warm_start = std::nullopt) {
  detail::validate(p);
  require(!warm_start || warm_start->size() == p.atoms.cols(), ErrorCode::kShapeMismatch,
          "solve: warm start has wrong length");
  const detail::ReducedProblem rp = detail::reduce(p);
  return detail::solve_reduced(rp, p.lambda, p.max_iter, p.tol,
                               warm_start ? &*warm_start : nullptr);
}

/// KKT residual of x for the problem p; zero iff x is optimal.
inline double kkt_check(const SolveProblem& p, const Eigen::Ref<const Eigen::VectorXd>& x) {
  require(x.size() == p.atoms.cols() && p.target.size() == p.atoms.rows() &&
              p.weights.size() == p.atoms.rows(),
          ErrorCode::kShapeMismatch, "kkt_check: dimension mismatch");
  require((x.array() >= 0.0).all(), ErrorCode::kInvalidArgument, "kkt_check: x must be >= 0");
  const Eigen::VectorXd w2 = p.weights.cwiseProduct(p.weights);
  const Eigen::VectorXd weighted_residual = w2.cwiseProduct(p.target - p.atoms * x);
  const Eigen::VectorXd g = -(p.atoms.transpose() * weighted_residual);
  double worst = 0.0;
  for (Eigen::Index n = 0; n < x.size(); ++n) {
    const double v = x[n] > 0.0 ? std::abs(g[n] + p.lambda) : std::max(0.0, -g[n] - p.lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

/// Solves along a strictly decreasing lambda grid, warm-starting each solve
/// from the previous solution. p.lambda is ignored.
inline std::vector<SolveResult> solve_path(const SolveProblem& p,
                                           std::span<const double> lambda_grid) {
  require(!lambda_grid.empty(), ErrorCode::kInvalidArgument, "solve_path: empty lambda grid");
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    require(lambda_grid[i] > 0.0 && std::isfinite(lambda_grid[i]), ErrorCode::kInvalidArgument,
            "solve_path: lambdas must be positive");
    require(i == 0 || lambda_grid[i] < lambda_grid[i - 1], ErrorCode::kInvalidArgument,
            "solve_path: lambda grid must be strictly decreasing");
  }
  detail::validate(p);
  const detail::ReducedProblem rp = detail::reduce(p);
  std::vector<SolveResult> path;
  path.reserve(lambda_grid.size());
  for (double lambda : lambda_grid) {
    const Eigen::VectorXd* warm = path.empty() ? nullptr : &path.back().x;
    path.push_back(detail::solve_reduced(rp, lambda, p.max_iter, p.tol, warm));
  }
  return path;
}

}  // namespace spimpute
