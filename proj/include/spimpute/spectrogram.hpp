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
#include <cstddef>

#include "spimpute/error.hpp"

namespace spimpute {

/// K x T matrix of log-power features. Storage is column-major, so the raw
/// buffer is the frame-contiguous flattening used throughout the library:
/// cell (k, t) lives at index t*K + k.
struct Spectrogram {
  Eigen::MatrixXd values;

  Spectrogram() = default;
  explicit Spectrogram(Eigen::MatrixXd v) : values(std::move(v)) {}
  Spectrogram(Eigen::Index bands, Eigen::Index frames, double fill = 0.0)
      : values(Eigen::MatrixXd::Constant(bands, frames, fill)) {}

  Eigen::Index bands() const { return values.rows(); }
  Eigen::Index frames() const { return values.cols(); }
  Eigen::Index size() const { return values.size(); }

  double operator()(Eigen::Index k, Eigen::Index t) const { return values(k, t); }
  double& operator()(Eigen::Index k, Eigen::Index t) { return values(k, t); }

  /// Flattened view of length D = K*T.
  Eigen::Map<const Eigen::VectorXd> flat() const {
    return {values.data(), values.size()};
  }
  Eigen::Map<Eigen::VectorXd> flat() { return {values.data(), values.size()}; }

  bool all_finite() const { return values.allFinite(); }
};

/// Cell reliability in [0, 1]; 1 marks a speech-dominated cell. Binary masks
/// are the default; continuous values act as soft weights.
struct Mask {
  Eigen::MatrixXd values;

  Mask() = default;
  explicit Mask(Eigen::MatrixXd v) : values(std::move(v)) {
    require(values.allFinite() && (values.array() >= 0.0).all() &&
                (values.array() <= 1.0).all(),
            ErrorCode::kInvalidArgument, "mask entries must lie in [0, 1]");
  }
  Mask(Eigen::Index bands, Eigen::Index frames, double fill)
      : Mask(Eigen::MatrixXd::Constant(bands, frames, fill)) {}

  Eigen::Index bands() const { return values.rows(); }
  Eigen::Index frames() const { return values.cols(); }
  Eigen::Index size() const { return values.size(); }
  double operator()(Eigen::Index k, Eigen::Index t) const { return values(k, t); }

  Eigen::Map<const Eigen::VectorXd> flat() const {
    return {values.data(), values.size()};
  }

  bool binary() const {
    return ((values.array() == 0.0) || (values.array() == 1.0)).all();
  }
  /// Cells counted as reliable: value >= 0.5.
  Eigen::Index reliable_count() const {
    return (values.array() >= 0.5).count();
  }
  bool any_weight() const { return (values.array() > 0.0).any(); }
};

template <class A, class B>
void require_same_shape(const A& a, const B& b, const char* what) {
  require(a.bands() == b.bands() && a.frames() == b.frames(),
          ErrorCode::kShapeMismatch, std::string(what) + ": shape mismatch");
}

}  // namespace spimpute
