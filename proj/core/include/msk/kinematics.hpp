// Copyright 2026 The mskpipe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MSK_KINEMATICS_HPP_
#define MSK_KINEMATICS_HPP_

#include <string>
#include <utility>
#include <vector>

#include "msk/model.hpp"
#include "msk/types.hpp"

namespace msk {

/// Time-stamped generalized coordinates with derived velocities and
/// accelerations. Rows are frames, columns DOFs.
struct KinematicTrajectory {
  VecX times;
  MatX q;
  MatX qdot;
  MatX qddot;
  double frame_rate = 0.0;  // Hz
};

struct MarkerTrajectory {
  VecX times;
  std::vector<std::string> names;
  std::vector<MatX> positions;  // per frame: M x 3, meters
  ArrXb validity;               // T x M, false where occluded
};

struct IkFrameResult {
  double rms_marker_error = 0.0;  // m, over valid markers at the solution
  double max_marker_error = 0.0;  // m
  int iterations = 0;
  bool converged = false;
  bool has_valid_markers = true;
};

struct IkDiagnostics {
  std::vector<IkFrameResult> frames;
  double sequence_max_marker_error = 0.0;

  bool all_frames_usable() const {
    for (const auto& f : frames) {
      if (!f.has_valid_markers) return false;
    }
    return true;
  }
};

struct IkSettings {
  double initial_lambda = 1e-3;   // Levenberg damping
  int max_iterations = 100;
  double step_tolerance = 1e-10;
  double objective_tolerance = 1e-14;
};

/// World pose of every body segment at configuration q (model body order).
std::vector<Pose> forward_kinematics(const Model& model, const VecX& q);

/// Marker world positions, M x 3, model marker order.
MatX place_markers(const Model& model, const VecX& q);

/// Per-frame damped Gauss-Newton fit of the weighted marker objective,
/// solved in time order with warm starts. Occluded markers are excluded from
/// the residual, not zero-weighted. qdot/qddot come from differentiate().
std::pair<KinematicTrajectory, IkDiagnostics> inverse_kinematics(
    const Model& model, const MarkerTrajectory& markers, const VecX& q0,
    const IkSettings& settings = {});

/// Three-point first and second derivatives: central in the interior,
/// one-sided second-order stencils at the endpoints. Needs >= 3 frames.
std::pair<MatX, MatX> differentiate(const VecX& times, const MatX& q);

}  // namespace msk

#endif  // MSK_KINEMATICS_HPP_
