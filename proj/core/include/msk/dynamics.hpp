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

#ifndef MSK_DYNAMICS_HPP_
#define MSK_DYNAMICS_HPP_

#include <string>
#include <vector>

#include "msk/model.hpp"
#include "msk/types.hpp"

namespace msk {

/// External load on one body: a force applied at a world point plus a free
/// couple, all in world coordinates.
struct ExternalWrench {
  std::string body;
  Vec3 force = Vec3::Zero();   // N
  Vec3 point = Vec3::Zero();   // m, world (center of pressure)
  Vec3 moment = Vec3::Zero();  // N m, free moment
};

/// Per-foot ground reaction record across time. Forces and centers of
/// pressure are world-frame; `applied_body` names the segment loaded.
struct GrfSide {
  std::string side;          // "r" or "l"
  std::string applied_body;
  MatX force;   // T x 3
  MatX cop;     // T x 3
  MatX moment;  // T x 3, zero when absent
};

struct GrfTrajectory {
  VecX times;
  std::vector<GrfSide> sides;
};

struct TorqueTrajectory {
  VecX times;
  MatX tau;  // T x DOF
};

/// Generalized forces equivalent to the wrench, via the applied body's point
/// and orientation Jacobians.
VecX grf_to_generalized(const Model& model, const VecX& q,
                        const ExternalWrench& wrench);

/// Recursive Newton-Euler inverse dynamics over the body tree. Gravity is
/// folded into the base acceleration; external wrenches are subtracted at
/// their bodies. Returns the generalized forces realizing (q, qdot, qddot).
VecX inverse_dynamics(const Model& model, const VecX& q, const VecX& qdot,
                      const VecX& qddot,
                      const std::vector<ExternalWrench>& external = {});

/// Joint-space inertia matrix assembled column-by-column from inverse
/// dynamics with unit accelerations at zero velocity and zero gravity.
MatX mass_matrix(const Model& model, const VecX& q);

/// Solves M(q) qddot = tau - ID(q, qdot, 0, external) for qddot.
VecX forward_dynamics(const Model& model, const VecX& q, const VecX& qdot,
                      const VecX& tau,
                      const std::vector<ExternalWrench>& external = {});

/// Linear interpolation of forces and moments to the target timestamps.
/// Centers of pressure are interpolated only when the force magnitude
/// exceeds `cop_force_threshold` on both neighbors and held otherwise.
GrfTrajectory resample_grf(const GrfTrajectory& grf, const VecX& times,
                           double cop_force_threshold = 5.0);

/// Wrenches acting at frame `t` of an already-resampled GRF trajectory.
std::vector<ExternalWrench> grf_wrenches_at(const GrfTrajectory& grf, int t);

}  // namespace msk

#endif  // MSK_DYNAMICS_HPP_
