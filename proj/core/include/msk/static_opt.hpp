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

#ifndef MSK_STATIC_OPT_HPP_
#define MSK_STATIC_OPT_HPP_

#include <string>
#include <utility>
#include <vector>

#include "msk/dynamics.hpp"
#include "msk/kinematics.hpp"
#include "msk/model.hpp"
#include "msk/types.hpp"

namespace msk {

struct SoConfig {
  double p = 2.0;                 // activation exponent
  double reserve_weight = 1000.0; // w_res
  int max_iterations = 20000;
  double tolerance = 1e-12;       // KKT / projected-gradient tolerance
  bool warm_start = true;         // chain frames within a block
};

/// Effort-minimizing recruitment for one frame:
///   min  sum_i a_i^p + w_res sum_j (tau_res_j / tau_opt)^2
///   s.t. tau = R(q) F(a, q, qdot) + tau_res,  0 <= a <= 1.
/// With the rigid-tendon model F is linear in a, so tau_res is eliminated
/// exactly and the equality holds by construction; constraint_violation
/// reports the recomputed residual as a solver-quality diagnostic.
struct SoFrameSolution {
  VecX activations;      // in [0, 1]
  VecX reserve_torques;  // N m
  double constraint_violation = 0.0;  // max |tau_required - tau_achieved|
  double objective_value = 0.0;
  bool converged = false;
  int iterations = 0;
  double optimality_residual = 0.0;  // projected-gradient norm at exit
};

struct ActivationTrajectory {
  VecX times;
  MatX activations;  // T x N_m
  std::vector<std::string> muscle_names;
};

struct SoSequenceDiagnostics {
  std::vector<SoFrameSolution> frames;
  double max_constraint_violation = 0.0;
  bool all_converged = true;
};

SoFrameSolution solve_frame(const Model& model, const VecX& q,
                            const VecX& qdot, const VecX& tau_required,
                            const SoConfig& config);

/// Solves every frame independently. Frames are chunked into `jobs`
/// contiguous blocks; warm starting chains solutions within a block only, so
/// outputs are deterministic for a fixed job count. Per-frame failures are
/// flagged in the diagnostics, never thrown.
std::pair<ActivationTrajectory, SoSequenceDiagnostics> solve_sequence(
    const Model& model, const KinematicTrajectory& traj,
    const TorqueTrajectory& torques, const SoConfig& config, int jobs = 1);

/// Independent optimality check: max of the stationarity (projected
/// gradient with the multiplier implied by the reserves) and primal
/// feasibility residuals. Zero at an exact optimum.
double kkt_residual(const Model& model, const VecX& q, const VecX& qdot,
                    const VecX& tau_required, const SoFrameSolution& solution,
                    const SoConfig& config);

}  // namespace msk

#endif  // MSK_STATIC_OPT_HPP_
