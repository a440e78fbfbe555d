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

#ifndef MSK_SYNTH_HPP_
#define MSK_SYNTH_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "msk/dynamics.hpp"
#include "msk/kinematics.hpp"
#include "msk/static_opt.hpp"

namespace msk {

struct SynthConfig {
  double duration = 5.0;     // s
  double frame_rate = 30.0;  // Hz
  std::uint64_t seed = 42;
  double amplitude = 0.4;    // knot range around the reference pose
  double knot_spacing = 0.5; // s between spline knots
  SoConfig so;
};

/// Ground-truth bundle: a band-limited random motion with analytic
/// derivatives, the markers it produces, the torques that realize it, and
/// the min-effort activations reproducing those torques. When the model
/// declares foot bodies a statically consistent GRF is included (total force
/// balances weight plus the whole-body inertial term, CoP under each foot).
struct SynthResult {
  KinematicTrajectory trajectory;
  MarkerTrajectory markers;
  TorqueTrajectory torques;
  ActivationTrajectory activations;
  SoSequenceDiagnostics so_diagnostics;
  std::optional<GrfTrajectory> grf;
};

SynthResult generate_synthetic(const Model& model, const SynthConfig& config);

/// Bodies whose name contains "foot", mapped to sides r/l by name. Empty
/// when the model has no feet; throws only on ambiguous side assignment.
std::map<std::string, std::string> detect_foot_bodies(const Model& model);

}  // namespace msk

#endif  // MSK_SYNTH_HPP_
