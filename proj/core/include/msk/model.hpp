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

#ifndef MSK_MODEL_HPP_
#define MSK_MODEL_HPP_

#include <map>
#include <string>
#include <vector>

#include "msk/types.hpp"

namespace msk {

/// Joint connecting a segment to its parent (to the world for the root).
/// `fixed` welds the segment; `planar` is 2 translations in the plane
/// orthogonal to the axis plus a rotation about it; `free` is 3 translations
/// followed by intrinsic XYZ rotations.
enum class JointType { kFixed, kRevolute, kPrismatic, kPlanar, kFree };

int joint_dof_count(JointType type);
std::string to_string(JointType type);
JointType joint_type_from_string(const std::string& s);

struct BodySegment {
  std::string name;
  std::string parent;  // empty for the root segment
  JointType joint_type = JointType::kRevolute;
  Vec3 joint_axis = Vec3::UnitZ();
  Vec3 offset_in_parent = Vec3::Zero();  // parent frame, meters
  double mass = 1.0;                     // kg
  Vec3 com_local = Vec3::Zero();         // meters
  Mat3 inertia_local = Mat3::Identity();  // about the COM, kg m^2
};

/// One point of a muscle's geometric path, fixed in a body frame.
struct PathPoint {
  std::string body;
  Vec3 point = Vec3::Zero();  // meters, body frame
};

struct HillMuscleParams {
  std::string name;
  double f_max = 1000.0;  // max isometric force, N
  double l_opt = 0.1;     // optimal fiber length, m
  double v_max = 10.0;    // max shortening velocity, l_opt/s
  std::vector<PathPoint> path;
  double fl_width = 0.45;  // force-length Gaussian width
  double fv_shape = 0.3;   // force-velocity slope
};

struct MarkerDef {
  std::string name;
  std::string body;
  Vec3 local_offset = Vec3::Zero();  // meters, body frame
  double weight = 1.0;
};

struct Model {
  std::vector<BodySegment> bodies;
  std::vector<HillMuscleParams> muscles;
  std::vector<MarkerDef> markers;
  Vec3 gravity = Vec3(0.0, -9.81, 0.0);
  double reserve_optimal_force = 1.0;  // reserve normalization tau_opt, N m
  VecX reference_pose;                 // DOF coordinates of the neutral pose
};

struct SubjectAnthropometry {
  double height = 1.75;  // m
  double mass = 75.0;    // kg
  std::map<std::string, Vec3> scale_overrides;  // segment name -> local factors
};

/// One invariant violation, with a path into the offending field.
struct ModelViolation {
  std::string path;     // e.g. "bodies[2].mass"
  std::string message;
};

int dof_count(const Model& model);

/// Coordinate labels in DOF order: single-DOF joints use the segment name,
/// multi-DOF joints get _t1/_t2/_r (planar) or _tx.._rz (free) suffixes.
std::vector<std::string> coordinate_names(const Model& model);

/// Indicates which DOFs are rotational (radians) as opposed to translational.
std::vector<bool> rotational_dofs(const Model& model);

/// Checks every structural invariant. Returns all violations found; an empty
/// list means the model is usable by every downstream operation.
std::vector<ModelViolation> validate_model(const Model& model);

/// Throws Error listing the violations when the model is invalid.
void require_valid(const Model& model);

/// Vertical extent of the model at its reference pose, measured along the up
/// direction (-gravity, or +Y when gravity is zero) over body origins, path
/// points, and markers. Used as the template stature for scaling.
double model_height(const Model& model);

/// Scales a template to a subject: lengths by subject_height/template_height
/// (per-segment overrides win), masses proportionally to the template masses
/// so the total equals subject.mass, inertia by mass_ratio * s^2, l_opt by
/// the mean factor of each muscle's attachment bodies. f_max is unchanged.
Model scale_model(const Model& templ, const SubjectAnthropometry& subject);

/// Muscle-tendon length per muscle: the polyline length of its path points
/// expressed in the world frame at configuration q.
VecX muscle_tendon_lengths(const Model& model, const VecX& q);

/// Tendon-excursion moment arms, DOF x N_m: R(j,i) = -d l_i / d q_j by
/// central finite differences.
MatX moment_arms(const Model& model, const VecX& q);

/// Active force-length curve, Gaussian centered at l_norm = 1.
double hill_force_length(double l_norm, double fl_width);

/// Force-velocity curve over normalized lengthening velocity, clamped to
/// [0.1, 1.5] with f_v(0) = 1.
double hill_force_velocity(double v_norm, double fv_shape);

constexpr double kHillForceVelocityMax = 1.5;

/// Rigid-tendon Hill force F = a * f_max * f_l * f_v. `l_ref` is the path
/// length that normalizes to 1 (the length at the model's reference pose);
/// the two-argument normalization defaults it to l_opt.
double muscle_force(const HillMuscleParams& params, double activation,
                    double l_mt, double v_mt, double l_ref);
double muscle_force(const HillMuscleParams& params, double activation,
                    double l_mt, double v_mt);

/// Path lengths at the model's reference pose, the per-muscle normalization
/// denominators used by the force evaluation.
VecX reference_lengths(const Model& model);

}  // namespace msk

#endif  // MSK_MODEL_HPP_
