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

#include "msk/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "joint_tree.hpp"

namespace msk {

namespace {

constexpr double kAxisNormTol = 1e-9;
constexpr double kMomentArmStep = 1e-5;

std::string idx(const std::string& base, size_t i, const std::string& field) {
  std::ostringstream os;
  os << base << "[" << i << "]." << field;
  return os.str();
}

}  // namespace

int joint_dof_count(JointType type) {
  switch (type) {
    case JointType::kFixed: return 0;
    case JointType::kRevolute: return 1;
    case JointType::kPrismatic: return 1;
    case JointType::kPlanar: return 3;
    case JointType::kFree: return 6;
  }
  return 0;
}

std::string to_string(JointType type) {
  switch (type) {
    case JointType::kFixed: return "fixed";
    case JointType::kRevolute: return "revolute";
    case JointType::kPrismatic: return "prismatic";
    case JointType::kPlanar: return "planar";
    case JointType::kFree: return "free";
  }
  return "?";
}

JointType joint_type_from_string(const std::string& s) {
  if (s == "fixed") return JointType::kFixed;
  if (s == "revolute") return JointType::kRevolute;
  if (s == "prismatic") return JointType::kPrismatic;
  if (s == "planar" || s == "free-planar") return JointType::kPlanar;
  if (s == "free") return JointType::kFree;
  throw Error("unknown joint_type '" + s + "'");
}

int dof_count(const Model& model) {
  int n = 0;
  for (const auto& b : model.bodies) n += joint_dof_count(b.joint_type);
  return n;
}

std::vector<std::string> coordinate_names(const Model& model) {
  return detail::build_tree(model).coordinate_names;
}

std::vector<bool> rotational_dofs(const Model& model) {
  return detail::build_tree(model).rotational;
}

std::vector<ModelViolation> validate_model(const Model& model) {
  std::vector<ModelViolation> out;
  auto add = [&](const std::string& path, const std::string& msg) {
    out.push_back({path, msg});
  };

  std::unordered_map<std::string, size_t> body_index;
  int roots = 0;
  for (size_t i = 0; i < model.bodies.size(); ++i) {
    const auto& b = model.bodies[i];
    if (b.name.empty()) add(idx("bodies", i, "name"), "must be non-empty");
    if (!body_index.emplace(b.name, i).second) {
      add(idx("bodies", i, "name"), "duplicate body name '" + b.name + "'");
    }
    if (b.parent.empty()) ++roots;
    if (!(b.mass > 0.0)) {
      add(idx("bodies", i, "mass"), "must be > 0, got " + std::to_string(b.mass));
    }
    if (std::abs(b.joint_axis.norm() - 1.0) > kAxisNormTol) {
      add(idx("bodies", i, "joint_axis"),
          "must have unit norm within 1e-9, got norm " +
              std::to_string(b.joint_axis.norm()));
    }
    // Positive semi-definite via eigenvalues of the symmetrized matrix.
    const Mat3 sym = 0.5 * (b.inertia_local + b.inertia_local.transpose());
    if ((b.inertia_local - sym).norm() > 1e-9 * std::max(1.0, sym.norm())) {
      add(idx("bodies", i, "inertia_local"), "must be symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(sym);
    if (es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, sym.norm())) {
      add(idx("bodies", i, "inertia_local"),
          "must be positive semi-definite");
    }
  }
  if (model.bodies.empty()) {
    add("bodies", "model must declare at least one body");
  } else if (roots != 1) {
    add("bodies", "model must have exactly one root body, found " +
                      std::to_string(roots));
  }

  // Parent resolution and acyclicity by walking each body to the root.
  for (size_t i = 0; i < model.bodies.size(); ++i) {
    const auto& b = model.bodies[i];
    if (b.parent.empty()) continue;
    if (!body_index.count(b.parent)) {
      add(idx("bodies", i, "parent"), "unknown parent body '" + b.parent + "'");
      continue;
    }
    std::unordered_set<std::string> seen{b.name};
    std::string cur = b.parent;
    while (!cur.empty()) {
      if (!seen.insert(cur).second) {
        add(idx("bodies", i, "parent"),
            "cycle detected through body '" + cur + "'");
        break;
      }
      auto it = body_index.find(cur);
      if (it == body_index.end()) break;  // reported above for that body
      cur = model.bodies[it->second].parent;
    }
  }

  if (model.muscles.empty()) {
    add("muscles", "model must declare at least one muscle");
  }
  std::set<std::string> muscle_names;
  for (size_t i = 0; i < model.muscles.size(); ++i) {
    const auto& m = model.muscles[i];
    if (!muscle_names.insert(m.name).second) {
      add(idx("muscles", i, "name"), "duplicate muscle name '" + m.name + "'");
    }
    if (!(m.f_max > 0.0)) add(idx("muscles", i, "f_max"), "must be > 0");
    if (!(m.l_opt > 0.0)) add(idx("muscles", i, "l_opt"), "must be > 0");
    if (!(m.v_max > 0.0)) add(idx("muscles", i, "v_max"), "must be > 0");
    if (!(m.fl_width > 0.0)) add(idx("muscles", i, "fl_width"), "must be > 0");
    if (m.path.size() < 2) {
      add(idx("muscles", i, "path"), "needs at least 2 points");
    }
    std::set<std::string> attach_bodies;
    for (size_t k = 0; k < m.path.size(); ++k) {
      const auto& pp = m.path[k];
      if (!body_index.count(pp.body)) {
        add(idx("muscles", i, "path[" + std::to_string(k) + "].body"),
            "muscle '" + m.name + "' attaches to unknown body '" + pp.body +
                "'");
      }
      attach_bodies.insert(pp.body);
    }
    if (m.path.size() >= 2 && attach_bodies.size() < 2) {
      add(idx("muscles", i, "path"),
          "path must attach to at least 2 distinct bodies");
    }
  }

  std::set<std::string> marker_names;
  for (size_t i = 0; i < model.markers.size(); ++i) {
    const auto& mk = model.markers[i];
    if (!marker_names.insert(mk.name).second) {
      add(idx("markers", i, "name"), "duplicate marker name '" + mk.name + "'");
    }
    if (mk.weight < 0.0) add(idx("markers", i, "weight"), "must be >= 0");
    if (!body_index.count(mk.body)) {
      add(idx("markers", i, "body"),
          "marker '" + mk.name + "' references unknown body '" + mk.body + "'");
    }
  }

  if (!(model.reserve_optimal_force > 0.0)) {
    add("reserve_optimal_force", "must be > 0");
  }
  const int dofs = dof_count(model);
  if (model.reference_pose.size() != dofs) {
    add("reference_pose", "has " + std::to_string(model.reference_pose.size()) +
                              " entries, model has " + std::to_string(dofs) +
                              " DOFs");
  }
  return out;
}

void require_valid(const Model& model) {
  const auto violations = validate_model(model);
  if (violations.empty()) return;
  std::ostringstream os;
  os << "invalid model (" << violations.size() << " violations):";
  for (const auto& v : violations) os << "\n  " << v.path << ": " << v.message;
  throw Error(os.str());
}

double model_height(const Model& model) {
  const auto tree = detail::build_tree(model);
  const auto poses = detail::node_poses(tree, model.reference_pose);
  Vec3 up = Vec3::UnitY();
  if (model.gravity.norm() > 0.0) up = -model.gravity.normalized();

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  auto take = [&](const Vec3& p) {
    const double h = up.dot(p);
    lo = std::min(lo, h);
    hi = std::max(hi, h);
  };
  for (size_t i = 0; i < tree.nodes.size(); ++i) {
    if (tree.nodes[i].body >= 0) take(poses[i].p);
  }
  for (size_t i = 0; i < tree.muscle_paths.size(); ++i) {
    for (const auto& p : detail::path_world_points(tree, poses,
                                                   static_cast<int>(i))) {
      take(p);
    }
  }
  for (const auto& [node, offset] : tree.marker_points) {
    take(poses[node].R * offset + poses[node].p);
  }
  const double h = hi - lo;
  if (!(h > 0.0)) {
    throw Error("model has zero vertical extent at the reference pose; "
                "cannot derive a template height");
  }
  return h;
}

Model scale_model(const Model& templ, const SubjectAnthropometry& subject) {
  require_valid(templ);
  if (!(subject.height > 0.0)) throw Error("subject height must be > 0");
  if (!(subject.mass > 0.0)) throw Error("subject mass must be > 0");
  for (const auto& [name, s] : subject.scale_overrides) {
    if (!(s.minCoeff() > 0.0)) {
      throw Error("scale override for '" + name + "' must be positive");
    }
    bool found = false;
    for (const auto& b : templ.bodies) found |= (b.name == name);
    if (!found) throw Error("scale override references unknown body '" + name + "'");
  }

  const double uniform = subject.height / model_height(templ);
  double total_mass = 0.0;
  for (const auto& b : templ.bodies) total_mass += b.mass;
  const double mass_ratio = subject.mass / total_mass;

  auto factors = [&](const std::string& body) -> Vec3 {
    auto it = subject.scale_overrides.find(body);
    if (it != subject.scale_overrides.end()) return it->second;
    return Vec3::Constant(uniform);
  };
  auto mean_factor = [&](const std::string& body) {
    return factors(body).mean();
  };

  Model out = templ;
  for (auto& b : out.bodies) {
    const Vec3 own = factors(b.name);
    // offset_in_parent lives in the parent frame (world for the root).
    const Vec3 parent_s = b.parent.empty() ? own : factors(b.parent);
    b.offset_in_parent = b.offset_in_parent.cwiseProduct(parent_s);
    b.com_local = b.com_local.cwiseProduct(own);
    b.mass *= mass_ratio;
    const double s = own.mean();
    b.inertia_local *= mass_ratio * s * s;
  }
  for (auto& mk : out.markers) {
    mk.local_offset = mk.local_offset.cwiseProduct(factors(mk.body));
  }
  for (auto& m : out.muscles) {
    std::vector<std::string> attach;
    for (auto& pp : m.path) {
      pp.point = pp.point.cwiseProduct(factors(pp.body));
      if (std::find(attach.begin(), attach.end(), pp.body) == attach.end()) {
        attach.push_back(pp.body);
      }
    }
    double s = 0.0;
    for (const auto& body : attach) s += mean_factor(body);
    m.l_opt *= s / static_cast<double>(attach.size());
  }
  return out;
}

VecX muscle_tendon_lengths(const Model& model, const VecX& q) {
  return detail::muscle_lengths(detail::build_tree(model), q);
}

MatX moment_arms(const Model& model, const VecX& q) {
  return detail::moment_arms_fd(detail::build_tree(model), q, kMomentArmStep);
}

double hill_force_length(double l_norm, double fl_width) {
  const double d = (l_norm - 1.0) / fl_width;
  return std::exp(-d * d);
}

double hill_force_velocity(double v_norm, double fv_shape) {
  return std::clamp(1.0 + fv_shape * v_norm, 0.1, kHillForceVelocityMax);
}

double muscle_force(const HillMuscleParams& params, double activation,
                    double l_mt, double v_mt, double l_ref) {
  if (activation < 0.0 || activation > 1.0) {
    throw Error("activation " + std::to_string(activation) +
                " outside [0, 1] for muscle '" + params.name + "'");
  }
  const double l_norm = l_mt / l_ref;
  const double v_norm = v_mt / (params.v_max * params.l_opt);
  return activation * params.f_max * hill_force_length(l_norm, params.fl_width) *
         hill_force_velocity(v_norm, params.fv_shape);
}

double muscle_force(const HillMuscleParams& params, double activation,
                    double l_mt, double v_mt) {
  return muscle_force(params, activation, l_mt, v_mt, params.l_opt);
}

VecX reference_lengths(const Model& model) {
  return muscle_tendon_lengths(model, model.reference_pose);
}

}  // namespace msk
