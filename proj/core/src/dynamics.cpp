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

#include "msk/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "joint_tree.hpp"

namespace msk {

namespace {

struct BodyKinematics {
  Vec3 omega = Vec3::Zero();  // angular velocity
  Vec3 alpha = Vec3::Zero();  // angular acceleration
  Vec3 v = Vec3::Zero();      // velocity of the node origin
  Vec3 a = Vec3::Zero();      // acceleration of the node origin
};

int resolve_body(const Model& model, const std::string& name) {
  for (size_t i = 0; i < model.bodies.size(); ++i) {
    if (model.bodies[i].name == name) return static_cast<int>(i);
  }
  throw Error("unknown body '" + name + "'");
}

// World-frame recursive Newton-Euler over the internal tree. Gravity enters
// as a fictitious base acceleration of -gravity, so one pass covers both
// inertial and gravitational terms.
VecX rnea(const detail::JointTree& tree, const VecX& q,
          const VecX& qdot, const VecX& qddot,
          const std::vector<std::pair<int, ExternalWrench>>& external,
          const Vec3& gravity) {
  if (qdot.size() != tree.dof_count || qddot.size() != tree.dof_count) {
    throw Error("state dimension does not match model DOF count");
  }
  const auto poses = detail::node_poses(tree, q);
  const int n = static_cast<int>(tree.nodes.size());

  // Outward pass: propagate velocities and accelerations.
  std::vector<BodyKinematics> kin(n);
  for (int i = 0; i < n; ++i) {
    const auto& node = tree.nodes[i];
    BodyKinematics parent;
    Vec3 parent_origin = Vec3::Zero();
    if (node.parent >= 0) {
      parent = kin[node.parent];
      parent_origin = poses[node.parent].p;
    } else {
      parent.a = -gravity;
    }

    const Vec3 jo = poses[i].joint_origin;
    const Vec3 r = jo - parent_origin;
    const Vec3 axis = poses[i].world_axis;
    // Joint origin as a material point of the parent.
    const Vec3 v_jo = parent.v + parent.omega.cross(r);
    const Vec3 a_jo = parent.a + parent.alpha.cross(r) +
                      parent.omega.cross(parent.omega.cross(r));

    BodyKinematics out;
    switch (node.kind) {
      case detail::NodeKind::kFixed:
        out.omega = parent.omega;
        out.alpha = parent.alpha;
        out.v = v_jo;
        out.a = a_jo;
        break;
      case detail::NodeKind::kRevolute: {
        const double qd = qdot[node.dof];
        const double qdd = qddot[node.dof];
        out.omega = parent.omega + axis * qd;
        out.alpha = parent.alpha + axis * qdd + parent.omega.cross(axis * qd);
        out.v = v_jo;
        out.a = a_jo;
        break;
      }
      case detail::NodeKind::kPrismatic: {
        const double qv = q[node.dof];
        const double qd = qdot[node.dof];
        const double qdd = qddot[node.dof];
        out.omega = parent.omega;
        out.alpha = parent.alpha;
        out.v = v_jo + axis * qd + qv * parent.omega.cross(axis);
        out.a = a_jo + axis * qdd + 2.0 * qd * parent.omega.cross(axis) +
                qv * (parent.alpha.cross(axis) +
                      parent.omega.cross(parent.omega.cross(axis)));
        break;
      }
    }
    kin[i] = out;
  }

  // Inertial wrench per node, then accumulate inward.
  std::vector<Vec3> force(n, Vec3::Zero());
  std::vector<Vec3> moment(n, Vec3::Zero());  // about each node origin
  for (int i = 0; i < n; ++i) {
    const auto& node = tree.nodes[i];
    if (node.mass == 0.0 && node.inertia.isZero(0.0)) continue;
    const Vec3 com_w = poses[i].R * node.com;
    const Vec3 a_com = kin[i].a + kin[i].alpha.cross(com_w) +
                       kin[i].omega.cross(kin[i].omega.cross(com_w));
    const Mat3 inertia_w = poses[i].R * node.inertia * poses[i].R.transpose();
    const Vec3 f = node.mass * a_com;
    const Vec3 nm = inertia_w * kin[i].alpha +
                    kin[i].omega.cross(inertia_w * kin[i].omega);
    force[i] += f;
    moment[i] += nm + com_w.cross(f);
  }
  for (const auto& [node_index, wrench] : external) {
    force[node_index] -= wrench.force;
    moment[node_index] -= wrench.moment +
                          (wrench.point - poses[node_index].p).cross(wrench.force);
  }

  VecX tau = VecX::Zero(tree.dof_count);
  for (int i = n - 1; i >= 0; --i) {
    const auto& node = tree.nodes[i];
    if (node.dof >= 0) {
      tau[node.dof] = node.kind == detail::NodeKind::kRevolute
                          ? poses[i].world_axis.dot(moment[i])
                          : poses[i].world_axis.dot(force[i]);
    }
    if (node.parent >= 0) {
      force[node.parent] += force[i];
      moment[node.parent] +=
          moment[i] + (poses[i].p - poses[node.parent].p).cross(force[i]);
    }
  }
  return tau;
}

std::vector<std::pair<int, ExternalWrench>> resolve_wrenches(
    const detail::JointTree& tree, const Model& model,
    const std::vector<ExternalWrench>& external) {
  std::vector<std::pair<int, ExternalWrench>> out;
  out.reserve(external.size());
  for (const auto& w : external) {
    out.emplace_back(tree.body_to_node[resolve_body(model, w.body)], w);
  }
  return out;
}

}  // namespace

VecX grf_to_generalized(const Model& model, const VecX& q,
                        const ExternalWrench& wrench) {
  const auto tree = detail::build_tree(model);
  const auto poses = detail::node_poses(tree, q);
  const int node = tree.body_to_node[resolve_body(model, wrench.body)];

  VecX gen = VecX::Zero(tree.dof_count);
  for (int i = node; i >= 0; i = tree.nodes[i].parent) {
    const auto& n = tree.nodes[i];
    if (n.dof < 0) continue;
    if (n.kind == detail::NodeKind::kRevolute) {
      gen[n.dof] = poses[i].world_axis.dot(
          (wrench.point - poses[i].joint_origin).cross(wrench.force) +
          wrench.moment);
    } else {
      gen[n.dof] = poses[i].world_axis.dot(wrench.force);
    }
  }
  return gen;
}

VecX inverse_dynamics(const Model& model, const VecX& q, const VecX& qdot,
                      const VecX& qddot,
                      const std::vector<ExternalWrench>& external) {
  const auto tree = detail::build_tree(model);
  return rnea(tree, q, qdot, qddot, resolve_wrenches(tree, model, external),
              model.gravity);
}

MatX mass_matrix(const Model& model, const VecX& q) {
  const auto tree = detail::build_tree(model);
  const int dofs = tree.dof_count;
  const VecX zero = VecX::Zero(dofs);
  const VecX bias = rnea(tree, q, zero, zero, {}, Vec3::Zero());
  MatX mass(dofs, dofs);
  VecX unit = VecX::Zero(dofs);
  for (int j = 0; j < dofs; ++j) {
    unit[j] = 1.0;
    mass.col(j) = rnea(tree, q, zero, unit, {}, Vec3::Zero()) - bias;
    unit[j] = 0.0;
  }
  return mass;
}

VecX forward_dynamics(const Model& model, const VecX& q, const VecX& qdot,
                      const VecX& tau,
                      const std::vector<ExternalWrench>& external) {
  const VecX bias =
      inverse_dynamics(model, q, qdot, VecX::Zero(q.size()), external);
  const MatX mass = mass_matrix(model, q);
  Eigen::LLT<MatX> llt(mass);
  if (llt.info() != Eigen::Success) {
    throw Error("mass matrix is not positive definite");
  }
  return llt.solve(tau - bias);
}

GrfTrajectory resample_grf(const GrfTrajectory& grf, const VecX& times,
                           double cop_force_threshold) {
  if (grf.times.size() == 0) throw Error("GRF trajectory is empty");
  GrfTrajectory out;
  out.times = times;
  for (const auto& side : grf.sides) {
    GrfSide rs;
    rs.side = side.side;
    rs.applied_body = side.applied_body;
    const int t_out = static_cast<int>(times.size());
    rs.force.resize(t_out, 3);
    rs.cop.resize(t_out, 3);
    rs.moment.resize(t_out, 3);

    for (int t = 0; t < t_out; ++t) {
      const double tt = times[t];
      int hi = 0;
      while (hi < grf.times.size() && grf.times[hi] < tt - 1e-9) ++hi;
      if (hi >= grf.times.size()) hi = static_cast<int>(grf.times.size()) - 1;
      if (std::abs(grf.times[hi] - tt) <= 1e-9 || hi == 0) {
        rs.force.row(t) = side.force.row(hi);
        rs.cop.row(t) = side.cop.row(hi);
        rs.moment.row(t) = side.moment.row(hi);
        continue;
      }
      const int lo = hi - 1;
      const double w =
          (tt - grf.times[lo]) / (grf.times[hi] - grf.times[lo]);
      rs.force.row(t) = (1.0 - w) * side.force.row(lo) + w * side.force.row(hi);
      rs.moment.row(t) =
          (1.0 - w) * side.moment.row(lo) + w * side.moment.row(hi);
      const bool loaded = side.force.row(lo).norm() > cop_force_threshold &&
                          side.force.row(hi).norm() > cop_force_threshold;
      // CoP is meaningless near zero load: hold the previous sample instead.
      rs.cop.row(t) =
          loaded ? ((1.0 - w) * side.cop.row(lo) + w * side.cop.row(hi)).eval()
                 : side.cop.row(lo).eval();
    }
    out.sides.push_back(std::move(rs));
  }
  return out;
}

std::vector<ExternalWrench> grf_wrenches_at(const GrfTrajectory& grf, int t) {
  std::vector<ExternalWrench> out;
  out.reserve(grf.sides.size());
  for (const auto& side : grf.sides) {
    ExternalWrench w;
    w.body = side.applied_body;
    w.force = side.force.row(t).transpose();
    w.point = side.cop.row(t).transpose();
    w.moment = side.moment.row(t).transpose();
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace msk
