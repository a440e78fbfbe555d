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

#include "joint_tree.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace msk::detail {

namespace {

// Deterministic orthonormal basis {u, v, w} with w = axis: u is the world
// axis least aligned with w, projected into the plane.
void plane_basis(const Vec3& axis, Vec3& u, Vec3& v) {
  const Vec3 w = axis.normalized();
  int k = 0;
  if (std::abs(w[1]) < std::abs(w[k])) k = 1;
  if (std::abs(w[2]) < std::abs(w[k])) k = 2;
  Vec3 seed = Vec3::Zero();
  seed[k] = 1.0;
  u = (seed - w * seed.dot(w)).normalized();
  v = w.cross(u);
}

TreeNode phantom(int parent, NodeKind kind, const Vec3& axis, int dof) {
  TreeNode n;
  n.parent = parent;
  n.kind = kind;
  n.axis = axis;
  n.dof = dof;
  return n;
}

}  // namespace

JointTree build_tree(const Model& model) {
  JointTree tree;
  std::unordered_map<std::string, int> body_index;
  for (size_t i = 0; i < model.bodies.size(); ++i) {
    if (!body_index.emplace(model.bodies[i].name, static_cast<int>(i)).second) {
      throw Error("duplicate body name '" + model.bodies[i].name + "'");
    }
  }

  // Topological order over public bodies (parent before child).
  const int nb = static_cast<int>(model.bodies.size());
  std::vector<int> order;
  order.reserve(nb);
  {
    std::vector<std::vector<int>> children(nb);
    std::vector<int> roots;
    for (int i = 0; i < nb; ++i) {
      const auto& b = model.bodies[i];
      if (b.parent.empty()) {
        roots.push_back(i);
      } else {
        auto it = body_index.find(b.parent);
        if (it == body_index.end()) {
          throw Error("body '" + b.name + "' references unknown parent '" +
                      b.parent + "'");
        }
        children[it->second].push_back(i);
      }
    }
    if (roots.size() != 1) {
      throw Error("model must have exactly one root body, found " +
                  std::to_string(roots.size()));
    }
    std::vector<int> stack{roots[0]};
    while (!stack.empty()) {
      int i = stack.back();
      stack.pop_back();
      order.push_back(i);
      for (auto it = children[i].rbegin(); it != children[i].rend(); ++it) {
        stack.push_back(*it);
      }
    }
    if (static_cast<int>(order.size()) != nb) {
      throw Error("body graph contains a cycle");
    }
  }

  tree.body_to_node.assign(nb, -1);

  auto add_real = [&](int body, int parent, NodeKind kind, const Vec3& axis,
                      const Vec3& offset, int dof) {
    const auto& b = model.bodies[body];
    TreeNode n;
    n.parent = parent;
    n.kind = kind;
    n.axis = axis;
    n.offset = offset;
    n.dof = dof;
    n.body = body;
    n.mass = b.mass;
    n.com = b.com_local;
    n.inertia = b.inertia_local;
    tree.nodes.push_back(n);
    tree.body_to_node[body] = static_cast<int>(tree.nodes.size()) - 1;
  };

  for (int bi : order) {
    const auto& b = model.bodies[bi];
    const int parent =
        b.parent.empty() ? -1 : tree.body_to_node[body_index[b.parent]];
    const Vec3 axis = b.joint_axis.normalized();
    const int base_dof = tree.dof_count;

    switch (b.joint_type) {
      case JointType::kFixed:
        add_real(bi, parent, NodeKind::kFixed, axis, b.offset_in_parent, -1);
        break;
      case JointType::kRevolute:
        add_real(bi, parent, NodeKind::kRevolute, axis, b.offset_in_parent,
                 base_dof);
        tree.dof_count += 1;
        tree.coordinate_names.push_back(b.name);
        tree.rotational.push_back(true);
        break;
      case JointType::kPrismatic:
        add_real(bi, parent, NodeKind::kPrismatic, axis, b.offset_in_parent,
                 base_dof);
        tree.dof_count += 1;
        tree.coordinate_names.push_back(b.name);
        tree.rotational.push_back(false);
        break;
      case JointType::kPlanar: {
        Vec3 u, v;
        plane_basis(axis, u, v);
        TreeNode t1 = phantom(parent, NodeKind::kPrismatic, u, base_dof);
        t1.offset = b.offset_in_parent;
        tree.nodes.push_back(t1);
        int p = static_cast<int>(tree.nodes.size()) - 1;
        tree.nodes.push_back(phantom(p, NodeKind::kPrismatic, v, base_dof + 1));
        p = static_cast<int>(tree.nodes.size()) - 1;
        add_real(bi, p, NodeKind::kRevolute, axis, Vec3::Zero(), base_dof + 2);
        tree.dof_count += 3;
        for (const char* s : {"_t1", "_t2", "_r"}) {
          tree.coordinate_names.push_back(b.name + s);
        }
        tree.rotational.insert(tree.rotational.end(), {false, false, true});
        break;
      }
      case JointType::kFree: {
        TreeNode tx = phantom(parent, NodeKind::kPrismatic, Vec3::UnitX(),
                              base_dof);
        tx.offset = b.offset_in_parent;
        tree.nodes.push_back(tx);
        int p = static_cast<int>(tree.nodes.size()) - 1;
        const Vec3 axes[4] = {Vec3::UnitY(), Vec3::UnitZ(), Vec3::UnitX(),
                              Vec3::UnitY()};
        const NodeKind kinds[4] = {NodeKind::kPrismatic, NodeKind::kPrismatic,
                                   NodeKind::kRevolute, NodeKind::kRevolute};
        for (int k = 0; k < 4; ++k) {
          tree.nodes.push_back(phantom(p, kinds[k], axes[k], base_dof + 1 + k));
          p = static_cast<int>(tree.nodes.size()) - 1;
        }
        add_real(bi, p, NodeKind::kRevolute, Vec3::UnitZ(), Vec3::Zero(),
                 base_dof + 5);
        tree.dof_count += 6;
        for (const char* s : {"_tx", "_ty", "_tz", "_rx", "_ry", "_rz"}) {
          tree.coordinate_names.push_back(b.name + s);
        }
        tree.rotational.insert(tree.rotational.end(),
                               {false, false, false, true, true, true});
        break;
      }
    }
  }

  tree.muscle_paths.reserve(model.muscles.size());
  for (const auto& m : model.muscles) {
    std::vector<std::pair<int, Vec3>> path;
    path.reserve(m.path.size());
    for (const auto& pp : m.path) {
      auto it = body_index.find(pp.body);
      if (it == body_index.end()) {
        throw Error("muscle '" + m.name + "' path references unknown body '" +
                    pp.body + "'");
      }
      path.emplace_back(tree.body_to_node[it->second], pp.point);
    }
    tree.muscle_paths.push_back(std::move(path));
  }
  tree.marker_points.reserve(model.markers.size());
  for (const auto& mk : model.markers) {
    auto it = body_index.find(mk.body);
    if (it == body_index.end()) {
      throw Error("marker '" + mk.name + "' references unknown body '" +
                  mk.body + "'");
    }
    tree.marker_points.emplace_back(tree.body_to_node[it->second],
                                    mk.local_offset);
  }
  return tree;
}

std::vector<NodePose> node_poses(const JointTree& tree, const VecX& q) {
  if (q.size() != tree.dof_count) {
    throw Error("coordinate vector has " + std::to_string(q.size()) +
                " entries, model has " + std::to_string(tree.dof_count) +
                " DOFs");
  }
  std::vector<NodePose> poses(tree.nodes.size());
  for (size_t i = 0; i < tree.nodes.size(); ++i) {
    const TreeNode& n = tree.nodes[i];
    Mat3 Rp = Mat3::Identity();
    Vec3 pp = Vec3::Zero();
    if (n.parent >= 0) {
      Rp = poses[n.parent].R;
      pp = poses[n.parent].p;
    }
    NodePose out;
    out.joint_origin = pp + Rp * n.offset;
    out.world_axis = Rp * n.axis;
    switch (n.kind) {
      case NodeKind::kFixed:
        out.R = Rp;
        out.p = out.joint_origin;
        break;
      case NodeKind::kRevolute:
        out.R = Rp * Eigen::AngleAxisd(q[n.dof], n.axis).toRotationMatrix();
        out.p = out.joint_origin;
        break;
      case NodeKind::kPrismatic:
        out.R = Rp;
        out.p = out.joint_origin + q[n.dof] * out.world_axis;
        break;
    }
    poses[i] = out;
  }
  return poses;
}

std::vector<Vec3> path_world_points(const JointTree& tree,
                                    const std::vector<NodePose>& poses,
                                    int muscle_index) {
  const auto& path = tree.muscle_paths[muscle_index];
  std::vector<Vec3> pts;
  pts.reserve(path.size());
  for (const auto& [node, point] : path) {
    pts.push_back(poses[node].R * point + poses[node].p);
  }
  return pts;
}

double path_length(const std::vector<Vec3>& pts) {
  double len = 0.0;
  for (size_t k = 1; k < pts.size(); ++k) len += (pts[k] - pts[k - 1]).norm();
  return len;
}

VecX muscle_lengths(const JointTree& tree, const VecX& q) {
  const auto poses = node_poses(tree, q);
  VecX lengths(tree.muscle_paths.size());
  for (size_t i = 0; i < tree.muscle_paths.size(); ++i) {
    lengths[i] = path_length(path_world_points(tree, poses, static_cast<int>(i)));
  }
  return lengths;
}

MatX moment_arms_fd(const JointTree& tree, const VecX& q, double step) {
  MatX arms(tree.dof_count, static_cast<Eigen::Index>(tree.muscle_paths.size()));
  VecX qp = q;
  for (int j = 0; j < tree.dof_count; ++j) {
    qp[j] = q[j] + step;
    const VecX lp = muscle_lengths(tree, qp);
    qp[j] = q[j] - step;
    const VecX lm = muscle_lengths(tree, qp);
    qp[j] = q[j];
    arms.row(j) = -(lp - lm).transpose() / (2.0 * step);
  }
  return arms;
}

MatX point_jacobian(const JointTree& tree, const std::vector<NodePose>& poses,
                    int node, const Vec3& world_point) {
  MatX jac = MatX::Zero(3, tree.dof_count);
  for (int i = node; i >= 0; i = tree.nodes[i].parent) {
    const TreeNode& n = tree.nodes[i];
    if (n.dof < 0) continue;
    if (n.kind == NodeKind::kRevolute) {
      jac.col(n.dof) =
          poses[i].world_axis.cross(world_point - poses[i].joint_origin);
    } else {
      jac.col(n.dof) = poses[i].world_axis;
    }
  }
  return jac;
}

}  // namespace msk::detail
