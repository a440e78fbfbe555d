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

#ifndef MSK_SRC_JOINT_TREE_HPP_
#define MSK_SRC_JOINT_TREE_HPP_

#include <string>
#include <vector>

#include "msk/model.hpp"
#include "msk/types.hpp"

namespace msk::detail {

// Multi-DOF joints are expanded into chains of single-DOF nodes separated by
// massless phantom bodies, so kinematics and dynamics only ever handle fixed,
// revolute, and prismatic primitives.
enum class NodeKind { kFixed, kRevolute, kPrismatic };

struct TreeNode {
  int parent = -1;  // index into JointTree::nodes, -1 for world
  NodeKind kind = NodeKind::kFixed;
  Vec3 axis = Vec3::UnitZ();   // joint-frame axis (unit)
  Vec3 offset = Vec3::Zero();  // translation from parent frame to joint frame
  int dof = -1;                // global coordinate index, -1 when fixed
  int body = -1;               // public body index, -1 for phantom nodes
  double mass = 0.0;
  Vec3 com = Vec3::Zero();
  Mat3 inertia = Mat3::Zero();  // about COM, node frame
};

struct JointTree {
  std::vector<TreeNode> nodes;     // topological order (parent before child)
  std::vector<int> body_to_node;   // public body index -> node carrying it
  int dof_count = 0;
  std::vector<std::string> coordinate_names;
  std::vector<bool> rotational;    // per DOF
  // Name lookups resolved once: (node index, local point).
  std::vector<std::vector<std::pair<int, Vec3>>> muscle_paths;
  std::vector<std::pair<int, Vec3>> marker_points;
};

// Throws Error when the model is structurally unusable (unknown parents,
// cycles, multiple roots, unresolved path or marker bodies). Value
// invariants are validate_model's job.
JointTree build_tree(const Model& model);

struct NodePose {
  Mat3 R;
  Vec3 p;
  Vec3 world_axis;    // joint axis in world coordinates
  Vec3 joint_origin;  // world position the joint rotates about / slides from
};

// Poses for every node (phantoms included), nodes order.
std::vector<NodePose> node_poses(const JointTree& tree, const VecX& q);

// World positions of a muscle path at configuration q.
std::vector<Vec3> path_world_points(const JointTree& tree,
                                    const std::vector<NodePose>& poses,
                                    int muscle_index);

double path_length(const std::vector<Vec3>& pts);

VecX muscle_lengths(const JointTree& tree, const VecX& q);

// -d l / d q by central differences with the given step.
MatX moment_arms_fd(const JointTree& tree, const VecX& q, double step);

// d(world point on `node`)/dq_j for every DOF on the chain to the root;
// columns for DOFs off the chain are zero.
MatX point_jacobian(const JointTree& tree, const std::vector<NodePose>& poses,
                    int node, const Vec3& world_point);

}  // namespace msk::detail

#endif  // MSK_SRC_JOINT_TREE_HPP_
