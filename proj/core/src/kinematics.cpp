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

#include "msk/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "joint_tree.hpp"

namespace msk {

std::vector<Pose> forward_kinematics(const Model& model, const VecX& q) {
  const auto tree = detail::build_tree(model);
  const auto poses = detail::node_poses(tree, q);
  std::vector<Pose> out(model.bodies.size());
  for (size_t i = 0; i < model.bodies.size(); ++i) {
    const auto& np = poses[tree.body_to_node[i]];
    out[i] = Pose{np.R, np.p};
  }
  return out;
}

MatX place_markers(const Model& model, const VecX& q) {
  const auto tree = detail::build_tree(model);
  const auto poses = detail::node_poses(tree, q);
  MatX out(model.markers.size(), 3);
  for (size_t k = 0; k < tree.marker_points.size(); ++k) {
    const auto& [node, offset] = tree.marker_points[k];
    out.row(k) = (poses[node].R * offset + poses[node].p).transpose();
  }
  return out;
}

namespace {

struct FrameObservation {
  std::vector<int> marker_index;  // model marker indices with valid data
  std::vector<Vec3> observed;
  std::vector<double> weight;
};

double weighted_objective(const detail::JointTree& tree,
                          const FrameObservation& obs, const VecX& q) {
  const auto poses = detail::node_poses(tree, q);
  double f = 0.0;
  for (size_t k = 0; k < obs.marker_index.size(); ++k) {
    const auto& [node, offset] = tree.marker_points[obs.marker_index[k]];
    const Vec3 m = poses[node].R * offset + poses[node].p;
    f += obs.weight[k] * (m - obs.observed[k]).squaredNorm();
  }
  return f;
}

// One damped Gauss-Newton solve; returns the solution in-place.
IkFrameResult solve_frame(const detail::JointTree& tree,
                          const FrameObservation& obs, VecX& q,
                          const IkSettings& settings) {
  IkFrameResult result;
  const int dofs = tree.dof_count;
  double lambda = settings.initial_lambda;
  double f = weighted_objective(tree, obs, q);

  int it = 0;
  for (; it < settings.max_iterations; ++it) {
    const auto poses = detail::node_poses(tree, q);
    MatX jtj = MatX::Zero(dofs, dofs);
    VecX jtr = VecX::Zero(dofs);
    for (size_t k = 0; k < obs.marker_index.size(); ++k) {
      const auto& [node, offset] = tree.marker_points[obs.marker_index[k]];
      const Vec3 m = poses[node].R * offset + poses[node].p;
      const MatX jac = detail::point_jacobian(tree, poses, node, m);
      const Vec3 r = m - obs.observed[k];
      jtj.noalias() += obs.weight[k] * jac.transpose() * jac;
      jtr.noalias() += obs.weight[k] * jac.transpose() * r;
    }

    bool accepted = false;
    for (int damp = 0; damp < 60; ++damp) {
      const MatX lhs = jtj + lambda * MatX::Identity(dofs, dofs);
      const VecX step = lhs.ldlt().solve(-jtr);
      const VecX q_new = q + step;
      const double f_new = weighted_objective(tree, obs, q_new);
      if (f_new <= f) {
        const double decrease = f - f_new;
        q = q_new;
        f = f_new;
        lambda = std::max(lambda * 0.1, 1e-14);
        accepted = true;
        if (step.norm() < settings.step_tolerance ||
            decrease < settings.objective_tolerance) {
          result.converged = true;
        }
        break;
      }
      lambda *= 10.0;
    }
    if (result.converged || !accepted) {
      if (!accepted) result.converged = true;  // stationary: no step improves
      ++it;
      break;
    }
  }
  result.iterations = it;

  const auto poses = detail::node_poses(tree, q);
  double sum_sq = 0.0;
  double max_err = 0.0;
  for (size_t k = 0; k < obs.marker_index.size(); ++k) {
    const auto& [node, offset] = tree.marker_points[obs.marker_index[k]];
    const double err =
        (poses[node].R * offset + poses[node].p - obs.observed[k]).norm();
    sum_sq += err * err;
    max_err = std::max(max_err, err);
  }
  result.rms_marker_error =
      std::sqrt(sum_sq / static_cast<double>(obs.marker_index.size()));
  result.max_marker_error = max_err;
  return result;
}

}  // namespace

std::pair<KinematicTrajectory, IkDiagnostics> inverse_kinematics(
    const Model& model, const MarkerTrajectory& markers, const VecX& q0,
    const IkSettings& settings) {
  const auto tree = detail::build_tree(model);
  if (q0.size() != tree.dof_count) {
    throw Error("initial guess has " + std::to_string(q0.size()) +
                " entries, model has " + std::to_string(tree.dof_count) +
                " DOFs");
  }

  // Observed marker columns resolved against model marker names; a subset of
  // the model's markers is allowed, unknown observed names are an error.
  std::unordered_map<std::string, int> model_marker;
  for (size_t i = 0; i < model.markers.size(); ++i) {
    model_marker[model.markers[i].name] = static_cast<int>(i);
  }
  std::vector<int> column_to_model(markers.names.size());
  for (size_t c = 0; c < markers.names.size(); ++c) {
    auto it = model_marker.find(markers.names[c]);
    if (it == model_marker.end()) {
      throw Error("observed marker '" + markers.names[c] +
                  "' does not exist in the model");
    }
    column_to_model[c] = it->second;
  }

  const int frames = static_cast<int>(markers.times.size());
  KinematicTrajectory traj;
  traj.times = markers.times;
  traj.q = MatX::Zero(frames, tree.dof_count);
  IkDiagnostics diag;
  diag.frames.resize(frames);

  VecX q = q0;
  for (int t = 0; t < frames; ++t) {
    FrameObservation obs;
    for (size_t c = 0; c < markers.names.size(); ++c) {
      if (!markers.validity(t, static_cast<Eigen::Index>(c))) continue;
      obs.marker_index.push_back(column_to_model[c]);
      obs.observed.push_back(markers.positions[t].row(c).transpose());
      obs.weight.push_back(model.markers[column_to_model[c]].weight);
    }
    if (obs.marker_index.empty()) {
      IkFrameResult bad;
      bad.has_valid_markers = false;
      diag.frames[t] = bad;
      traj.q.row(t) = q.transpose();  // hold the previous solution
      continue;
    }
    diag.frames[t] = solve_frame(tree, obs, q, settings);
    traj.q.row(t) = q.transpose();
  }

  double seq_max = 0.0;
  for (const auto& f : diag.frames) {
    if (f.has_valid_markers) seq_max = std::max(seq_max, f.max_marker_error);
  }
  diag.sequence_max_marker_error = seq_max;

  if (frames >= 2) {
    traj.frame_rate = static_cast<double>(frames - 1) /
                      (markers.times[frames - 1] - markers.times[0]);
  }
  if (frames >= 3) {
    std::tie(traj.qdot, traj.qddot) = differentiate(traj.times, traj.q);
  } else {
    traj.qdot = MatX::Zero(frames, tree.dof_count);
    traj.qddot = MatX::Zero(frames, tree.dof_count);
  }
  return {traj, diag};
}

namespace {

// Derivative weights of the quadratic through (t0,t1,t2) evaluated at te.
void three_point_weights(double t0, double t1, double t2, double te,
                         double& w0, double& w1, double& w2) {
  w0 = (2.0 * te - t1 - t2) / ((t0 - t1) * (t0 - t2));
  w1 = (2.0 * te - t0 - t2) / ((t1 - t0) * (t1 - t2));
  w2 = (2.0 * te - t0 - t1) / ((t2 - t0) * (t2 - t1));
}

MatX first_derivative(const VecX& times, const MatX& y) {
  const int n = static_cast<int>(times.size());
  MatX dy(n, y.cols());
  double w0, w1, w2;
  for (int i = 0; i < n; ++i) {
    const int base = std::clamp(i - 1, 0, n - 3);
    three_point_weights(times[base], times[base + 1], times[base + 2],
                        times[i], w0, w1, w2);
    dy.row(i) = w0 * y.row(base) + w1 * y.row(base + 1) + w2 * y.row(base + 2);
  }
  return dy;
}

}  // namespace

std::pair<MatX, MatX> differentiate(const VecX& times, const MatX& q) {
  if (times.size() < 3) {
    throw Error("differentiate needs at least 3 frames, got " +
                std::to_string(times.size()));
  }
  if (q.rows() != times.size()) {
    throw Error("coordinate row count does not match times");
  }
  for (int i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) {
      throw Error("times must be strictly increasing (violated at frame " +
                  std::to_string(i) + ")");
    }
  }
  MatX qdot = first_derivative(times, q);
  MatX qddot = first_derivative(times, qdot);
  return {std::move(qdot), std::move(qddot)};
}

}  // namespace msk
