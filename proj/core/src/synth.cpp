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

#include "msk/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <vector>

#include "joint_tree.hpp"

namespace msk {

namespace {

// Portable uniform in [-1, 1): the distribution classes are
// implementation-defined, the raw engine stream is not.
double uniform_signed(std::mt19937_64& rng) {
  return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
}

// Natural cubic spline with analytic first and second derivatives.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> knots, std::vector<double> values)
      : t_(std::move(knots)), y_(std::move(values)) {
    const size_t n = t_.size();
    m_.assign(n, 0.0);
    if (n < 3) return;
    // Tridiagonal solve for interior second derivatives (natural ends).
    std::vector<double> diag(n, 2.0), rhs(n, 0.0), upper(n, 0.0);
    for (size_t i = 1; i + 1 < n; ++i) {
      const double h0 = t_[i] - t_[i - 1];
      const double h1 = t_[i + 1] - t_[i];
      const double mu = h0 / (h0 + h1);
      upper[i] = 1.0 - mu;
      rhs[i] = 6.0 / (h0 + h1) *
               ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
      // Forward elimination against the previous row.
      const double w = mu / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    for (size_t i = n - 2; i >= 1; --i) {
      m_[i] = (rhs[i] - upper[i] * m_[i + 1]) / diag[i];
    }
  }

  void eval(double t, double& y, double& yd, double& ydd) const {
    const size_t n = t_.size();
    if (n == 1) {
      y = y_[0];
      yd = ydd = 0.0;
      return;
    }
    size_t i = std::upper_bound(t_.begin(), t_.end(), t) - t_.begin();
    i = std::clamp<size_t>(i, 1, n - 1) - 1;
    const double h = t_[i + 1] - t_[i];
    const double a = (t_[i + 1] - t) / h;
    const double b = (t - t_[i]) / h;
    y = a * y_[i] + b * y_[i + 1] +
        ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
    yd = (y_[i + 1] - y_[i]) / h +
         h / 6.0 * ((3.0 * b * b - 1.0) * m_[i + 1] - (3.0 * a * a - 1.0) * m_[i]);
    ydd = a * m_[i] + b * m_[i + 1];
  }

 private:
  std::vector<double> t_;
  std::vector<double> y_;
  std::vector<double> m_;  // second derivatives at knots
};

std::string lowercase(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

std::map<std::string, std::string> detect_foot_bodies(const Model& model) {
  std::vector<std::string> feet;
  for (const auto& b : model.bodies) {
    if (lowercase(b.name).find("foot") != std::string::npos) {
      feet.push_back(b.name);
    }
  }
  std::map<std::string, std::string> out;
  if (feet.empty()) return out;
  if (feet.size() == 1) {
    const std::string low = lowercase(feet[0]);
    const std::string side = low.find("_l") != std::string::npos ? "l" : "r";
    out[side] = feet[0];
    return out;
  }
  for (const auto& name : feet) {
    const std::string low = lowercase(name);
    const bool right = low.find("_r") != std::string::npos || low.back() == 'r';
    const bool left = low.find("_l") != std::string::npos || low.back() == 'l';
    if (right == left) {
      throw Error("cannot infer the side of foot body '" + name +
                  "'; configure grf_bodies explicitly");
    }
    const std::string side = right ? "r" : "l";
    if (out.count(side)) {
      throw Error("two foot bodies resolve to side '" + side +
                  "'; configure grf_bodies explicitly");
    }
    out[side] = name;
  }
  return out;
}

SynthResult generate_synthetic(const Model& model, const SynthConfig& config) {
  require_valid(model);
  if (!(config.duration > 0.0)) throw Error("synth duration must be > 0");
  if (!(config.frame_rate > 0.0)) throw Error("synth frame_rate must be > 0");

  const auto tree = detail::build_tree(model);
  const int dofs = tree.dof_count;
  const int frames =
      static_cast<int>(std::floor(config.duration * config.frame_rate)) + 1;

  // Seeded random knots around the reference pose, one spline per DOF.
  std::mt19937_64 rng(config.seed);
  const int knot_count =
      std::max(2, static_cast<int>(std::ceil(config.duration /
                                             config.knot_spacing)) + 1);
  std::vector<double> knot_times(knot_count);
  for (int k = 0; k < knot_count; ++k) {
    knot_times[k] = config.duration * k / (knot_count - 1);
  }
  std::vector<CubicSpline> splines;
  splines.reserve(dofs);
  for (int j = 0; j < dofs; ++j) {
    std::vector<double> values(knot_count);
    for (int k = 0; k < knot_count; ++k) {
      values[k] = model.reference_pose[j] + config.amplitude * uniform_signed(rng);
    }
    splines.emplace_back(knot_times, std::move(values));
  }

  SynthResult result;
  auto& traj = result.trajectory;
  traj.frame_rate = config.frame_rate;
  traj.times.resize(frames);
  traj.q.resize(frames, dofs);
  traj.qdot.resize(frames, dofs);
  traj.qddot.resize(frames, dofs);
  for (int t = 0; t < frames; ++t) {
    const double time = t / config.frame_rate;
    traj.times[t] = time;
    for (int j = 0; j < dofs; ++j) {
      splines[j].eval(time, traj.q(t, j), traj.qdot(t, j), traj.qddot(t, j));
    }
  }

  // Markers straight from forward kinematics (no noise).
  auto& markers = result.markers;
  markers.times = traj.times;
  for (const auto& mk : model.markers) markers.names.push_back(mk.name);
  markers.validity = ArrXb::Constant(frames, model.markers.size(), true);
  markers.positions.reserve(frames);
  for (int t = 0; t < frames; ++t) {
    const auto poses = detail::node_poses(tree, traj.q.row(t).transpose());
    MatX pos(model.markers.size(), 3);
    for (size_t k = 0; k < tree.marker_points.size(); ++k) {
      const auto& [node, offset] = tree.marker_points[k];
      pos.row(k) = (poses[node].R * offset + poses[node].p).transpose();
    }
    markers.positions.push_back(std::move(pos));
  }

  // Statically consistent GRF under any declared foot bodies.
  const auto feet = detect_foot_bodies(model);
  if (!feet.empty()) {
    double total_mass = 0.0;
    for (const auto& b : model.bodies) total_mass += b.mass;
    MatX com(frames, 3);
    for (int t = 0; t < frames; ++t) {
      const auto poses = detail::node_poses(tree, traj.q.row(t).transpose());
      Vec3 weighted = Vec3::Zero();
      for (size_t i = 0; i < tree.nodes.size(); ++i) {
        const auto& node = tree.nodes[i];
        if (node.mass == 0.0) continue;
        weighted += node.mass * (poses[i].R * node.com + poses[i].p);
      }
      com.row(t) = (weighted / total_mass).transpose();
    }
    MatX com_acc = MatX::Zero(frames, 3);
    if (frames >= 3) com_acc = differentiate(traj.times, com).second;

    const Vec3 up = model.gravity.norm() > 0.0
                        ? Vec3(-model.gravity.normalized())
                        : Vec3::UnitY();
    GrfTrajectory grf;
    grf.times = traj.times;
    const double share = 1.0 / static_cast<double>(feet.size());
    for (const auto& [side, body] : feet) {
      GrfSide gs;
      gs.side = side;
      gs.applied_body = body;
      gs.force.resize(frames, 3);
      gs.cop.resize(frames, 3);
      gs.moment = MatX::Zero(frames, 3);
      int body_index = 0;
      for (size_t i = 0; i < model.bodies.size(); ++i) {
        if (model.bodies[i].name == body) body_index = static_cast<int>(i);
      }
      const int node = tree.body_to_node[body_index];
      for (int t = 0; t < frames; ++t) {
        const Vec3 support =
            total_mass * (com_acc.row(t).transpose() - model.gravity);
        gs.force.row(t) = (share * support).transpose();
        const auto poses = detail::node_poses(tree, traj.q.row(t).transpose());
        const Vec3 foot = poses[node].p;
        gs.cop.row(t) = (foot - up * up.dot(foot)).transpose();
      }
      grf.sides.push_back(std::move(gs));
    }
    result.grf = std::move(grf);
  }

  // Torques realizing the motion under these loads, then the min-effort
  // activations that reproduce them.
  auto& torques = result.torques;
  torques.times = traj.times;
  torques.tau.resize(frames, dofs);
  for (int t = 0; t < frames; ++t) {
    std::vector<ExternalWrench> wrenches;
    if (result.grf) wrenches = grf_wrenches_at(*result.grf, t);
    torques.tau.row(t) =
        inverse_dynamics(model, traj.q.row(t).transpose(),
                         traj.qdot.row(t).transpose(),
                         traj.qddot.row(t).transpose(), wrenches)
            .transpose();
  }

  std::tie(result.activations, result.so_diagnostics) =
      solve_sequence(model, traj, torques, config.so, /*jobs=*/1);
  return result;
}

}  // namespace msk
