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

#include "msk/static_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "joint_tree.hpp"

namespace msk {

namespace {

constexpr double kMomentArmStep = 1e-5;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// The frame-local QP data: tau = A a + tau_res with A = R diag(phi), where
// phi_i is the muscle force capacity at (q, qdot).
struct FrameProblem {
  MatX gain;        // A, DOF x N_m
  VecX tau;         // required generalized forces
  double c = 0.0;   // reserve_weight / tau_opt^2
  double p = 2.0;
};

void validate_config(const SoConfig& config) {
  if (config.p < 1.0) {
    throw Error("activation exponent p must be >= 1, got " +
                std::to_string(config.p));
  }
  if (!(config.reserve_weight > 0.0)) throw Error("reserve_weight must be > 0");
  if (!(config.tolerance > 0.0)) throw Error("tolerance must be > 0");
}

FrameProblem build_problem(const detail::JointTree& tree, const Model& model,
                           const VecX& ref_lengths, const VecX& q,
                           const VecX& qdot, const VecX& tau,
                           const SoConfig& config) {
  if (tau.size() != tree.dof_count || qdot.size() != tree.dof_count) {
    throw Error("state or torque dimension does not match model DOF count");
  }
  const MatX arms = detail::moment_arms_fd(tree, q, kMomentArmStep);
  const VecX lengths = detail::muscle_lengths(tree, q);
  const VecX velocities = -arms.transpose() * qdot;

  const int n_m = static_cast<int>(model.muscles.size());
  VecX phi(n_m);
  for (int i = 0; i < n_m; ++i) {
    const auto& m = model.muscles[i];
    phi[i] = m.f_max *
             hill_force_length(lengths[i] / ref_lengths[i], m.fl_width) *
             hill_force_velocity(velocities[i] / (m.v_max * m.l_opt),
                                 m.fv_shape);
  }

  FrameProblem prob;
  prob.gain = arms * phi.asDiagonal();
  prob.tau = tau;
  prob.c = config.reserve_weight /
           (model.reserve_optimal_force * model.reserve_optimal_force);
  prob.p = config.p;
  return prob;
}

double objective(const FrameProblem& prob, const VecX& a) {
  double effort = 0.0;
  for (int i = 0; i < a.size(); ++i) effort += std::pow(a[i], prob.p);
  return effort + prob.c * (prob.tau - prob.gain * a).squaredNorm();
}

VecX gradient(const FrameProblem& prob, const VecX& a) {
  VecX g(a.size());
  for (int i = 0; i < a.size(); ++i) {
    g[i] = prob.p * std::pow(a[i], prob.p - 1.0);
  }
  g.noalias() -= 2.0 * prob.c *
                 (prob.gain.transpose() * (prob.tau - prob.gain * a));
  return g;
}

VecX project(VecX a) {
  return a.cwiseMax(0.0).cwiseMin(1.0);
}

double projected_gradient_norm(const VecX& a, const VecX& g) {
  return (a - project(a - g)).lpNorm<Eigen::Infinity>();
}

// Round-off floor of the gradient evaluation; the meaningful lower bound for
// any stationarity tolerance on this problem's scaling.
double gradient_floor(const FrameProblem& prob, const VecX& a) {
  const VecX resid_mag =
      prob.tau.cwiseAbs() + prob.gain.cwiseAbs() * a.cwiseAbs();
  const VecX scale = 2.0 * prob.c *
                     (prob.gain.cwiseAbs().transpose() * resid_mag);
  double mx = prob.p;
  for (int i = 0; i < scale.size(); ++i) mx = std::max(mx, scale[i] + prob.p);
  return 8.0 * kEps * mx;
}

// One projected-Newton step on the p = 2 quadratic: solve the free-variable
// system at the current binding set and backtrack along the projection arc.
bool polish_step(const FrameProblem& prob, const MatX& hessian, VecX& a,
                 double& f) {
  const VecX g = gradient(prob, a);
  std::vector<int> free_set;
  for (int i = 0; i < a.size(); ++i) {
    const bool at_lo = a[i] <= 1e-14 && g[i] > 0.0;
    const bool at_hi = a[i] >= 1.0 - 1e-14 && g[i] < 0.0;
    if (!at_lo && !at_hi) free_set.push_back(i);
  }
  if (free_set.empty()) return false;

  const int nf = static_cast<int>(free_set.size());
  MatX hf(nf, nf);
  VecX gf(nf);
  for (int r = 0; r < nf; ++r) {
    gf[r] = g[free_set[r]];
    for (int c = 0; c < nf; ++c) hf(r, c) = hessian(free_set[r], free_set[c]);
  }
  Eigen::LLT<MatX> llt(hf);
  if (llt.info() != Eigen::Success) return false;
  const VecX df = llt.solve(-gf);

  double step = 1.0;
  for (int bt = 0; bt < 30; ++bt) {
    VecX cand = a;
    for (int r = 0; r < nf; ++r) cand[free_set[r]] += step * df[r];
    cand = project(std::move(cand));
    const double fc = objective(prob, cand);
    if (fc < f) {
      a = std::move(cand);
      f = fc;
      return true;
    }
    step *= 0.5;
  }
  return false;
}

SoFrameSolution minimize(const FrameProblem& prob, const VecX& a0,
                         const SoConfig& config) {
  VecX a = project(a0);
  double f = objective(prob, a);
  VecX g = gradient(prob, a);

  MatX hessian;
  const bool quadratic = prob.p == 2.0;
  if (quadratic) {
    hessian = 2.0 * prob.c * (prob.gain.transpose() * prob.gain);
    hessian.diagonal().array() += 2.0;
  }

  // Nonmonotone line-search memory (GLL).
  std::vector<double> recent{f};
  constexpr size_t kMemory = 10;

  double step = 1.0 / std::max(1.0, g.lpNorm<Eigen::Infinity>());
  SoFrameSolution out;
  int it = 0;
  for (; it < config.max_iterations; ++it) {
    const double pg = projected_gradient_norm(a, g);
    const double tol = std::max(config.tolerance, gradient_floor(prob, a));
    if (pg <= tol) {
      out.converged = true;
      break;
    }

    if (quadratic && it % 10 == 0 && polish_step(prob, hessian, a, f)) {
      g = gradient(prob, a);
      recent.push_back(f);
      if (recent.size() > kMemory) recent.erase(recent.begin());
      continue;
    }

    const double f_ref = *std::max_element(recent.begin(), recent.end());
    VecX a_new;
    double f_new = 0.0;
    bool accepted = false;
    double alpha = step;
    for (int bt = 0; bt < 60; ++bt) {
      a_new = project(a - alpha * g);
      f_new = objective(prob, a_new);
      const double decrease = g.dot(a - a_new);
      if (f_new <= f_ref - 1e-4 * decrease) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;  // digits exhausted

    const VecX s = a_new - a;
    const VecX g_new = gradient(prob, a_new);
    const VecX y = g_new - g;
    const double sy = s.dot(y);
    step = sy > 0.0 ? std::clamp(s.squaredNorm() / sy, 1e-12, 1e12)
                    : alpha * 2.0;
    a = std::move(a_new);
    f = f_new;
    g = g_new;
    recent.push_back(f);
    if (recent.size() > kMemory) recent.erase(recent.begin());
  }

  out.iterations = it;
  out.activations = a;
  out.reserve_torques = prob.tau - prob.gain * a;
  out.objective_value = objective(prob, a);
  out.optimality_residual = projected_gradient_norm(a, gradient(prob, a));
  if (!out.converged) {
    out.converged = out.optimality_residual <=
                    std::max(config.tolerance, gradient_floor(prob, a));
  }
  // The reserves absorb the equality exactly; recompute the residual as the
  // reported diagnostic.
  out.constraint_violation =
      (prob.tau - (prob.gain * a + out.reserve_torques))
          .lpNorm<Eigen::Infinity>();
  return out;
}

}  // namespace

SoFrameSolution solve_frame(const Model& model, const VecX& q,
                            const VecX& qdot, const VecX& tau_required,
                            const SoConfig& config) {
  validate_config(config);
  const auto tree = detail::build_tree(model);
  const VecX ref = detail::muscle_lengths(tree, model.reference_pose);
  const FrameProblem prob =
      build_problem(tree, model, ref, q, qdot, tau_required, config);
  return minimize(prob, VecX::Zero(model.muscles.size()), config);
}

std::pair<ActivationTrajectory, SoSequenceDiagnostics> solve_sequence(
    const Model& model, const KinematicTrajectory& traj,
    const TorqueTrajectory& torques, const SoConfig& config, int jobs) {
  validate_config(config);
  const int frames = static_cast<int>(traj.times.size());
  if (torques.times.size() != frames) {
    throw Error("torque trajectory has " + std::to_string(torques.times.size()) +
                " frames, kinematics has " + std::to_string(frames));
  }
  for (int t = 0; t < frames; ++t) {
    if (std::abs(torques.times[t] - traj.times[t]) > 1e-6) {
      throw Error("torque and kinematic timestamps diverge at frame " +
                  std::to_string(t));
    }
  }

  const auto tree = detail::build_tree(model);
  const VecX ref = detail::muscle_lengths(tree, model.reference_pose);
  const int n_m = static_cast<int>(model.muscles.size());

  SoSequenceDiagnostics diag;
  diag.frames.resize(frames);

  const int n_jobs = std::max(1, std::min(jobs, frames == 0 ? 1 : frames));
  auto run_block = [&](int begin, int end) {
    VecX warm = VecX::Zero(n_m);
    for (int t = begin; t < end; ++t) {
      const FrameProblem prob =
          build_problem(tree, model, ref, traj.q.row(t).transpose(),
                        traj.qdot.row(t).transpose(),
                        torques.tau.row(t).transpose(), config);
      diag.frames[t] = minimize(prob, warm, config);
      if (config.warm_start) warm = diag.frames[t].activations;
    }
  };

  if (n_jobs == 1) {
    run_block(0, frames);
  } else {
    std::vector<std::thread> workers;
    workers.reserve(n_jobs);
    for (int b = 0; b < n_jobs; ++b) {
      const int begin = static_cast<int>(static_cast<long>(frames) * b / n_jobs);
      const int end =
          static_cast<int>(static_cast<long>(frames) * (b + 1) / n_jobs);
      workers.emplace_back(run_block, begin, end);
    }
    for (auto& w : workers) w.join();
  }

  ActivationTrajectory act;
  act.times = traj.times;
  act.activations.resize(frames, n_m);
  for (const auto& m : model.muscles) act.muscle_names.push_back(m.name);
  for (int t = 0; t < frames; ++t) {
    act.activations.row(t) = diag.frames[t].activations.transpose();
    diag.max_constraint_violation = std::max(
        diag.max_constraint_violation, diag.frames[t].constraint_violation);
    diag.all_converged = diag.all_converged && diag.frames[t].converged;
  }
  return {std::move(act), std::move(diag)};
}

double kkt_residual(const Model& model, const VecX& q, const VecX& qdot,
                    const VecX& tau_required, const SoFrameSolution& solution,
                    const SoConfig& config) {
  validate_config(config);
  const auto tree = detail::build_tree(model);
  const VecX ref = detail::muscle_lengths(tree, model.reference_pose);
  const FrameProblem prob =
      build_problem(tree, model, ref, q, qdot, tau_required, config);

  const VecX& a = solution.activations;
  const VecX nu = 2.0 * prob.c * solution.reserve_torques;
  VecX g(a.size());
  for (int i = 0; i < a.size(); ++i) {
    g[i] = prob.p * std::pow(a[i], prob.p - 1.0);
  }
  g.noalias() -= prob.gain.transpose() * nu;

  const double stationarity = projected_gradient_norm(a, g);
  const double primal =
      (prob.tau - (prob.gain * a + solution.reserve_torques))
          .lpNorm<Eigen::Infinity>();
  return std::max(stationarity, primal);
}

}  // namespace msk
