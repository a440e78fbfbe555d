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

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "msk/pipeline.hpp"

namespace {

namespace fs = std::filesystem;

int to_exit(msk::ExitCode code) { return static_cast<int>(code); }

void export_long_next_to(const msk::TimeSeriesTable& table,
                         const std::string& sto_path) {
  const std::string long_path =
      fs::path(sto_path).replace_extension(".long.tsv").string();
  msk::write_long_format(table, long_path);
  std::cout << "wrote " << long_path << "\n";
}

std::map<std::string, std::string> parse_side_map(
    const std::vector<std::string>& entries) {
  std::map<std::string, std::string> out;
  for (const auto& e : entries) {
    const auto eq = e.find('=');
    if (eq == std::string::npos) {
      throw msk::ConfigError("--grf-body expects side=body, got '" + e + "'");
    }
    out[e.substr(0, eq)] = e.substr(eq + 1);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"msk: musculoskeletal motion-to-muscle pipeline"};
  app.require_subcommand(1);

  // scale
  auto* scale = app.add_subcommand("scale", "scale a template model to a subject");
  std::string scale_model_path, scale_output;
  double scale_height = 0.0, scale_mass = 0.0;
  scale->add_option("--model", scale_model_path, "template model JSON")->required();
  scale->add_option("--height", scale_height, "subject height, m")->required();
  scale->add_option("--mass", scale_mass, "subject mass, kg")->required();
  scale->add_option("--output", scale_output, "scaled model JSON")->required();

  // ik
  auto* ik = app.add_subcommand("ik", "marker-based inverse kinematics");
  std::string ik_model, ik_markers, ik_output, ik_diag;
  double ik_rate = 0.0;
  bool ik_long = false;
  ik->add_option("--model", ik_model, "model JSON")->required();
  ik->add_option("--markers", ik_markers, "TRC marker file")->required();
  ik->add_option("--output", ik_output, "coordinate .sto output")->required();
  ik->add_option("--diagnostics", ik_diag, "IK diagnostics JSON output");
  ik->add_option("--frame-rate", ik_rate, "re-stamp frames at this rate, Hz");
  ik->add_flag("--export-long", ik_long, "also write a long-format .tsv");

  // id
  auto* id = app.add_subcommand("id", "inverse dynamics");
  std::string id_model, id_coords, id_grf, id_output;
  std::vector<std::string> id_grf_bodies;
  bool id_long = false;
  id->add_option("--model", id_model, "model JSON")->required();
  id->add_option("--coordinates", id_coords, "coordinate .sto")->required();
  id->add_option("--grf", id_grf, "GRF .sto (optional)");
  id->add_option("--grf-body", id_grf_bodies,
                 "side=body mapping, e.g. r=foot_r (repeatable)");
  id->add_option("--output", id_output, "torque .sto output")->required();
  id->add_flag("--export-long", id_long, "also write a long-format .tsv");

  // so
  auto* so = app.add_subcommand("so", "static optimization");
  std::string so_model, so_coords, so_torques, so_output, so_diag;
  msk::SoConfig so_config;
  int so_jobs = 1;
  bool so_long = false;
  so->add_option("--model", so_model, "model JSON")->required();
  so->add_option("--coordinates", so_coords, "coordinate .sto")->required();
  so->add_option("--torques", so_torques, "torque .sto")->required();
  so->add_option("--output", so_output, "activation .sto output")->required();
  so->add_option("--diagnostics", so_diag, "SO diagnostics JSON output");
  so->add_option("--p", so_config.p, "activation exponent");
  so->add_option("--reserve-weight", so_config.reserve_weight,
                 "reserve torque penalty");
  so->add_option("--tolerance", so_config.tolerance, "KKT tolerance");
  so->add_option("--max-iterations", so_config.max_iterations,
                 "solver iteration cap");
  so->add_option("--jobs", so_jobs, "parallel frame blocks");
  so->add_flag("--export-long", so_long, "also write a long-format .tsv");

  // smooth
  auto* smooth = app.add_subcommand("smooth", "Savitzky-Golay smoothing");
  std::string smooth_input, smooth_output;
  msk::SmoothingConfig smooth_config;
  bool smooth_long = false;
  smooth->add_option("--input", smooth_input, "activation .sto")->required();
  smooth->add_option("--output", smooth_output, "smoothed .sto")->required();
  smooth->add_option("--window", smooth_config.window, "odd window length");
  smooth->add_option("--poly-order", smooth_config.poly_order,
                     "polynomial order");
  smooth->add_flag("--export-long", smooth_long, "also write a long-format .tsv");

  // filter
  auto* filter = app.add_subcommand("filter", "sequence acceptance decision");
  std::string filter_ik, filter_so, filter_output;
  msk::AcceptanceThresholds thresholds;
  filter->add_option("--ik-diagnostics", filter_ik, "IK diagnostics JSON");
  filter->add_option("--so-diagnostics", filter_so, "SO diagnostics JSON")
      ->required();
  filter->add_option("--max-marker-error", thresholds.max_marker_error,
                     "marker error threshold, m");
  filter->add_option("--max-constraint-violation",
                     thresholds.max_constraint_violation,
                     "constraint violation threshold, N m");
  filter->add_option("--output", filter_output, "acceptance JSON output");

  // metrics
  auto* metrics = app.add_subcommand("metrics", "masked evaluation metrics");
  msk::MetricsRequest metrics_request;
  std::string metrics_output;
  metrics->add_option("--pred", metrics_request.pred_path, "predicted .sto")
      ->required();
  metrics->add_option("--gt", metrics_request.gt_path, "ground-truth .sto")
      ->required();
  metrics->add_option("--mask", metrics_request.mask_path, "0/1 mask .sto");
  metrics->add_flag("--per-muscle", metrics_request.per_muscle,
                    "per-channel breakdown rows");
  metrics->add_option("--output", metrics_output, "report path (default stdout)");

  // synth
  auto* synth = app.add_subcommand("synth", "synthetic ground-truth generator");
  std::string synth_model, synth_output;
  msk::SynthConfig synth_config;
  synth->add_option("--model", synth_model, "model JSON")->required();
  synth->add_option("--duration", synth_config.duration, "seconds")->required();
  synth->add_option("--frame-rate", synth_config.frame_rate, "Hz");
  synth->add_option("--seed", synth_config.seed, "RNG seed");
  synth->add_option("--amplitude", synth_config.amplitude,
                    "knot range around the reference pose");
  synth->add_option("--output", synth_output, "output directory")->required();

  // pipeline
  auto* pipeline = app.add_subcommand("pipeline", "full staged pipeline");
  std::string pipeline_config_path, pipeline_output;
  int pipeline_jobs = 0;
  bool pipeline_long = false;
  pipeline->add_option("--config", pipeline_config_path, "pipeline config JSON")
      ->required();
  pipeline->add_option("--jobs", pipeline_jobs, "override config jobs");
  pipeline->add_option("--output", pipeline_output, "override output directory");
  pipeline->add_flag("--export-long", pipeline_long,
                     "also write long-format .tsv tables");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : to_exit(msk::ExitCode::kConfigError);
  }

  try {
    if (scale->parsed()) {
      msk::SubjectAnthropometry subject;
      subject.height = scale_height;
      subject.mass = scale_mass;
      const msk::Model scaled =
          msk::scale_model(msk::read_model(scale_model_path), subject);
      msk::write_model(scaled, scale_output);
      std::cout << "wrote " << scale_output << "\n";
    } else if (ik->parsed()) {
      const msk::Model model = msk::read_model(ik_model);
      msk::MarkerTrajectory markers = msk::read_trc(ik_markers);
      if (ik_rate > 0.0) {
        for (Eigen::Index i = 0; i < markers.times.size(); ++i) {
          markers.times[i] = static_cast<double>(i) / ik_rate;
        }
      }
      const auto [traj, diag] =
          msk::inverse_kinematics(model, markers, model.reference_pose);
      const auto table = msk::trajectory_to_table(traj, model, "ik_coordinates");
      msk::write_storage(table, ik_output);
      std::cout << "wrote " << ik_output << " (max marker error "
                << diag.sequence_max_marker_error << " m)\n";
      if (!ik_diag.empty()) msk::write_ik_diagnostics(diag, ik_diag);
      if (ik_long) export_long_next_to(table, ik_output);
    } else if (id->parsed()) {
      const msk::Model model = msk::read_model(id_model);
      const msk::KinematicTrajectory traj =
          msk::trajectory_from_table(msk::read_storage(id_coords), model);
      std::optional<msk::GrfTrajectory> grf;
      if (!id_grf.empty()) {
        auto side_map = parse_side_map(id_grf_bodies);
        if (side_map.empty()) side_map = msk::detect_foot_bodies(model);
        grf = msk::resample_grf(
            msk::grf_from_table(msk::read_storage(id_grf), side_map),
            traj.times);
      }
      msk::MatX tau(traj.times.size(), traj.q.cols());
      for (Eigen::Index t = 0; t < traj.times.size(); ++t) {
        std::vector<msk::ExternalWrench> wrenches;
        if (grf) wrenches = msk::grf_wrenches_at(*grf, static_cast<int>(t));
        tau.row(t) = msk::inverse_dynamics(model, traj.q.row(t).transpose(),
                                           traj.qdot.row(t).transpose(),
                                           traj.qddot.row(t).transpose(),
                                           wrenches)
                         .transpose();
      }
      const auto table = msk::make_table("id_torques", traj.times,
                                         msk::coordinate_names(model), tau);
      msk::write_storage(table, id_output);
      std::cout << "wrote " << id_output << "\n";
      if (id_long) export_long_next_to(table, id_output);
    } else if (so->parsed()) {
      const msk::Model model = msk::read_model(so_model);
      const msk::KinematicTrajectory traj =
          msk::trajectory_from_table(msk::read_storage(so_coords), model);
      const msk::TimeSeriesTable torque_table = msk::read_storage(so_torques);
      msk::TorqueTrajectory torques;
      torques.times = torque_table.times();
      torques.tau = torque_table.rows.rightCols(torque_table.rows.cols() - 1);
      const auto [activations, diag] =
          msk::solve_sequence(model, traj, torques, so_config, so_jobs);
      const auto table = msk::activations_to_table(activations, "activations");
      msk::write_storage(table, so_output);
      std::cout << "wrote " << so_output << " (max violation "
                << diag.max_constraint_violation << ")\n";
      if (!so_diag.empty()) msk::write_so_diagnostics(diag, so_diag);
      if (so_long) export_long_next_to(table, so_output);
    } else if (smooth->parsed()) {
      bool applied = true;
      const msk::TimeSeriesTable smoothed = msk::smooth_table(
          msk::read_storage(smooth_input), smooth_config, &applied);
      msk::write_storage(smoothed, smooth_output);
      if (!applied) {
        std::cerr << "warning: sequence shorter than the window, passed "
                     "through unsmoothed\n";
      }
      std::cout << "wrote " << smooth_output << "\n";
      if (smooth_long) export_long_next_to(smoothed, smooth_output);
    } else if (filter->parsed()) {
      std::optional<msk::IkDiagnostics> ik_d;
      if (!filter_ik.empty()) ik_d = msk::read_ik_diagnostics(filter_ik);
      const msk::SoSequenceDiagnostics so_d =
          msk::read_so_diagnostics(filter_so);
      const msk::AcceptanceDecision decision =
          msk::accept_sequence(ik_d, so_d, thresholds);
      if (!filter_output.empty()) msk::write_acceptance(decision, filter_output);
      std::cout << (decision.accepted ? "accepted" : "rejected: " +
                                                         decision.message)
                << "\n";
      return decision.accepted ? to_exit(msk::ExitCode::kOk)
                               : to_exit(msk::ExitCode::kRejected);
    } else if (metrics->parsed()) {
      const std::string report = msk::run_metrics(metrics_request, metrics_output);
      if (metrics_output.empty()) {
        std::cout << report;
      } else {
        std::cout << "wrote " << metrics_output << "\n";
      }
    } else if (synth->parsed()) {
      for (const auto& path :
           msk::run_synth(synth_model, synth_config, synth_output)) {
        std::cout << "wrote " << path << "\n";
      }
    } else if (pipeline->parsed()) {
      msk::PipelineConfig config = msk::read_config(pipeline_config_path);
      if (pipeline_jobs > 0) config.jobs = pipeline_jobs;
      if (!pipeline_output.empty()) config.output_dir = pipeline_output;
      if (pipeline_long) config.export_long = true;
      const msk::PipelineOutcome outcome = msk::run_pipeline(config);
      for (const auto& path : outcome.written) std::cout << "wrote " << path << "\n";
      if (!outcome.decision.accepted) {
        std::cerr << "sequence rejected: " << outcome.decision.message << "\n";
        return to_exit(msk::ExitCode::kRejected);
      }
    }
  } catch (const msk::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return to_exit(msk::ExitCode::kConfigError);
  } catch (const msk::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return to_exit(msk::ExitCode::kStageFailure);
  } catch (const msk::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return to_exit(msk::ExitCode::kStageFailure);
  }
  return to_exit(msk::ExitCode::kOk);
}
