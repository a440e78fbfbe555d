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

#include "msk/pipeline.hpp"

#include "msk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace msk {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading");
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(path + ": " + e.what());
  }
}

void dump_json(const ordered_json& doc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << doc.dump(2) << "\n";
}

void reject_unknown(const ordered_json& obj, const std::string& where,
                    const std::vector<std::string>& known) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

std::string resolve(const fs::path& base, const std::string& path) {
  if (path.empty()) return path;
  const fs::path p(path);
  return p.is_absolute() ? p.string() : (base / p).string();
}

}  // namespace

PipelineConfig read_config(const std::string& path) {
  const ordered_json doc = load_json(path);
  if (!doc.is_object()) throw ConfigError(path + ": expected a JSON object");
  reject_unknown(doc, path,
                 {"format_version", "model", "subject", "markers",
                  "coordinates", "grf", "grf_bodies",
                  "ground_truth_activations", "output_dir", "static_opt",
                  "smoothing", "acceptance", "frame_rate", "jobs",
                  "export_long"});
  if (!doc.contains("format_version") ||
      !doc["format_version"].is_number_integer() ||
      doc["format_version"].get<long>() != 1) {
    throw ConfigError(path + ": format_version must be the integer 1");
  }
  const fs::path base = fs::path(path).parent_path();

  PipelineConfig cfg;
  auto get_path = [&](const char* key) -> std::string {
    if (!doc.contains(key)) return {};
    if (!doc[key].is_string()) {
      throw ConfigError(path + "." + key + ": expected string");
    }
    return resolve(base, doc[key].get<std::string>());
  };
  cfg.model_path = get_path("model");
  if (cfg.model_path.empty()) throw ConfigError(path + ": missing 'model'");
  cfg.markers_path = get_path("markers");
  cfg.coordinates_path = get_path("coordinates");
  cfg.grf_path = get_path("grf");
  cfg.ground_truth_path = get_path("ground_truth_activations");
  cfg.output_dir = get_path("output_dir");
  if (cfg.output_dir.empty()) throw ConfigError(path + ": missing 'output_dir'");

  if (doc.contains("subject")) {
    const auto& js = doc["subject"];
    const std::string where = path + ".subject";
    if (!js.is_object()) throw ConfigError(where + ": expected object");
    reject_unknown(js, where, {"height", "mass", "scale_overrides"});
    SubjectAnthropometry subject;
    if (!js.contains("height") || !js.contains("mass")) {
      throw ConfigError(where + ": needs 'height' and 'mass'");
    }
    subject.height = js["height"].get<double>();
    subject.mass = js["mass"].get<double>();
    if (js.contains("scale_overrides")) {
      for (const auto& [body, arr] : js["scale_overrides"].items()) {
        if (!arr.is_array() || arr.size() != 3) {
          throw ConfigError(where + ".scale_overrides." + body +
                            ": expected an array of 3 numbers");
        }
        subject.scale_overrides[body] =
            Vec3(arr[0].get<double>(), arr[1].get<double>(),
                 arr[2].get<double>());
      }
    }
    cfg.subject = subject;
  }

  if (doc.contains("grf_bodies")) {
    const auto& jg = doc["grf_bodies"];
    if (!jg.is_object()) throw ConfigError(path + ".grf_bodies: expected object");
    for (const auto& [side, body] : jg.items()) {
      if (side != "r" && side != "l") {
        throw ConfigError(path + ".grf_bodies: side must be 'r' or 'l', got '" +
                          side + "'");
      }
      cfg.grf_bodies[side] = body.get<std::string>();
    }
  }

  if (doc.contains("static_opt")) {
    const auto& jo = doc["static_opt"];
    const std::string where = path + ".static_opt";
    if (!jo.is_object()) throw ConfigError(where + ": expected object");
    reject_unknown(jo, where,
                   {"p", "reserve_weight", "max_iterations", "tolerance",
                    "warm_start"});
    if (jo.contains("p")) cfg.so.p = jo["p"].get<double>();
    if (jo.contains("reserve_weight")) {
      cfg.so.reserve_weight = jo["reserve_weight"].get<double>();
    }
    if (jo.contains("max_iterations")) {
      cfg.so.max_iterations = jo["max_iterations"].get<int>();
    }
    if (jo.contains("tolerance")) cfg.so.tolerance = jo["tolerance"].get<double>();
    if (jo.contains("warm_start")) cfg.so.warm_start = jo["warm_start"].get<bool>();
  }
  if (doc.contains("smoothing")) {
    const auto& jo = doc["smoothing"];
    const std::string where = path + ".smoothing";
    if (!jo.is_object()) throw ConfigError(where + ": expected object");
    reject_unknown(jo, where, {"window", "poly_order"});
    if (jo.contains("window")) cfg.smoothing.window = jo["window"].get<int>();
    if (jo.contains("poly_order")) {
      cfg.smoothing.poly_order = jo["poly_order"].get<int>();
    }
  }
  if (doc.contains("acceptance")) {
    const auto& jo = doc["acceptance"];
    const std::string where = path + ".acceptance";
    if (!jo.is_object()) throw ConfigError(where + ": expected object");
    reject_unknown(jo, where, {"max_marker_error", "max_constraint_violation"});
    if (jo.contains("max_marker_error")) {
      cfg.acceptance.max_marker_error = jo["max_marker_error"].get<double>();
    }
    if (jo.contains("max_constraint_violation")) {
      cfg.acceptance.max_constraint_violation =
          jo["max_constraint_violation"].get<double>();
    }
  }
  if (doc.contains("frame_rate")) {
    cfg.frame_rate_override = doc["frame_rate"].get<double>();
  }
  if (doc.contains("jobs")) cfg.jobs = doc["jobs"].get<int>();
  if (doc.contains("export_long")) cfg.export_long = doc["export_long"].get<bool>();
  return cfg;
}

void write_ik_diagnostics(const IkDiagnostics& diag, const std::string& path) {
  ordered_json doc;
  doc["sequence_max_marker_error"] = diag.sequence_max_marker_error;
  ordered_json frames;
  frames["rms_marker_error"] = ordered_json::array();
  frames["max_marker_error"] = ordered_json::array();
  frames["iterations"] = ordered_json::array();
  frames["converged"] = ordered_json::array();
  frames["has_valid_markers"] = ordered_json::array();
  for (const auto& f : diag.frames) {
    frames["rms_marker_error"].push_back(f.rms_marker_error);
    frames["max_marker_error"].push_back(f.max_marker_error);
    frames["iterations"].push_back(f.iterations);
    frames["converged"].push_back(f.converged);
    frames["has_valid_markers"].push_back(f.has_valid_markers);
  }
  doc["frames"] = std::move(frames);
  dump_json(doc, path);
}

IkDiagnostics read_ik_diagnostics(const std::string& path) {
  const ordered_json doc = load_json(path);
  IkDiagnostics diag;
  if (!doc.contains("sequence_max_marker_error")) {
    throw Error(path + ": missing sequence_max_marker_error");
  }
  diag.sequence_max_marker_error = doc["sequence_max_marker_error"].get<double>();
  if (doc.contains("frames")) {
    const auto& frames = doc["frames"];
    const size_t n = frames["rms_marker_error"].size();
    diag.frames.resize(n);
    for (size_t i = 0; i < n; ++i) {
      diag.frames[i].rms_marker_error = frames["rms_marker_error"][i].get<double>();
      diag.frames[i].max_marker_error = frames["max_marker_error"][i].get<double>();
      diag.frames[i].iterations = frames["iterations"][i].get<int>();
      diag.frames[i].converged = frames["converged"][i].get<bool>();
      diag.frames[i].has_valid_markers = frames["has_valid_markers"][i].get<bool>();
    }
  }
  return diag;
}

void write_so_diagnostics(const SoSequenceDiagnostics& diag,
                          const std::string& path) {
  ordered_json doc;
  doc["max_constraint_violation"] = diag.max_constraint_violation;
  doc["all_converged"] = diag.all_converged;
  ordered_json frames;
  frames["constraint_violation"] = ordered_json::array();
  frames["objective_value"] = ordered_json::array();
  frames["converged"] = ordered_json::array();
  frames["iterations"] = ordered_json::array();
  frames["optimality_residual"] = ordered_json::array();
  frames["reserve_max_abs"] = ordered_json::array();
  for (const auto& f : diag.frames) {
    frames["constraint_violation"].push_back(f.constraint_violation);
    frames["objective_value"].push_back(f.objective_value);
    frames["converged"].push_back(f.converged);
    frames["iterations"].push_back(f.iterations);
    frames["optimality_residual"].push_back(f.optimality_residual);
    frames["reserve_max_abs"].push_back(
        f.reserve_torques.size() ? f.reserve_torques.lpNorm<Eigen::Infinity>()
                                 : 0.0);
  }
  doc["frames"] = std::move(frames);
  dump_json(doc, path);
}

SoSequenceDiagnostics read_so_diagnostics(const std::string& path) {
  const ordered_json doc = load_json(path);
  SoSequenceDiagnostics diag;
  if (!doc.contains("max_constraint_violation")) {
    throw Error(path + ": missing max_constraint_violation");
  }
  diag.max_constraint_violation = doc["max_constraint_violation"].get<double>();
  if (doc.contains("all_converged")) {
    diag.all_converged = doc["all_converged"].get<bool>();
  }
  if (doc.contains("frames")) {
    const auto& frames = doc["frames"];
    const size_t n = frames["constraint_violation"].size();
    diag.frames.resize(n);
    for (size_t i = 0; i < n; ++i) {
      diag.frames[i].constraint_violation =
          frames["constraint_violation"][i].get<double>();
      diag.frames[i].objective_value = frames["objective_value"][i].get<double>();
      diag.frames[i].converged = frames["converged"][i].get<bool>();
      diag.frames[i].iterations = frames["iterations"][i].get<int>();
      diag.frames[i].optimality_residual =
          frames["optimality_residual"][i].get<double>();
    }
  }
  return diag;
}

void write_acceptance(const AcceptanceDecision& decision,
                      const std::string& path) {
  ordered_json doc;
  doc["accepted"] = decision.accepted;
  switch (decision.reason) {
    case RejectionReason::kNone: doc["reason"] = "none"; break;
    case RejectionReason::kMarkerError: doc["reason"] = "marker-error"; break;
    case RejectionReason::kConstraintViolation:
      doc["reason"] = "constraint-violation";
      break;
  }
  doc["value"] = decision.value;
  doc["threshold"] = decision.threshold;
  doc["message"] = decision.message;
  dump_json(doc, path);
}

namespace {

void require_exists(const std::string& path, const std::string& what) {
  if (!fs::exists(path)) {
    throw ConfigError(what + " '" + path + "' does not exist");
  }
}

VecX restamped_times(Eigen::Index frames, double rate) {
  VecX t(frames);
  for (Eigen::Index i = 0; i < frames; ++i) {
    t[i] = static_cast<double>(i) / rate;
  }
  return t;
}

struct AlignedTables {
  VecX times;
  std::vector<std::string> labels;  // data columns, pred order
  MatX pred;
  MatX gt;
};

AlignedTables align_tables(const TimeSeriesTable& pred,
                           const TimeSeriesTable& gt) {
  // Column sets must match; report the symmetric difference otherwise.
  std::vector<std::string> pred_labels(pred.column_labels.begin() + 1,
                                       pred.column_labels.end());
  std::vector<std::string> gt_labels(gt.column_labels.begin() + 1,
                                     gt.column_labels.end());
  std::vector<std::string> missing_in_gt, missing_in_pred;
  for (const auto& l : pred_labels) {
    if (std::find(gt_labels.begin(), gt_labels.end(), l) == gt_labels.end()) {
      missing_in_gt.push_back(l);
    }
  }
  for (const auto& l : gt_labels) {
    if (std::find(pred_labels.begin(), pred_labels.end(), l) ==
        pred_labels.end()) {
      missing_in_pred.push_back(l);
    }
  }
  if (!missing_in_gt.empty() || !missing_in_pred.empty()) {
    std::ostringstream os;
    os << "column sets do not match;";
    if (!missing_in_gt.empty()) {
      os << " missing in ground truth:";
      for (const auto& l : missing_in_gt) os << " " << l;
      os << ";";
    }
    if (!missing_in_pred.empty()) {
      os << " missing in prediction:";
      for (const auto& l : missing_in_pred) os << " " << l;
    }
    throw Error(os.str());
  }

  // Shared timestamps (1e-9 tolerance), two-pointer walk.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> rows;
  Eigen::Index i = 0, j = 0;
  while (i < pred.rows.rows() && j < gt.rows.rows()) {
    const double tp = pred.rows(i, 0);
    const double tg = gt.rows(j, 0);
    if (std::abs(tp - tg) <= 1e-9) {
      rows.emplace_back(i, j);
      ++i;
      ++j;
    } else if (tp < tg) {
      ++i;
    } else {
      ++j;
    }
  }
  if (rows.empty()) throw Error("tables share no timestamps");

  AlignedTables out;
  out.labels = pred_labels;
  out.times.resize(rows.size());
  out.pred.resize(rows.size(), static_cast<Eigen::Index>(pred_labels.size()));
  out.gt.resize(rows.size(), static_cast<Eigen::Index>(pred_labels.size()));
  std::vector<Eigen::Index> gt_col(pred_labels.size());
  for (size_t c = 0; c < pred_labels.size(); ++c) {
    gt_col[c] = gt.column(pred_labels[c]);
  }
  for (size_t r = 0; r < rows.size(); ++r) {
    out.times[r] = pred.rows(rows[r].first, 0);
    for (size_t c = 0; c < pred_labels.size(); ++c) {
      out.pred(r, c) = pred.rows(rows[r].first, static_cast<Eigen::Index>(c) + 1);
      out.gt(r, c) = gt.rows(rows[r].second, gt_col[c]);
    }
  }
  return out;
}

std::string format_metric(double value) { return format_double(value); }

}  // namespace

std::string run_metrics(const MetricsRequest& request,
                        const std::string& report_path) {
  const TimeSeriesTable pred = read_storage(request.pred_path);
  const TimeSeriesTable gt = read_storage(request.gt_path);
  AlignedTables aligned = align_tables(pred, gt);

  EvalMask mask = EvalMask::all_valid(aligned.pred.rows(), aligned.pred.cols());
  if (!request.mask_path.empty()) {
    const TimeSeriesTable mask_table = read_storage(request.mask_path);
    std::vector<Eigen::Index> col(aligned.labels.size());
    for (size_t c = 0; c < aligned.labels.size(); ++c) {
      col[c] = mask_table.column(aligned.labels[c]);
    }
    for (Eigen::Index r = 0; r < aligned.times.size(); ++r) {
      Eigen::Index mr = -1;
      for (Eigen::Index k = 0; k < mask_table.rows.rows(); ++k) {
        if (std::abs(mask_table.rows(k, 0) - aligned.times[r]) <= 1e-9) {
          mr = k;
          break;
        }
      }
      if (mr < 0) {
        throw Error("mask table is missing timestamp " +
                    format_double(aligned.times[r]));
      }
      for (size_t c = 0; c < aligned.labels.size(); ++c) {
        mask.valid(r, static_cast<Eigen::Index>(c)) =
            mask_table.rows(mr, col[c]) != 0.0;
      }
    }
  }

  const std::string sequence =
      fs::path(request.pred_path).stem().string();
  struct MetricFn {
    const char* name;
    double (*fn)(const MatX&, const MatX&, const EvalMask&);
  };
  const MetricFn metric_fns[] = {
      {"rmse", [](const MatX& p, const MatX& g, const EvalMask& m) {
         return rmse(p, g, m);
       }},
      {"mae", [](const MatX& p, const MatX& g, const EvalMask& m) {
         return mae(p, g, m);
       }},
      {"nrmse", [](const MatX& p, const MatX& g, const EvalMask& m) {
         return nrmse(p, g, m);
       }},
      {"pcc", [](const MatX& p, const MatX& g, const EvalMask& m) {
         return pcc(p, g, m);
       }},
      {"diff_l1", [](const MatX& p, const MatX& g, const EvalMask& m) {
         return diff_l1(p, g, m);
       }},
      {"active_mae", [](const MatX& p, const MatX& g, const EvalMask& m) {
         return active_mae(p, g, m, 0.10);
       }},
  };

  std::ostringstream report;
  report << "sequence\tscope\tmetric\tvalue\n";
  for (const auto& m : metric_fns) {
    report << sequence << "\tall\t" << m.name << "\t"
           << format_metric(m.fn(aligned.pred, aligned.gt, mask)) << "\n";
  }
  if (request.per_muscle) {
    for (size_t c = 0; c < aligned.labels.size(); ++c) {
      EvalMask channel = mask;
      for (Eigen::Index cc = 0; cc < channel.valid.cols(); ++cc) {
        if (cc != static_cast<Eigen::Index>(c)) {
          channel.valid.col(cc).setConstant(false);
        }
      }
      for (const auto& m : metric_fns) {
        report << sequence << "\t" << aligned.labels[c] << "\t" << m.name
               << "\t";
        try {
          report << format_metric(m.fn(aligned.pred, aligned.gt, channel));
        } catch (const Error&) {
          report << "nan";  // undefined on this channel
        }
        report << "\n";
      }
    }
  }
  for (const auto& m : metric_fns) {
    report << "aggregate\tall\t" << m.name << "\t"
           << format_metric(m.fn(aligned.pred, aligned.gt, mask)) << "\n";
  }

  const std::string text = report.str();
  if (!report_path.empty()) {
    std::ofstream out(report_path, std::ios::binary);
    if (!out) throw Error("cannot open '" + report_path + "' for writing");
    out << text;
  }
  return text;
}

std::vector<std::string> run_synth(const std::string& model_path,
                                   const SynthConfig& config,
                                   const std::string& output_dir) {
  require_exists(model_path, "model file");
  const Model model = read_model(model_path);
  fs::create_directories(output_dir);
  const SynthResult synth = generate_synthetic(model, config);

  std::vector<std::string> written;
  auto emit = [&](const std::string& name) {
    written.push_back((fs::path(output_dir) / name).string());
    return written.back();
  };
  write_trc(synth.markers, emit("markers.trc"));
  write_storage(trajectory_to_table(synth.trajectory, model, "coordinates"),
                emit("coordinates.sto"));
  if (synth.grf) {
    write_storage(grf_to_table(*synth.grf), emit("grf.sto"));
  }
  write_storage(activations_to_table(synth.activations, "activations"),
                emit("activations_gt.sto"));
  return written;
}

PipelineOutcome run_pipeline(const PipelineConfig& config) {
  // Configuration checks before any compute.
  if (config.model_path.empty()) throw ConfigError("missing model path");
  require_exists(config.model_path, "model file");
  const bool has_markers = !config.markers_path.empty();
  const bool has_coords = !config.coordinates_path.empty();
  if (has_markers == has_coords) {
    throw ConfigError(
        "exactly one of 'markers' or 'coordinates' must be configured");
  }
  if (has_markers) require_exists(config.markers_path, "marker file");
  if (has_coords) require_exists(config.coordinates_path, "coordinate file");
  if (!config.grf_path.empty()) require_exists(config.grf_path, "GRF file");
  if (!config.ground_truth_path.empty()) {
    require_exists(config.ground_truth_path, "ground-truth activation file");
  }
  if (config.output_dir.empty()) throw ConfigError("missing output_dir");
  fs::create_directories(config.output_dir);

  PipelineOutcome outcome;
  auto artifact = [&](const std::string& name) {
    outcome.written.push_back((fs::path(config.output_dir) / name).string());
    return outcome.written.back();
  };
  auto maybe_export_long = [&](const TimeSeriesTable& table,
                               const std::string& sto_path) {
    if (!config.export_long) return;
    const std::string long_path =
        fs::path(sto_path).replace_extension(".long.tsv").string();
    write_long_format(table, long_path);
    outcome.written.push_back(long_path);
  };

  // Scale.
  Model model;
  try {
    model = read_model(config.model_path);
    if (config.subject) model = scale_model(model, *config.subject);
    write_model(model, artifact("model_scaled.json"));
  } catch (const Error& e) {
    throw StageError("scale", e.what());
  }

  // Kinematics: IK on markers, or coordinate-file ingest.
  KinematicTrajectory traj;
  std::optional<IkDiagnostics> ik_diag;
  try {
    if (has_markers) {
      MarkerTrajectory markers = read_trc(config.markers_path);
      if (config.frame_rate_override > 0.0) {
        markers.times = restamped_times(markers.times.size(),
                                        config.frame_rate_override);
      }
      auto [solved, diag] =
          inverse_kinematics(model, markers, model.reference_pose);
      for (size_t t = 0; t < diag.frames.size(); ++t) {
        if (!diag.frames[t].has_valid_markers) {
          throw Error("frame " + std::to_string(t) + " has no valid markers");
        }
      }
      traj = std::move(solved);
      ik_diag = std::move(diag);
      const auto table = trajectory_to_table(traj, model, "ik_coordinates");
      write_storage(table, artifact("ik_coordinates.sto"));
      maybe_export_long(table, outcome.written.back());
      write_ik_diagnostics(*ik_diag, artifact("ik_diagnostics.json"));
    } else {
      TimeSeriesTable table = read_storage(config.coordinates_path);
      if (config.frame_rate_override > 0.0) {
        table.rows.col(0) =
            restamped_times(table.rows.rows(), config.frame_rate_override);
      }
      traj = trajectory_from_table(table, model);
      const auto canonical = trajectory_to_table(traj, model, "ik_coordinates");
      write_storage(canonical, artifact("ik_coordinates.sto"));
      maybe_export_long(canonical, outcome.written.back());
    }
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError("ik", e.what());
  }

  // Inverse dynamics.
  TorqueTrajectory torques;
  try {
    std::optional<GrfTrajectory> grf;
    if (!config.grf_path.empty()) {
      auto side_to_body = config.grf_bodies;
      if (side_to_body.empty()) side_to_body = detect_foot_bodies(model);
      grf = resample_grf(grf_from_table(read_storage(config.grf_path),
                                        side_to_body),
                         traj.times);
    }
    torques.times = traj.times;
    torques.tau.resize(traj.times.size(), traj.q.cols());
    for (Eigen::Index t = 0; t < traj.times.size(); ++t) {
      std::vector<ExternalWrench> wrenches;
      if (grf) wrenches = grf_wrenches_at(*grf, static_cast<int>(t));
      torques.tau.row(t) =
          inverse_dynamics(model, traj.q.row(t).transpose(),
                           traj.qdot.row(t).transpose(),
                           traj.qddot.row(t).transpose(), wrenches)
              .transpose();
    }
    const auto table =
        make_table("id_torques", torques.times, coordinate_names(model),
                   torques.tau);
    write_storage(table, artifact("id_torques.sto"));
    maybe_export_long(table, outcome.written.back());
  } catch (const Error& e) {
    throw StageError("id", e.what());
  }

  // Static optimization.
  SoSequenceDiagnostics so_diag;
  try {
    auto [activations, diag] =
        solve_sequence(model, traj, torques, config.so, config.jobs);
    so_diag = std::move(diag);
    const auto table = activations_to_table(activations, "activations_raw");
    write_storage(table, artifact("activations_raw.sto"));
    maybe_export_long(table, outcome.written.back());
    write_so_diagnostics(so_diag, artifact("so_diagnostics.json"));
  } catch (const Error& e) {
    throw StageError("so", e.what());
  }

  // Acceptance filter on the raw diagnostics.
  outcome.decision = accept_sequence(ik_diag, so_diag, config.acceptance);
  write_acceptance(outcome.decision, artifact("acceptance.json"));
  if (!outcome.decision.accepted) return outcome;

  // Savitzky-Golay smoothing, preserving the storage header.
  try {
    const TimeSeriesTable raw = read_storage(
        (fs::path(config.output_dir) / "activations_raw.sto").string());
    const TimeSeriesTable smoothed = smooth_table(raw, config.smoothing);
    write_storage(smoothed, artifact("activations_smoothed.sto"));
    maybe_export_long(smoothed, outcome.written.back());
  } catch (const Error& e) {
    throw StageError("smooth", e.what());
  }

  // Metrics against supplied ground truth.
  if (!config.ground_truth_path.empty()) {
    try {
      MetricsRequest request;
      request.pred_path =
          (fs::path(config.output_dir) / "activations_smoothed.sto").string();
      request.gt_path = config.ground_truth_path;
      run_metrics(request, artifact("metrics_report.tsv"));
    } catch (const Error& e) {
      throw StageError("metrics", e.what());
    }
  }
  return outcome;
}

}  // namespace msk
