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

#ifndef MSK_PIPELINE_HPP_
#define MSK_PIPELINE_HPP_

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "msk/postprocess.hpp"
#include "msk/storage.hpp"
#include "msk/synth.hpp"

namespace msk {

/// Configuration error raised before any compute starts.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Failure inside a named pipeline stage.
class StageError : public Error {
 public:
  StageError(const std::string& stage, const std::string& what)
      : Error("stage " + stage + ": " + what), stage_(stage) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

struct PipelineConfig {
  std::string model_path;
  std::optional<SubjectAnthropometry> subject;
  std::string markers_path;       // exactly one of markers_path /
  std::string coordinates_path;   // coordinates_path must be set
  std::string grf_path;           // optional
  std::map<std::string, std::string> grf_bodies;  // side -> body, optional
  std::string ground_truth_path;  // optional activation .sto
  std::string output_dir;
  SoConfig so;
  SmoothingConfig smoothing;
  AcceptanceThresholds acceptance;
  double frame_rate_override = 0.0;  // > 0 re-stamps times as frame/rate
  int jobs = 1;
  bool export_long = false;
};

/// JSON pipeline configuration (format_version 1). Relative paths resolve
/// against the config file's directory; unknown keys are rejected.
PipelineConfig read_config(const std::string& path);

/// Exit-code contract shared by the CLI.
enum class ExitCode : int {
  kOk = 0,
  kConfigError = 2,
  kStageFailure = 3,
  kRejected = 4,
};

struct PipelineOutcome {
  AcceptanceDecision decision;
  std::vector<std::string> written;  // artifact paths in creation order
};

/// Runs scale -> IK (or coordinate ingest) -> ID -> SO -> filter -> smooth
/// -> metrics over staged files in config.output_dir. Throws ConfigError or
/// StageError; a rejected sequence returns normally with decision.accepted
/// false and no smoothed output.
PipelineOutcome run_pipeline(const PipelineConfig& config);

/// Generates and writes markers.trc, coordinates.sto, activations_gt.sto and
/// (with foot bodies) grf.sto into output_dir.
std::vector<std::string> run_synth(const std::string& model_path,
                                   const SynthConfig& config,
                                   const std::string& output_dir);

struct MetricsRequest {
  std::string pred_path;
  std::string gt_path;
  std::string mask_path;  // optional 0/1 table
  bool per_muscle = false;
};

/// Metric suite over aligned activation tables; returns the tab-separated
/// report written to report_path (empty path skips the write).
std::string run_metrics(const MetricsRequest& request,
                        const std::string& report_path);

// Diagnostics sidecars (JSON).
void write_ik_diagnostics(const IkDiagnostics& diag, const std::string& path);
IkDiagnostics read_ik_diagnostics(const std::string& path);
void write_so_diagnostics(const SoSequenceDiagnostics& diag,
                          const std::string& path);
SoSequenceDiagnostics read_so_diagnostics(const std::string& path);
void write_acceptance(const AcceptanceDecision& decision,
                      const std::string& path);

}  // namespace msk

#endif  // MSK_PIPELINE_HPP_
