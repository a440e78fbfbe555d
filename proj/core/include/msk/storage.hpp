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

#ifndef MSK_STORAGE_HPP_
#define MSK_STORAGE_HPP_

#include <map>
#include <string>
#include <vector>

#include "msk/dynamics.hpp"
#include "msk/kinematics.hpp"
#include "msk/model.hpp"
#include "msk/static_opt.hpp"
#include "msk/types.hpp"

namespace msk {

/// Tabular storage document (.sto): key=value header terminated by
/// `endheader`, a label row, then tab-separated numeric rows. The first
/// column is always time.
struct TimeSeriesTable {
  std::string name = "table";
  std::vector<std::string> column_labels;  // first = "time"
  MatX rows;                               // T x C, C includes time
  bool in_degrees = false;
  /// Header lines between the name and `endheader`, verbatim; nRows and
  /// nColumns are recomputed on write, unknown keys round-trip untouched.
  /// Empty for programmatically built tables (a canonical header is
  /// written).
  std::vector<std::string> header_lines;

  Eigen::Index frame_count() const { return rows.rows(); }
  VecX times() const { return rows.col(0); }
  /// Column index by label; throws when absent.
  Eigen::Index column(const std::string& label) const;
};

TimeSeriesTable read_storage(const std::string& path);
void write_storage(const TimeSeriesTable& table, const std::string& path);

/// Builds a table from a time vector and data columns (labels exclude time).
TimeSeriesTable make_table(const std::string& name, const VecX& times,
                           const std::vector<std::string>& labels,
                           const MatX& values);

/// Tab-separated long-format export (time, channel, value) for plotting.
void write_long_format(const TimeSeriesTable& table, const std::string& path);

/// TRC marker files. Millimeter units convert to meters on read; empty
/// coordinate fields mark the sample occluded. Writing emits meters.
MarkerTrajectory read_trc(const std::string& path);
void write_trc(const MarkerTrajectory& markers, const std::string& path);

/// Model documents: UTF-8 JSON with top-level keys bodies, muscles, markers,
/// gravity, reserve_optimal_force, reference_pose, format_version (= 1).
/// Unknown keys are rejected with a field path; the parsed model must pass
/// validate_model.
Model read_model(const std::string& path);
void write_model(const Model& model, const std::string& path);

/// GRF tables use columns <side>_force_v{x,y,z}, <side>_cop_p{x,y,z} and
/// optional <side>_moment_m{x,y,z} with side in {r, l}. `side_to_body` maps
/// each side present in the file to the loaded segment.
GrfTrajectory grf_from_table(const TimeSeriesTable& table,
                             const std::map<std::string, std::string>& side_to_body);
TimeSeriesTable grf_to_table(const GrfTrajectory& grf);

/// Coordinate tables: labels must equal coordinate_names(model) after time.
/// inDegrees=yes converts rotational coordinates to radians; velocities and
/// accelerations are filled by differentiate() when the table has >= 3
/// frames.
KinematicTrajectory trajectory_from_table(const TimeSeriesTable& table,
                                          const Model& model);
TimeSeriesTable trajectory_to_table(const KinematicTrajectory& traj,
                                    const Model& model,
                                    const std::string& name);

ActivationTrajectory activations_from_table(const TimeSeriesTable& table);
TimeSeriesTable activations_to_table(const ActivationTrajectory& activations,
                                     const std::string& name);

/// Locale-independent shortest round-trip decimal formatting used by every
/// writer.
std::string format_double(double value);

}  // namespace msk

#endif  // MSK_STORAGE_HPP_
