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

#ifndef MSK_POSTPROCESS_HPP_
#define MSK_POSTPROCESS_HPP_

#include <optional>
#include <string>

#include "msk/kinematics.hpp"
#include "msk/static_opt.hpp"
#include "msk/types.hpp"

namespace msk {

struct AcceptanceThresholds {
  double max_marker_error = 0.15;          // m
  double max_constraint_violation = 1e-11; // N m
};

struct SmoothingConfig {
  int window = 11;     // odd, >= poly_order + 2
  int poly_order = 2;
};

enum class RejectionReason { kNone, kMarkerError, kConstraintViolation };

struct AcceptanceDecision {
  bool accepted = true;
  RejectionReason reason = RejectionReason::kNone;
  double value = 0.0;      // the failing statistic
  double threshold = 0.0;
  std::string message;
};

/// Sequence gate: accepted iff the IK max marker error and the SO max
/// constraint violation are both within their thresholds. The marker check
/// runs first; a missing IK stage (coordinate-file input) skips it.
AcceptanceDecision accept_sequence(const std::optional<IkDiagnostics>& ik_diag,
                                   const SoSequenceDiagnostics& so_diag,
                                   const AcceptanceThresholds& thresholds);

struct SmoothResult {
  ActivationTrajectory activations;
  bool applied = true;  // false when the sequence is shorter than the window
};

/// Savitzky-Golay smoothing of every activation column, time untouched.
/// Interior samples use the center convolution weights; the first and last
/// half-windows evaluate the boundary window's polynomial fit off-center.
/// Results are clipped to [0, 1] after filtering. Sequences shorter than the
/// window pass through unchanged with `applied = false`.
SmoothResult savgol_smooth(const ActivationTrajectory& activations,
                           const SmoothingConfig& config);

/// Raw column filter used by both savgol_smooth and the table-level stage;
/// no clipping.
MatX savgol_filter_columns(const MatX& columns, const SmoothingConfig& config);

struct TimeSeriesTable;  // storage.hpp

/// Storage-level smoothing stage: filters and clips every data column while
/// leaving the time column and the original header untouched (nRows and
/// nColumns are recomputed on write). `applied`, when given, reports whether
/// the sequence was long enough to filter.
TimeSeriesTable smooth_table(const TimeSeriesTable& table,
                             const SmoothingConfig& config,
                             bool* applied = nullptr);

}  // namespace msk

#endif  // MSK_POSTPROCESS_HPP_
