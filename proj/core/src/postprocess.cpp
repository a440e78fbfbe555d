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

#include "msk/postprocess.hpp"

#include <cmath>
#include <sstream>

#include "msk/storage.hpp"

namespace msk {

AcceptanceDecision accept_sequence(const std::optional<IkDiagnostics>& ik_diag,
                                   const SoSequenceDiagnostics& so_diag,
                                   const AcceptanceThresholds& thresholds) {
  if (!(thresholds.max_marker_error > 0.0) ||
      !(thresholds.max_constraint_violation > 0.0)) {
    throw Error("acceptance thresholds must be > 0");
  }
  AcceptanceDecision d;
  if (ik_diag &&
      ik_diag->sequence_max_marker_error > thresholds.max_marker_error) {
    d.accepted = false;
    d.reason = RejectionReason::kMarkerError;
    d.value = ik_diag->sequence_max_marker_error;
    d.threshold = thresholds.max_marker_error;
    std::ostringstream os;
    os << "max marker error " << d.value << " m exceeds " << d.threshold
       << " m";
    d.message = os.str();
    return d;
  }
  if (so_diag.max_constraint_violation > thresholds.max_constraint_violation) {
    d.accepted = false;
    d.reason = RejectionReason::kConstraintViolation;
    d.value = so_diag.max_constraint_violation;
    d.threshold = thresholds.max_constraint_violation;
    std::ostringstream os;
    os << "max constraint violation " << d.value << " N m exceeds "
       << d.threshold << " N m";
    d.message = os.str();
    return d;
  }
  d.message = "accepted";
  return d;
}

namespace {

void validate_smoothing(const SmoothingConfig& config) {
  if (config.window % 2 == 0 || config.window < config.poly_order + 2) {
    throw Error("smoothing window must be odd and >= poly_order + 2, got " +
                std::to_string(config.window) + " / order " +
                std::to_string(config.poly_order));
  }
}

// Least-squares projection of one window onto polynomials of the given
// order: P = Q Q^T from the thin QR of the Vandermonde matrix. Row r gives
// the fitted value at window position r as weights over the window samples.
MatX window_projection(int window, int order) {
  const int m = (window - 1) / 2;
  MatX vandermonde(window, order + 1);
  for (int r = 0; r < window; ++r) {
    const double x = static_cast<double>(r - m);
    double pw = 1.0;
    for (int c = 0; c <= order; ++c) {
      vandermonde(r, c) = pw;
      pw *= x;
    }
  }
  Eigen::HouseholderQR<MatX> qr(vandermonde);
  const MatX thin_q =
      qr.householderQ() * MatX::Identity(window, order + 1);
  return thin_q * thin_q.transpose();
}

}  // namespace

MatX savgol_filter_columns(const MatX& columns, const SmoothingConfig& config) {
  validate_smoothing(config);
  const int frames = static_cast<int>(columns.rows());
  const int window = config.window;
  if (frames < window) {
    throw Error("sequence of " + std::to_string(frames) +
                " frames is shorter than the smoothing window " +
                std::to_string(window));
  }
  const MatX proj = window_projection(window, config.poly_order);
  const int m = (window - 1) / 2;

  MatX out(frames, columns.cols());
  // Leading edge: fit of the first window evaluated at positions 0..m-1.
  out.topRows(m) = proj.topRows(m) * columns.topRows(window);
  // Interior: center row as a sliding convolution.
  const VecX center = proj.row(m).transpose();
  for (int t = m; t < frames - m; ++t) {
    out.row(t) = center.transpose() * columns.middleRows(t - m, window);
  }
  // Trailing edge: fit of the last window evaluated past its center.
  out.bottomRows(m) = proj.bottomRows(m) * columns.bottomRows(window);
  return out;
}

SmoothResult savgol_smooth(const ActivationTrajectory& activations,
                           const SmoothingConfig& config) {
  validate_smoothing(config);
  SmoothResult result;
  result.activations = activations;
  if (activations.activations.rows() < config.window) {
    result.applied = false;
    return result;
  }
  result.activations.activations =
      savgol_filter_columns(activations.activations, config)
          .cwiseMax(0.0)
          .cwiseMin(1.0);
  return result;
}

TimeSeriesTable smooth_table(const TimeSeriesTable& table,
                             const SmoothingConfig& config, bool* applied) {
  validate_smoothing(config);
  TimeSeriesTable out = table;
  if (table.rows.rows() < config.window) {
    if (applied) *applied = false;
    return out;
  }
  const Eigen::Index data_cols = table.rows.cols() - 1;
  out.rows.rightCols(data_cols) =
      savgol_filter_columns(table.rows.rightCols(data_cols), config)
          .cwiseMax(0.0)
          .cwiseMin(1.0);
  if (applied) *applied = true;
  return out;
}

}  // namespace msk
