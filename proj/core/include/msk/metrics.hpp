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

#ifndef MSK_METRICS_HPP_
#define MSK_METRICS_HPP_

#include "msk/types.hpp"

namespace msk {

/// Validity sets for masked evaluation: Omega is the valid (frame, channel)
/// entries; the derived pair set keeps (t, c) with both t and t-1 valid.
struct EvalMask {
  ArrXb valid;  // T x C

  static EvalMask all_valid(Eigen::Index rows, Eigen::Index cols) {
    EvalMask m;
    m.valid = ArrXb::Constant(rows, cols, true);
    return m;
  }
  Eigen::Index count() const { return valid.count(); }
  bool pair_valid(Eigen::Index t, Eigen::Index c) const {
    return t >= 1 && valid(t, c) && valid(t - 1, c);
  }
};

// All metrics reduce over the masked entries only; shapes of pred, gt, and
// mask must agree. Empty selections and zero-variance inputs are errors.
double rmse(const MatX& pred, const MatX& gt, const EvalMask& mask);
double mae(const MatX& pred, const MatX& gt, const EvalMask& mask);
double nrmse(const MatX& pred, const MatX& gt, const EvalMask& mask);
double pcc(const MatX& pred, const MatX& gt, const EvalMask& mask);
double diff_l1(const MatX& pred, const MatX& gt, const EvalMask& mask);
double active_mae(const MatX& pred, const MatX& gt, const EvalMask& mask,
                  double threshold = 0.10);

/// Pose objective: RMSE plus the mean L1 of first differences over valid
/// adjacent pairs.
double pose_loss(const MatX& pred_q, const MatX& gt_q, const EvalMask& mask);

/// Muscle objective: RMSE + DiffL1 + (1 - PCC), all on the same mask.
double muscle_loss(const MatX& pred_a, const MatX& gt_a, const EvalMask& mask);

struct AmplitudeLosses {
  double active_amp = 0.0;  // MAE where gt exceeds the activity threshold
  double peak_amp = 0.0;    // MAE over the top fraction of entries by gt
  double std_match = 0.0;   // | Std(pred) - Std(gt) | over the mask
};

AmplitudeLosses amplitude_losses(const MatX& pred_a, const MatX& gt_a,
                                 const EvalMask& mask,
                                 double activity_threshold = 0.10,
                                 double peak_fraction = 0.05);

}  // namespace msk

#endif  // MSK_METRICS_HPP_
