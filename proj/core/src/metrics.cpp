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

#include "msk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace msk {

namespace {

void check_shapes(const MatX& pred, const MatX& gt, const EvalMask& mask) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols() ||
      mask.valid.rows() != pred.rows() || mask.valid.cols() != pred.cols()) {
    throw Error("pred, gt, and mask shapes must agree");
  }
}

// Flattened masked entries in deterministic (row-major) order.
void collect(const MatX& pred, const MatX& gt, const EvalMask& mask,
             std::vector<double>& p, std::vector<double>& g) {
  p.clear();
  g.clear();
  for (Eigen::Index t = 0; t < pred.rows(); ++t) {
    for (Eigen::Index c = 0; c < pred.cols(); ++c) {
      if (!mask.valid(t, c)) continue;
      p.push_back(pred(t, c));
      g.push_back(gt(t, c));
    }
  }
  if (p.empty()) throw Error("evaluation mask selects no entries");
}

double population_std(const std::vector<double>& x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  return std::sqrt(var / static_cast<double>(x.size()));
}

}  // namespace

double rmse(const MatX& pred, const MatX& gt, const EvalMask& mask) {
  check_shapes(pred, gt, mask);
  std::vector<double> p, g;
  collect(pred, gt, mask, p, g);
  double acc = 0.0;
  for (size_t i = 0; i < p.size(); ++i) acc += (p[i] - g[i]) * (p[i] - g[i]);
  return std::sqrt(acc / static_cast<double>(p.size()));
}

double mae(const MatX& pred, const MatX& gt, const EvalMask& mask) {
  check_shapes(pred, gt, mask);
  std::vector<double> p, g;
  collect(pred, gt, mask, p, g);
  double acc = 0.0;
  for (size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - g[i]);
  return acc / static_cast<double>(p.size());
}

double nrmse(const MatX& pred, const MatX& gt, const EvalMask& mask) {
  check_shapes(pred, gt, mask);
  std::vector<double> p, g;
  collect(pred, gt, mask, p, g);
  const double sd = population_std(g);
  if (sd == 0.0) {
    throw Error("nRMSE undefined: ground truth is constant over the mask");
  }
  double acc = 0.0;
  for (size_t i = 0; i < p.size(); ++i) acc += (p[i] - g[i]) * (p[i] - g[i]);
  return std::sqrt(acc / static_cast<double>(p.size())) / sd;
}

double pcc(const MatX& pred, const MatX& gt, const EvalMask& mask) {
  check_shapes(pred, gt, mask);
  std::vector<double> p, g;
  collect(pred, gt, mask, p, g);
  if (p.size() < 2) throw Error("PCC needs at least 2 valid entries");
  const double n = static_cast<double>(p.size());
  double mp = 0.0, mg = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    mp += p[i];
    mg += g[i];
  }
  mp /= n;
  mg /= n;
  double cov = 0.0, vp = 0.0, vg = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    cov += (p[i] - mp) * (g[i] - mg);
    vp += (p[i] - mp) * (p[i] - mp);
    vg += (g[i] - mg) * (g[i] - mg);
  }
  if (vp == 0.0 || vg == 0.0) {
    throw Error("PCC undefined: an argument is constant over the mask");
  }
  return cov / std::sqrt(vp * vg);
}

double diff_l1(const MatX& pred, const MatX& gt, const EvalMask& mask) {
  check_shapes(pred, gt, mask);
  double acc = 0.0;
  Eigen::Index count = 0;
  for (Eigen::Index t = 1; t < pred.rows(); ++t) {
    for (Eigen::Index c = 0; c < pred.cols(); ++c) {
      if (!mask.pair_valid(t, c)) continue;
      const double dp = pred(t, c) - pred(t - 1, c);
      const double dg = gt(t, c) - gt(t - 1, c);
      acc += std::abs(dp - dg);
      ++count;
    }
  }
  if (count == 0) throw Error("DiffL1 undefined: no valid adjacent pairs");
  return acc / static_cast<double>(count);
}

double active_mae(const MatX& pred, const MatX& gt, const EvalMask& mask,
                  double threshold) {
  check_shapes(pred, gt, mask);
  double acc = 0.0;
  Eigen::Index count = 0;
  for (Eigen::Index t = 0; t < pred.rows(); ++t) {
    for (Eigen::Index c = 0; c < pred.cols(); ++c) {
      // Strictly greater than the threshold.
      if (!mask.valid(t, c) || !(gt(t, c) > threshold)) continue;
      acc += std::abs(pred(t, c) - gt(t, c));
      ++count;
    }
  }
  if (count == 0) {
    throw Error("Active MAE undefined: no masked entries exceed the threshold");
  }
  return acc / static_cast<double>(count);
}

double pose_loss(const MatX& pred_q, const MatX& gt_q, const EvalMask& mask) {
  return rmse(pred_q, gt_q, mask) + diff_l1(pred_q, gt_q, mask);
}

double muscle_loss(const MatX& pred_a, const MatX& gt_a, const EvalMask& mask) {
  return rmse(pred_a, gt_a, mask) + diff_l1(pred_a, gt_a, mask) +
         (1.0 - pcc(pred_a, gt_a, mask));
}

AmplitudeLosses amplitude_losses(const MatX& pred_a, const MatX& gt_a,
                                 const EvalMask& mask,
                                 double activity_threshold,
                                 double peak_fraction) {
  check_shapes(pred_a, gt_a, mask);
  AmplitudeLosses out;
  out.active_amp = active_mae(pred_a, gt_a, mask, activity_threshold);

  std::vector<double> p, g;
  collect(pred_a, gt_a, mask, p, g);
  out.std_match = std::abs(population_std(p) - population_std(g));

  // Top peak_fraction of masked entries ranked by ground truth, ties broken
  // by flattened index so the selection is deterministic.
  const size_t k = std::max<size_t>(
      1, static_cast<size_t>(std::floor(peak_fraction *
                                        static_cast<double>(g.size()))));
  std::vector<size_t> order(g.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (g[a] != g[b]) return g[a] > g[b];
    return a < b;
  });
  double acc = 0.0;
  for (size_t i = 0; i < k; ++i) acc += std::abs(p[order[i]] - g[order[i]]);
  out.peak_amp = acc / static_cast<double>(k);
  return out;
}

}  // namespace msk
