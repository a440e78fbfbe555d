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

#ifndef MSK_TYPES_HPP_
#define MSK_TYPES_HPP_

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace msk {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using ArrXb = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Base error for every failure raised by the library. Parse and schema
/// failures carry a human-readable location in the message.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Rigid transform: world = R * local + p.
struct Pose {
  Mat3 R = Mat3::Identity();
  Vec3 p = Vec3::Zero();

  Vec3 apply(const Vec3& local) const { return R * local + p; }
  Pose compose(const Pose& child) const { return Pose{R * child.R, R * child.p + p}; }
};

}  // namespace msk

#endif  // MSK_TYPES_HPP_
