/*
 * Copyright 2026 The Lodom Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "lodom/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lodom {

Scalar rotation_angle(const Quat& q) {
  // atan2 form is stable for small angles, unlike 2*acos(w).
  return 2.0 * std::atan2(q.vec().norm(), std::abs(q.w()));
}

Scalar rotation_angle_between(const Quat& a, const Quat& b) {
  return rotation_angle(a.conjugate() * b);
}

bool rotations_equal(const Quat& a, const Quat& b, Scalar tol) {
  return rotation_angle_between(a, b) <= tol;
}

Scalar translation_distance(const Pose& a, const Pose& b) {
  return (a.translation - b.translation).norm();
}

Pose interpolate(const StampedPose& a, const StampedPose& b, double t) {
  if (!(a.time < b.time)) {
    throw std::invalid_argument("interpolate: degenerate interval, a.time >= b.time");
  }
  if (t < a.time || t > b.time) {
    throw std::out_of_range("interpolate: query time outside bracketing interval");
  }
  const double alpha = (t - a.time) / (b.time - a.time);
  const Vec3 translation =
      a.pose.translation + alpha * (b.pose.translation - a.pose.translation);
  const Quat rotation = a.pose.rotation.slerp(alpha, b.pose.rotation);
  return Pose(rotation, translation);
}

Vec3 to_rpy(const Quat& q) {
  const Scalar w = q.w(), x = q.x(), y = q.y(), z = q.z();
  const Scalar roll = std::atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y));
  const Scalar pitch = std::asin(std::clamp(2.0 * (w * y - z * x), -1.0, 1.0));
  const Scalar yaw = std::atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z));
  return Vec3(roll, pitch, yaw);
}

Quat from_rpy(Scalar roll, Scalar pitch, Scalar yaw) {
  return Quat(Eigen::AngleAxis<Scalar>(yaw, Vec3::UnitZ()) *
              Eigen::AngleAxis<Scalar>(pitch, Vec3::UnitY()) *
              Eigen::AngleAxis<Scalar>(roll, Vec3::UnitX()))
      .normalized();
}

std::ostream& operator<<(std::ostream& os, const Pose& p) {
  os << "t[" << p.translation.transpose() << "] q[" << p.rotation.coeffs().transpose()
     << "]";
  return os;
}

}  // namespace lodom
