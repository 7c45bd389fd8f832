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

#pragma once

#include <ostream>

#include "lodom/types.hpp"

namespace lodom {

/// A rigid body transform: rotation (unit quaternion) followed by translation.
/// Every operation renormalizes the quaternion, so poses stay on SE(3).
struct Pose {
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  Pose() = default;
  Pose(const Quat& q, const Vec3& t) : rotation(q.normalized()), translation(t) {}

  static Pose Identity() { return Pose(); }

  /// Applies the transform to a point.
  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }

  /// Composition: (a * b) applies b first, then a.
  Pose operator*(const Pose& other) const {
    return Pose(rotation * other.rotation, rotation * other.translation + translation);
  }

  Mat3 rotation_matrix() const { return rotation.toRotationMatrix(); }
};

struct StampedPose {
  double time = 0.0;  // seconds, monotonic stream clock
  Pose pose;
};

inline Pose compose(const Pose& a, const Pose& b) { return a * b; }

inline Pose inverse(const Pose& p) {
  const Quat q_inv = p.rotation.conjugate();
  return Pose(q_inv, q_inv * (-p.translation));
}

/// relative(a, b) is the transform such that compose(a, relative(a, b)) == b.
inline Pose relative(const Pose& a, const Pose& b) { return inverse(a) * b; }

inline Pose translate(Scalar x, Scalar y, Scalar z) {
  return Pose(Quat::Identity(), Vec3(x, y, z));
}

/// Rotation angle of q in [0, pi], radians.
Scalar rotation_angle(const Quat& q);

/// Geodesic angle between two rotations, double cover aware.
Scalar rotation_angle_between(const Quat& a, const Quat& b);

/// True when a and b represent the same rotation within tol radians
/// (q and -q compare equal).
bool rotations_equal(const Quat& a, const Quat& b, Scalar tol = 1e-9);

Scalar translation_distance(const Pose& a, const Pose& b);

/// Linear translation + shortest-arc slerp between two stamped poses.
/// Throws std::invalid_argument on a degenerate interval and
/// std::out_of_range when t falls outside [a.time, b.time].
Pose interpolate(const StampedPose& a, const StampedPose& b, double t);

/// Intrinsic Z-Y-X Euler angles: q = Rz(yaw) * Ry(pitch) * Rx(roll).
/// Near pitch = +-pi/2 the decomposition loses precision.
Vec3 to_rpy(const Quat& q);
Quat from_rpy(Scalar roll, Scalar pitch, Scalar yaw);
inline Quat from_rpy(const Vec3& rpy) { return from_rpy(rpy.x(), rpy.y(), rpy.z()); }

std::ostream& operator<<(std::ostream& os, const Pose& p);

}  // namespace lodom
