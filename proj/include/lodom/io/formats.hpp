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

#include <stdexcept>
#include <string>
#include <vector>

#include "lodom/geometry.hpp"
#include "lodom/point_cloud.hpp"

namespace lodom::io {

/// Raised on malformed files or configuration; the CLI maps it to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Trajectory / odometry / IMU log: one record per line,
/// `stamp tx ty tz qx qy qz qw` (translation meters, quaternion last).
/// Lines starting with '#' are comments. Stamps must be strictly increasing.
void write_pose_log(const std::string& path, const std::vector<StampedPose>& poses);
std::vector<StampedPose> read_pose_log(const std::string& path);

enum class CloudFormat { kAscii, kBinary };

/// Cloud log: a sequence of scans. ASCII blocks are a `stamp frame count`
/// header followed by `x y z time_offset` lines; the binary variant packs the
/// same fields little-endian. Scans without per-point timing are written with
/// a zero offset column and read back as untimed.
void write_cloud_log(const std::string& path, const std::vector<PointCloud>& clouds,
                     CloudFormat format);
std::vector<PointCloud> read_cloud_log(const std::string& path, CloudFormat format);

/// `.bin` means binary; anything else is ASCII.
CloudFormat cloud_format_for_path(const std::string& path);

}  // namespace lodom::io
