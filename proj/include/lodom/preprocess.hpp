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

#include <functional>
#include <optional>

#include "lodom/point_cloud.hpp"

namespace lodom {

/// Pose of a moving frame at an absolute stream time; nullopt when the time
/// cannot be bracketed by the underlying data.
using MotionProvider = std::function<std::optional<Pose>(double)>;

struct FilterConfig {
  Scalar range_min = 0.5;
  Scalar range_max = 100.0;
  bool voxel_enabled = true;
  Scalar voxel_leaf = 0.1;
  bool random_enabled = true;
  Scalar keep_fraction = 0.1;

  /// Throws std::invalid_argument when an enabled stage has invalid
  /// parameters.
  void validate() const;
};

enum class MdcReference { kScanEnd, kScanStart };

struct MdcResult {
  PointCloud cloud;
  double coverage = 1.0;  // fraction of points the provider could correct
  bool bypassed = false;  // scan had no per-point timing and was left untouched
};

/// Re-expresses every point in the frame the sensor occupies at the scan
/// reference time: position' = relative(pose(t_ref), pose(stamp + offset))
/// applied to position. The output is restamped to t_ref and loses its
/// per-point offsets (all points are now simultaneous). Points whose capture
/// time the provider cannot bracket keep their raw coordinates and lower the
/// reported coverage.
MdcResult motion_correct(const PointCloud& c, const MotionProvider& motion,
                         double scan_period,
                         MdcReference reference = MdcReference::kScanEnd);

/// Range gate, then voxel grid, then random downsampling, each stage only if
/// enabled. The order is fixed.
PointCloud apply_filters(const PointCloud& c, const FilterConfig& cfg,
                         std::uint64_t seed);

}  // namespace lodom
