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

#include "lodom/preprocess.hpp"

#include <stdexcept>

namespace lodom {

void FilterConfig::validate() const {
  if (!(range_min >= 0.0) || !(range_min < range_max)) {
    throw std::invalid_argument("preprocess: require 0 <= range_min < range_max");
  }
  if (voxel_enabled && !(voxel_leaf > 0.0)) {
    throw std::invalid_argument("preprocess: voxel_leaf must be positive");
  }
  if (random_enabled && (!(keep_fraction > 0.0) || keep_fraction > 1.0)) {
    throw std::invalid_argument("preprocess: keep_fraction must be in (0, 1]");
  }
}

MdcResult motion_correct(const PointCloud& c, const MotionProvider& motion,
                         double scan_period, MdcReference reference) {
  MdcResult result;
  if (!c.has_time_offsets()) {
    result.cloud = c;
    result.bypassed = true;
    return result;
  }

  const double t_ref =
      reference == MdcReference::kScanEnd ? c.stamp + scan_period : c.stamp;
  const std::optional<Pose> ref_pose = motion(t_ref);

  result.cloud.stamp = t_ref;
  result.cloud.frame = c.frame;
  result.cloud.positions.resize(c.size());

  std::size_t corrected = 0;
  std::optional<double> last_time;
  Pose last_correction;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double t_i = c.stamp + c.time_offsets[i];
    bool ok = false;
    if (ref_pose) {
      if (last_time && *last_time == t_i) {
        result.cloud.positions[i] = last_correction * c.positions[i];
        ok = true;
      } else if (const std::optional<Pose> pose_i = motion(t_i)) {
        last_correction = relative(*ref_pose, *pose_i);
        last_time = t_i;
        result.cloud.positions[i] = last_correction * c.positions[i];
        ok = true;
      }
    }
    if (!ok) result.cloud.positions[i] = c.positions[i];
    corrected += ok ? 1 : 0;
  }
  result.coverage = c.empty() ? 1.0 : static_cast<double>(corrected) /
                                          static_cast<double>(c.size());
  return result;
}

PointCloud apply_filters(const PointCloud& c, const FilterConfig& cfg,
                         std::uint64_t seed) {
  cfg.validate();
  PointCloud out = range_filter(c, cfg.range_min, cfg.range_max);
  if (cfg.voxel_enabled) out = voxel_grid_filter(out, cfg.voxel_leaf);
  if (cfg.random_enabled) out = random_downsample(out, cfg.keep_fraction, seed);
  return out;
}

}  // namespace lodom
