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

#include <string>
#include <vector>

#include "lodom/geometry.hpp"
#include "lodom/types.hpp"

namespace lodom {

/// A stamped cloud of 3D points expressed in one frame.
///
/// `time_offsets` holds per-point capture times relative to `stamp`. An empty
/// vector means the scan carries no per-point timing (raw snapshot); otherwise
/// it has one entry per point.
struct PointCloud {
  double stamp = 0.0;
  std::string frame = "robot";
  std::vector<Vec3> positions;
  std::vector<double> time_offsets;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }
  bool has_time_offsets() const { return !time_offsets.empty(); }
};

/// Rigidly transforms every position; stamp, frame metadata and time offsets
/// are preserved.
PointCloud transform_cloud(const PointCloud& c, const Pose& p);

/// Replaces the points of each occupied voxel by their centroid. Output order
/// is the first-seen order of the voxels. Throws std::invalid_argument when
/// leaf <= 0.
PointCloud voxel_grid_filter(const PointCloud& c, Scalar leaf);

/// Keeps round(keep_fraction * size) points, chosen by a seeded reservoir
/// pass; surviving points keep their input order. keep_fraction must lie in
/// (0, 1].
PointCloud random_downsample(const PointCloud& c, Scalar keep_fraction,
                             std::uint64_t seed);

/// Retains points with min_r <= |position| <= max_r and finite coordinates.
PointCloud range_filter(const PointCloud& c, Scalar min_r, Scalar max_r);

/// Transforms each cloud by its extrinsic into the common frame and
/// concatenates. Output stamp is the stamp of the first cloud; per-point time
/// offsets are re-expressed relative to it and kept only when every input
/// carries them.
PointCloud merge(const std::vector<PointCloud>& clouds,
                 const std::vector<Pose>& extrinsics);

}  // namespace lodom
