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

#include <optional>
#include <unordered_map>
#include <vector>

#include "lodom/registration.hpp"

namespace lodom {

/// Insert a keyframe after every translation_threshold meters of translation,
/// or rotation_threshold degrees of rotation (an OR of thresholds).
struct KeyframePolicy {
  Scalar translation_threshold = 1.0;   // meters
  Scalar rotation_threshold_deg = 30.0; // degrees

  void validate() const;
};

/// True when `pose` has moved far enough from the last keyframe; the first
/// scan (no keyframe yet) always inserts.
bool should_insert(const Pose& pose, const KeyframePolicy& policy,
                   const std::optional<Pose>& last_keyframe);

/// Accumulated world map: points deduplicated on a fine voxel grid, with the
/// per-point covariances cached at insertion time for submap reuse.
class MapStore {
 public:
  explicit MapStore(Scalar resolution = 0.001);

  /// Stores the points of a world-frame cloud whose voxel cell is still
  /// empty, along with their covariances. Returns the number of points
  /// actually added.
  std::size_t insert(const PointCloud& cloud_world,
                     const std::vector<Mat3>& covariances, int neighbors_k);

  /// All stored points within `radius` of `center`, in insertion order, with
  /// their cached covariances and a fresh index. An empty result is legal.
  EnrichedCloud extract_submap(const Vec3& center, Scalar radius) const;

  PointCloud export_cloud() const;

  std::size_t size() const { return points_.size(); }
  std::size_t insertion_count() const { return insertions_; }
  Scalar resolution() const { return resolution_; }

  const std::optional<Pose>& last_keyframe() const { return last_keyframe_; }
  void set_last_keyframe(const Pose& pose) { last_keyframe_ = pose; }

 private:
  struct CellKey {
    std::int64_t x, y, z;
    bool operator==(const CellKey&) const = default;
  };
  struct CellKeyHash {
    std::size_t operator()(const CellKey& k) const;
  };

  CellKey cell_of(const Vec3& p, Scalar size) const;

  Scalar resolution_;
  Scalar bucket_size_;
  std::unordered_map<CellKey, std::uint32_t, CellKeyHash> occupied_;
  std::unordered_map<CellKey, std::vector<std::uint32_t>, CellKeyHash> buckets_;
  std::vector<Vec3> points_;
  std::vector<Mat3> covariances_;
  int neighbors_k_ = 0;
  std::size_t insertions_ = 0;
  std::optional<Pose> last_keyframe_;
};

}  // namespace lodom
