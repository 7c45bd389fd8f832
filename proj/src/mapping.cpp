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

#include "lodom/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lodom {

void KeyframePolicy::validate() const {
  if (!(translation_threshold > 0.0) || !(rotation_threshold_deg > 0.0)) {
    throw std::invalid_argument("keyframe: thresholds must be strictly positive");
  }
}

bool should_insert(const Pose& pose, const KeyframePolicy& policy,
                   const std::optional<Pose>& last_keyframe) {
  if (!last_keyframe) return true;
  const Scalar translation = translation_distance(pose, *last_keyframe);
  const Scalar rotation_deg =
      rotation_angle_between(pose.rotation, last_keyframe->rotation) * 180.0 /
      M_PI;
  // Inclusive boundaries, with slack for the representation error of motions
  // built exactly at a threshold.
  constexpr Scalar kBoundarySlack = 1e-9;
  return translation >= policy.translation_threshold - kBoundarySlack ||
         rotation_deg >= policy.rotation_threshold_deg - kBoundarySlack;
}

std::size_t MapStore::CellKeyHash::operator()(const CellKey& k) const {
  std::size_t seed = 0;
  for (std::int64_t v : {k.x, k.y, k.z}) {
    seed ^= std::hash<std::int64_t>()(v) + 0x9e3779b97f4a7c15ULL + (seed << 6) +
            (seed >> 2);
  }
  return seed;
}

MapStore::MapStore(Scalar resolution)
    : resolution_(resolution), bucket_size_(4.0) {
  if (!(resolution > 0.0)) {
    throw std::invalid_argument("map: resolution must be positive");
  }
}

MapStore::CellKey MapStore::cell_of(const Vec3& p, Scalar size) const {
  return CellKey{static_cast<std::int64_t>(std::floor(p.x() / size)),
                 static_cast<std::int64_t>(std::floor(p.y() / size)),
                 static_cast<std::int64_t>(std::floor(p.z() / size))};
}

std::size_t MapStore::insert(const PointCloud& cloud_world,
                             const std::vector<Mat3>& covariances,
                             int neighbors_k) {
  if (cloud_world.size() != covariances.size()) {
    throw std::invalid_argument("map insert: covariance count mismatch");
  }
  if (neighbors_k_ == 0) neighbors_k_ = neighbors_k;

  std::size_t added = 0;
  for (std::size_t i = 0; i < cloud_world.size(); ++i) {
    const Vec3& p = cloud_world.positions[i];
    const auto slot = static_cast<std::uint32_t>(points_.size());
    if (!occupied_.emplace(cell_of(p, resolution_), slot).second) {
      continue;  // cell already holds a point
    }
    points_.push_back(p);
    covariances_.push_back(covariances[i]);
    buckets_[cell_of(p, bucket_size_)].push_back(slot);
    ++added;
  }
  ++insertions_;
  return added;
}

EnrichedCloud MapStore::extract_submap(const Vec3& center, Scalar radius) const {
  if (!(radius > 0.0)) {
    throw std::invalid_argument("extract_submap: radius must be positive");
  }
  const Scalar sq_radius = radius * radius;
  const auto reach = static_cast<std::int64_t>(
      std::ceil(radius / bucket_size_));
  const CellKey c = cell_of(center, bucket_size_);

  std::vector<std::uint32_t> hits;
  for (std::int64_t dx = -reach; dx <= reach; ++dx) {
    for (std::int64_t dy = -reach; dy <= reach; ++dy) {
      for (std::int64_t dz = -reach; dz <= reach; ++dz) {
        auto it = buckets_.find(CellKey{c.x + dx, c.y + dy, c.z + dz});
        if (it == buckets_.end()) continue;
        for (std::uint32_t slot : it->second) {
          if ((points_[slot] - center).squaredNorm() <= sq_radius) {
            hits.push_back(slot);
          }
        }
      }
    }
  }
  std::sort(hits.begin(), hits.end());  // global insertion order

  PointCloud cloud;
  cloud.frame = "world";
  cloud.positions.reserve(hits.size());
  std::vector<Mat3> covs;
  covs.reserve(hits.size());
  for (std::uint32_t slot : hits) {
    cloud.positions.push_back(points_[slot]);
    covs.push_back(covariances_[slot]);
  }
  return enriched_from_cache(std::move(cloud), std::move(covs), neighbors_k_);
}

PointCloud MapStore::export_cloud() const {
  PointCloud out;
  out.frame = "world";
  out.positions = points_;
  return out;
}

}  // namespace lodom
