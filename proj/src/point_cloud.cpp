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

#include "lodom/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <unordered_map>

namespace lodom {

namespace {

struct VoxelKey {
  std::int64_t x, y, z;
  bool operator==(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const {
    std::size_t seed = 0;
    for (std::int64_t v : {k.x, k.y, k.z}) {
      seed ^= std::hash<std::int64_t>()(v) + 0x9e3779b97f4a7c15ULL + (seed << 6) +
              (seed >> 2);
    }
    return seed;
  }
};

VoxelKey voxel_of(const Vec3& p, Scalar leaf) {
  return VoxelKey{static_cast<std::int64_t>(std::floor(p.x() / leaf)),
                  static_cast<std::int64_t>(std::floor(p.y() / leaf)),
                  static_cast<std::int64_t>(std::floor(p.z() / leaf))};
}

}  // namespace

PointCloud transform_cloud(const PointCloud& c, const Pose& p) {
  PointCloud out;
  out.stamp = c.stamp;
  out.frame = c.frame;
  out.time_offsets = c.time_offsets;
  out.positions.resize(c.positions.size());
  const Mat3 R = p.rotation_matrix();
  for (std::size_t i = 0; i < c.positions.size(); ++i) {
    out.positions[i] = R * c.positions[i] + p.translation;
  }
  return out;
}

PointCloud voxel_grid_filter(const PointCloud& c, Scalar leaf) {
  if (!(leaf > 0.0)) {
    throw std::invalid_argument("voxel_grid_filter: leaf size must be positive");
  }
  struct Accum {
    Vec3 sum = Vec3::Zero();
    double offset_sum = 0.0;
    std::size_t count = 0;
    std::size_t order = 0;
  };
  std::unordered_map<VoxelKey, Accum, VoxelKeyHash> voxels;
  voxels.reserve(c.size());
  std::size_t next_order = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    Accum& a = voxels[voxel_of(c.positions[i], leaf)];
    if (a.count == 0) a.order = next_order++;
    a.sum += c.positions[i];
    if (c.has_time_offsets()) a.offset_sum += c.time_offsets[i];
    ++a.count;
  }

  PointCloud out;
  out.stamp = c.stamp;
  out.frame = c.frame;
  out.positions.resize(voxels.size());
  if (c.has_time_offsets()) out.time_offsets.resize(voxels.size());
  for (const auto& [key, a] : voxels) {
    out.positions[a.order] = a.sum / static_cast<Scalar>(a.count);
    if (c.has_time_offsets()) {
      out.time_offsets[a.order] = a.offset_sum / static_cast<double>(a.count);
    }
  }
  return out;
}

PointCloud random_downsample(const PointCloud& c, Scalar keep_fraction,
                             std::uint64_t seed) {
  if (!(keep_fraction > 0.0) || keep_fraction > 1.0) {
    throw std::invalid_argument("random_downsample: keep_fraction must be in (0, 1]");
  }
  const std::size_t n = c.size();
  const auto m = static_cast<std::size_t>(std::llround(keep_fraction * static_cast<Scalar>(n)));
  if (m >= n) return c;

  // Reservoir pass over the point indices, then emit in input order.
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> reservoir(m);
  for (std::size_t i = 0; i < m; ++i) reservoir[i] = i;
  for (std::size_t i = m; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    const std::size_t j = pick(rng);
    if (j < m) reservoir[j] = i;
  }
  std::sort(reservoir.begin(), reservoir.end());

  PointCloud out;
  out.stamp = c.stamp;
  out.frame = c.frame;
  out.positions.reserve(m);
  if (c.has_time_offsets()) out.time_offsets.reserve(m);
  for (std::size_t idx : reservoir) {
    out.positions.push_back(c.positions[idx]);
    if (c.has_time_offsets()) out.time_offsets.push_back(c.time_offsets[idx]);
  }
  return out;
}

PointCloud range_filter(const PointCloud& c, Scalar min_r, Scalar max_r) {
  if (!(min_r >= 0.0) || !(min_r < max_r)) {
    throw std::invalid_argument("range_filter: require 0 <= min_r < max_r");
  }
  PointCloud out;
  out.stamp = c.stamp;
  out.frame = c.frame;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Vec3& p = c.positions[i];
    if (!p.allFinite()) continue;
    const Scalar r = p.norm();
    if (r < min_r || r > max_r) continue;
    out.positions.push_back(p);
    if (c.has_time_offsets()) out.time_offsets.push_back(c.time_offsets[i]);
  }
  return out;
}

PointCloud merge(const std::vector<PointCloud>& clouds,
                 const std::vector<Pose>& extrinsics) {
  if (clouds.size() != extrinsics.size()) {
    throw std::invalid_argument("merge: clouds and extrinsics length mismatch");
  }
  PointCloud out;
  if (clouds.empty()) return out;
  out.stamp = clouds.front().stamp;
  out.frame = "robot";

  bool all_timed = true;
  std::size_t total = 0;
  for (const PointCloud& c : clouds) {
    total += c.size();
    if (!c.empty() && !c.has_time_offsets()) all_timed = false;
  }
  out.positions.reserve(total);
  if (all_timed) out.time_offsets.reserve(total);

  for (std::size_t ci = 0; ci < clouds.size(); ++ci) {
    const PointCloud& c = clouds[ci];
    const Mat3 R = extrinsics[ci].rotation_matrix();
    const Vec3& t = extrinsics[ci].translation;
    const double stamp_shift = c.stamp - out.stamp;
    for (std::size_t i = 0; i < c.size(); ++i) {
      out.positions.push_back(R * c.positions[i] + t);
      if (all_timed) out.time_offsets.push_back(stamp_shift + c.time_offsets[i]);
    }
  }
  return out;
}

}  // namespace lodom
