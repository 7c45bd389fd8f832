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

#include <vector>

#include "lodom/types.hpp"

namespace lodom {

/// Exact k-d tree over 3D points. Queries return the true k nearest
/// neighbors by Euclidean distance; distance ties resolve toward the lower
/// original index.
class KdTree {
 public:
  struct Neighbor {
    Index index = -1;
    Scalar sq_dist = 0.0;
  };

  /// Builds the tree. Throws std::invalid_argument on an empty input.
  explicit KdTree(const std::vector<Vec3>& points);

  std::size_t size() const { return points_.size(); }

  /// Exact k nearest neighbors, sorted by (distance, index). `out` is reused
  /// scratch; k is clamped to size().
  void knn(const Vec3& query, int k, std::vector<Neighbor>& out) const;

  Neighbor nearest(const Vec3& query) const;

 private:
  struct Node {
    Scalar split = 0.0;
    std::int32_t dim = -1;  // -1 marks a leaf
    std::uint32_t left = 0;  // child node, or range begin for leaves
    std::uint32_t right = 0;  // child node, or range end for leaves
  };

  std::uint32_t build(std::uint32_t begin, std::uint32_t end);

  static constexpr std::uint32_t kLeafSize = 16;

  std::vector<Vec3> points_;        // reordered for locality
  std::vector<Index> original_;     // reordered slot -> original index
  std::vector<Node> nodes_;
  std::uint32_t root_ = 0;
  const std::vector<Vec3>* build_points_ = nullptr;  // only set during build()
};

}  // namespace lodom
