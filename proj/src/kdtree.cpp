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

#include "lodom/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace lodom {

namespace {

// Strict total order on neighbors: by distance, then by index. Used both for
// the worst-on-top heap and for the final ascending sort.
inline bool neighbor_less(const KdTree::Neighbor& a, const KdTree::Neighbor& b) {
  return a.sq_dist != b.sq_dist ? a.sq_dist < b.sq_dist : a.index < b.index;
}

}  // namespace

KdTree::KdTree(const std::vector<Vec3>& points) {
  if (points.empty()) {
    throw std::invalid_argument("KdTree: cannot index an empty cloud");
  }
  const auto n = static_cast<std::uint32_t>(points.size());
  original_.resize(n);
  std::iota(original_.begin(), original_.end(), Index{0});
  nodes_.reserve(2 * n / kLeafSize + 2);

  // Partition an index permutation, then materialize reordered point storage
  // for cache-friendly leaf scans.
  build_points_ = &points;
  root_ = build(0, n);
  build_points_ = nullptr;

  points_.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) points_[i] = points[original_[i]];
}

std::uint32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto node_index = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  if (end - begin <= kLeafSize) {
    nodes_[node_index] = Node{0.0, -1, begin, end};
    return node_index;
  }

  const std::vector<Vec3>& pts = *build_points_;
  Vec3 lo = pts[original_[begin]], hi = lo;
  for (std::uint32_t i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(pts[original_[i]]);
    hi = hi.cwiseMax(pts[original_[i]]);
  }
  int dim = 0;
  (hi - lo).maxCoeff(&dim);

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(original_.begin() + begin, original_.begin() + mid,
                   original_.begin() + end, [&](Index a, Index b) {
                     return pts[a][dim] != pts[b][dim] ? pts[a][dim] < pts[b][dim]
                                                       : a < b;
                   });

  const Scalar split = pts[original_[mid]][dim];
  const std::uint32_t left = build(begin, mid);
  const std::uint32_t right = build(mid, end);
  nodes_[node_index] = Node{split, dim, left, right};
  return node_index;
}

void KdTree::knn(const Vec3& query, int k, std::vector<Neighbor>& out) const {
  out.clear();
  if (k <= 0) return;
  const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(k),
                                                 points_.size());

  struct Visit {
    std::uint32_t node;
    Scalar axis_sq;
  };
  Visit stack[64];
  int top = 0;
  stack[top++] = {root_, 0.0};

  while (top > 0) {
    const Visit v = stack[--top];
    // Equal axis distance cannot be pruned: a tied point with a lower index
    // may still displace the current worst neighbor.
    if (out.size() == want && v.axis_sq > out.front().sq_dist) continue;
    const Node& node = nodes_[v.node];

    if (node.dim < 0) {
      for (std::uint32_t i = node.left; i < node.right; ++i) {
        const Scalar d2 = (points_[i] - query).squaredNorm();
        const Neighbor cand{original_[i], d2};
        if (out.size() < want) {
          out.push_back(cand);
          std::push_heap(out.begin(), out.end(), neighbor_less);
        } else if (neighbor_less(cand, out.front())) {
          std::pop_heap(out.begin(), out.end(), neighbor_less);
          out.back() = cand;
          std::push_heap(out.begin(), out.end(), neighbor_less);
        }
      }
      continue;
    }

    const Scalar delta = query[node.dim] - node.split;
    const std::uint32_t near = delta < 0.0 ? node.left : node.right;
    const std::uint32_t far = delta < 0.0 ? node.right : node.left;
    stack[top++] = {far, delta * delta};
    stack[top++] = {near, v.axis_sq};
  }

  std::sort_heap(out.begin(), out.end(), neighbor_less);
}

KdTree::Neighbor KdTree::nearest(const Vec3& query) const {
  Neighbor best{-1, std::numeric_limits<Scalar>::infinity()};

  struct Visit {
    std::uint32_t node;
    Scalar axis_sq;
  };
  Visit stack[64];
  int top = 0;
  stack[top++] = {root_, 0.0};

  while (top > 0) {
    const Visit v = stack[--top];
    if (v.axis_sq > best.sq_dist) continue;
    const Node& node = nodes_[v.node];

    if (node.dim < 0) {
      for (std::uint32_t i = node.left; i < node.right; ++i) {
        const Scalar d2 = (points_[i] - query).squaredNorm();
        if (d2 < best.sq_dist || (d2 == best.sq_dist && original_[i] < best.index)) {
          best = Neighbor{original_[i], d2};
        }
      }
      continue;
    }

    const Scalar delta = query[node.dim] - node.split;
    const std::uint32_t near = delta < 0.0 ? node.left : node.right;
    const std::uint32_t far = delta < 0.0 ? node.right : node.left;
    stack[top++] = {far, delta * delta};
    stack[top++] = {near, v.axis_sq};
  }
  return best;
}

}  // namespace lodom
