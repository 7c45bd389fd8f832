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

#include <memory>
#include <vector>

#include "lodom/fusion.hpp"
#include "lodom/kdtree.hpp"
#include "lodom/point_cloud.hpp"

namespace lodom {

struct GicpConfig {
  int max_iterations = 20;
  Scalar correspondence_max_dist = 1.0;  // meters
  Scalar translation_epsilon = 1e-4;     // meters
  Scalar rotation_epsilon = 1e-4;        // radians
  int neighbors_k = 20;                  // neighborhood for covariance
  int workers = 4;
  Scalar covariance_floor = 1e-3;        // smallest regularized eigenvalue

  void validate() const;
};

/// A cloud with per-point surface covariances (plane-to-plane model) and a
/// spatial index, ready for alignment.
struct EnrichedCloud {
  PointCloud cloud;
  std::vector<Mat3> covariances;
  std::shared_ptr<const KdTree> index;
  int neighbors_k = 0;  // k the covariances were built with; 0 = unspecified

  std::size_t size() const { return cloud.size(); }
  bool empty() const { return cloud.empty(); }
};

struct RegistrationResult {
  Pose transform;
  bool converged = false;
  int iterations_used = 0;
  Scalar final_residual = 0.0;  // mean Mahalanobis residual, m^2
  Scalar correspondence_fraction = 0.0;
  bool skipped = false;  // scan-to-submap was a no-op (empty submap)

  // Per accepted iteration: mean residual on that iteration's correspondence
  // set before and after the accepted step.
  struct IterationTrace {
    Scalar pre_step = 0.0;
    Scalar post_step = 0.0;
    std::size_t pairs = 0;
  };
  std::vector<IterationTrace> trace;
};

/// Estimates one covariance per point from its neighbors_k nearest neighbors
/// and regularizes the eigenvalues to (covariance_floor, 1, 1). The result is
/// identical for any worker count. Throws when the cloud has fewer than
/// neighbors_k points.
EnrichedCloud enrich(const PointCloud& c, const GicpConfig& cfg);

/// Wraps a cloud whose covariances are already known (map cache path); builds
/// the index unless the cloud is empty.
EnrichedCloud enriched_from_cache(PointCloud c, std::vector<Mat3> covariances,
                                  int neighbors_k);

/// Plane-to-plane GICP: iterates nearest-neighbor correspondence under the
/// current transform and a damped Gauss-Newton step on SE(3), starting from
/// `guess`. Zero correspondences on the first iteration yield a non-converged
/// result echoing the guess.
RegistrationResult gicp_align(const EnrichedCloud& source,
                              const EnrichedCloud& target, const Pose& guess,
                              const GicpConfig& cfg);

/// Stage one: aligns the current scan against the previous one, seeded by the
/// sensor-integration prior (identity when degraded).
RegistrationResult scan_to_scan(const EnrichedCloud& curr,
                                const EnrichedCloud& prev,
                                const PriorResult& prior, const GicpConfig& cfg);

/// Stage two: refines the incremental transform against a world-frame submap.
/// `prev_pose` is the previous robot pose in the world; the returned transform
/// stays incremental (pose update is prev_pose * transform). An empty submap
/// returns the seed unchanged with `skipped` set.
RegistrationResult scan_to_submap(const EnrichedCloud& curr,
                                  const EnrichedCloud& submap_world,
                                  const RegistrationResult& seed,
                                  const Pose& prev_pose, const GicpConfig& cfg);

namespace detail {

struct Correspondence {
  std::uint32_t source = 0;
  std::uint32_t target = 0;
  Mat3 mahalanobis = Mat3::Identity();  // frozen when the pair is formed
};

/// Correspondences and their Mahalanobis weights under transform T.
std::vector<Correspondence> find_correspondences(const EnrichedCloud& source,
                                                 const EnrichedCloud& target,
                                                 const Pose& transform,
                                                 const GicpConfig& cfg);

/// Mean Mahalanobis cost over `pairs` at T(delta) = Pose(exp(delta_rot),
/// delta_trans) * transform, with the pairs' frozen weights. delta packs
/// translation first.
Scalar cost_at(const EnrichedCloud& source, const EnrichedCloud& target,
               const std::vector<Correspondence>& pairs, const Pose& transform,
               const Vec6& delta, int workers);

/// Mean cost and its analytic gradient with respect to delta at delta = 0.
void cost_and_gradient(const EnrichedCloud& source, const EnrichedCloud& target,
                       const std::vector<Correspondence>& pairs,
                       const Pose& transform, int workers, Scalar* cost,
                       Vec6* gradient);

Quat exp_so3(const Vec3& omega);

}  // namespace detail

}  // namespace lodom
