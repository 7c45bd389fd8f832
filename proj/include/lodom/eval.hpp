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

#include "lodom/point_cloud.hpp"
#include "lodom/registration.hpp"

namespace lodom {

/// Time-ordered pose sequence. Construction validates strictly increasing
/// stamps.
struct Trajectory {
  std::vector<StampedPose> poses;

  static Trajectory from_poses(std::vector<StampedPose> poses);
  std::size_t size() const { return poses.size(); }
};

enum class ApeAlignment { kNone, kSe3 };

struct ApeReport {
  Scalar max_error = 0.0;
  Scalar mean_error = 0.0;
  Scalar std_error = 0.0;
  Scalar rmse = 0.0;
  std::size_t matched = 0;
  std::vector<std::pair<double, Scalar>> per_pose;  // (stamp, error)
};

/// Absolute position error: associates nearest stamps within assoc_tol,
/// optionally rigidly aligns est onto gt (least-squares over matched
/// translations, no scale), and reports translation-error statistics. Throws
/// when no stamp pairs associate.
ApeReport ape(const Trajectory& est, const Trajectory& gt, double assoc_tol,
              ApeAlignment alignment = ApeAlignment::kSe3);

struct MapErrorResult {
  Scalar rmse = 0.0;
  bool icp_converged = false;
  Pose alignment;  // transform applied to est before the error pass
};

/// Cloud-to-cloud error: point-to-point ICP pre-alignment (the registration
/// solver with identity covariances), then the RMSE of nearest-neighbor
/// distances from est to gt at the best transform.
MapErrorResult map_error(const PointCloud& est_map, const PointCloud& gt_map,
                         int workers = 1);

struct TimingReport {
  std::size_t count = 0;
  double mean = 0.0;
  double max = 0.0;
  double median = 0.0;
  double realtime_fraction = 0.0;  // share of scans within the scan period
  double drops_per_second = 0.0;
  double bin_width = 0.01;
  std::vector<std::size_t> histogram;  // duration bins of bin_width seconds
};

/// Summary statistics over per-scan processing durations. `span_seconds` is
/// the stream time covered (for the drop rate); an empty input produces an
/// empty report.
TimingReport timing_report(const std::vector<double>& durations,
                           double scan_period = 0.1, std::size_t drops = 0,
                           double span_seconds = 0.0);

}  // namespace lodom
