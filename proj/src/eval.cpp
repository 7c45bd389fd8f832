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

#include "lodom/eval.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lodom/kdtree.hpp"

namespace lodom {

Trajectory Trajectory::from_poses(std::vector<StampedPose> poses) {
  for (std::size_t i = 1; i < poses.size(); ++i) {
    if (!(poses[i - 1].time < poses[i].time)) {
      throw std::invalid_argument(
          "trajectory: stamps must be strictly increasing (entry " +
          std::to_string(i) + ")");
    }
  }
  return Trajectory{std::move(poses)};
}

ApeReport ape(const Trajectory& est, const Trajectory& gt, double assoc_tol,
              ApeAlignment alignment) {
  if (est.poses.empty() || gt.poses.empty()) {
    throw std::invalid_argument("ape: empty trajectory");
  }

  // Associate each estimate with the nearest ground-truth stamp within tol.
  std::vector<std::pair<Vec3, Vec3>> matched;  // (est, gt) translations
  std::vector<double> stamps;
  for (const StampedPose& e : est.poses) {
    auto hi = std::lower_bound(
        gt.poses.begin(), gt.poses.end(), e.time,
        [](const StampedPose& a, double t) { return a.time < t; });
    const StampedPose* best = nullptr;
    if (hi != gt.poses.end()) best = &*hi;
    if (hi != gt.poses.begin()) {
      const StampedPose* lo = &*std::prev(hi);
      if (best == nullptr ||
          std::abs(lo->time - e.time) <= std::abs(best->time - e.time)) {
        best = lo;
      }
    }
    if (best != nullptr && std::abs(best->time - e.time) <= assoc_tol) {
      matched.emplace_back(e.pose.translation, best->pose.translation);
      stamps.push_back(e.time);
    }
  }
  if (matched.empty()) {
    throw std::runtime_error("ape: no stamp pairs within association tolerance");
  }

  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();
  if (alignment == ApeAlignment::kSe3) {
    Eigen::Matrix3Xd src(3, matched.size()), dst(3, matched.size());
    for (std::size_t i = 0; i < matched.size(); ++i) {
      src.col(static_cast<Eigen::Index>(i)) = matched[i].first;
      dst.col(static_cast<Eigen::Index>(i)) = matched[i].second;
    }
    const Eigen::Matrix4d T = Eigen::umeyama(src, dst, false);
    R = T.topLeftCorner<3, 3>();
    t = T.topRightCorner<3, 1>();
  }

  ApeReport report;
  report.matched = matched.size();
  report.per_pose.reserve(matched.size());
  Scalar sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < matched.size(); ++i) {
    const Scalar err = (R * matched[i].first + t - matched[i].second).norm();
    report.max_error = std::max(report.max_error, err);
    sum += err;
    sum_sq += err * err;
    report.per_pose.emplace_back(stamps[i], err);
  }
  const auto n = static_cast<Scalar>(matched.size());
  report.mean_error = sum / n;
  report.rmse = std::sqrt(sum_sq / n);
  const Scalar var = std::max(0.0, sum_sq / n - report.mean_error * report.mean_error);
  report.std_error = std::sqrt(var);
  return report;
}

MapErrorResult map_error(const PointCloud& est_map, const PointCloud& gt_map,
                         int workers) {
  if (est_map.empty() || gt_map.empty()) {
    throw std::invalid_argument("map_error: empty cloud");
  }

  // Point-to-point ICP: identity covariances make the Mahalanobis weight a
  // constant 0.5 * I, so the GICP solver degenerates to plain ICP.
  const std::vector<Mat3> est_cov(est_map.size(), Mat3::Identity());
  const std::vector<Mat3> gt_cov(gt_map.size(), Mat3::Identity());
  const EnrichedCloud est = enriched_from_cache(est_map, est_cov, 0);
  const EnrichedCloud gt = enriched_from_cache(gt_map, gt_cov, 0);

  GicpConfig icp;
  icp.max_iterations = 50;
  icp.correspondence_max_dist = 5.0;
  icp.translation_epsilon = 1e-6;
  icp.rotation_epsilon = 1e-6;
  icp.workers = workers;

  const RegistrationResult reg = gicp_align(est, gt, Pose::Identity(), icp);

  MapErrorResult result;
  result.icp_converged = reg.converged;
  result.alignment = reg.transform;

  const Mat3 R = reg.transform.rotation_matrix();
  const Vec3 t = reg.transform.translation;
  Scalar sum_sq = 0.0;
  for (const Vec3& p : est_map.positions) {
    const KdTree::Neighbor nn = gt.index->nearest(R * p + t);
    sum_sq += nn.sq_dist;
  }
  result.rmse = std::sqrt(sum_sq / static_cast<Scalar>(est_map.size()));
  return result;
}

TimingReport timing_report(const std::vector<double>& durations,
                           double scan_period, std::size_t drops,
                           double span_seconds) {
  TimingReport report;
  report.count = durations.size();
  if (span_seconds > 0.0) {
    report.drops_per_second = static_cast<double>(drops) / span_seconds;
  }
  if (durations.empty()) return report;

  std::vector<double> sorted = durations;
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  std::size_t realtime = 0;
  for (double d : durations) {
    sum += d;
    if (d <= scan_period) ++realtime;
  }
  report.mean = sum / static_cast<double>(durations.size());
  report.max = sorted.back();
  const std::size_t mid = sorted.size() / 2;
  report.median = sorted.size() % 2 == 1
                      ? sorted[mid]
                      : 0.5 * (sorted[mid - 1] + sorted[mid]);
  report.realtime_fraction =
      static_cast<double>(realtime) / static_cast<double>(durations.size());

  const auto bins = static_cast<std::size_t>(
      std::floor(report.max / report.bin_width)) + 1;
  report.histogram.assign(bins, 0);
  for (double d : durations) {
    auto bin = static_cast<std::size_t>(std::floor(d / report.bin_width));
    bin = std::min(bin, bins - 1);
    ++report.histogram[bin];
  }
  return report;
}

}  // namespace lodom
