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

#include "lodom/pipeline.hpp"

#include <stdexcept>

namespace lodom {

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

void PipelineOptions::validate() const {
  if (!(scan_period > 0.0)) {
    throw std::invalid_argument("pipeline: scan_period must be positive");
  }
  if (!(submap_radius > 0.0)) {
    throw std::invalid_argument("pipeline: submap_radius must be positive");
  }
  if (!(fga_window > 0.0) || !(fga_angle_tol_rad > 0.0)) {
    throw std::invalid_argument("pipeline: FGA window and tolerance must be positive");
  }
  if (!(gap_activation > 0.0)) {
    throw std::invalid_argument("pipeline: gap_activation must be positive");
  }
  filter.validate();
  gicp_s2s.validate();
  gicp_s2m.validate();
  keyframe.validate();
}

Pose apply_fga(const Pose& p) {
  const Vec3 rpy = to_rpy(p.rotation);
  return Pose(from_rpy(0.0, 0.0, rpy.z()),
              Vec3(p.translation.x(), p.translation.y(), 0.0));
}

void FgaMonitor::feed(double time, Scalar roll, Scalar pitch) {
  const bool flat = std::abs(roll) < tol_ && std::abs(pitch) < tol_;
  if (!flat) {
    flat_since_.reset();
    if (active_) {
      active_ = false;
      events_.push_back({time, false});
    }
    return;
  }
  if (!flat_since_) flat_since_ = time;
  if (!active_ && time - *flat_since_ >= window_) {
    active_ = true;
    events_.push_back({time, true});
  }
}

bool DropPolicy::admit(double arrival) {
  if (arrival < busy_until_) {
    ++dropped_;
    return false;
  }
  return true;
}

void DropPolicy::complete(double arrival, double processing_duration) {
  busy_until_ = arrival + processing_duration;
}

Pipeline::Pipeline(const PipelineOptions& options,
                   const std::vector<SourceConfig>& sources,
                   const FusionConfig& fusion)
    : options_(options),
      sources_(sources),
      integrator_(sources, fusion),
      map_(options.map_resolution),
      fga_monitor_(options.fga_window, options.fga_angle_tol_rad) {
  options_.validate();
}

bool Pipeline::fga_active() const {
  switch (options_.fga_mode) {
    case FgaMode::kOff:
      return false;
    case FgaMode::kForcedOn:
      return true;
    case FgaMode::kImuAuto:
      return fga_monitor_.active();
  }
  return false;
}

OdometryOutput Pipeline::emit(double stamp, const Pose& pose,
                              OdometryOutput proto) {
  proto.stamp = stamp;
  proto.pose = pose;
  proto.increment =
      last_emit_stamp_ ? relative(last_emit_pose_, pose) : pose;
  last_emit_stamp_ = stamp;
  last_emit_pose_ = pose;
  current_pose_ = pose;
  return proto;
}

std::optional<OdometryOutput> Pipeline::ingest_measurement(
    const std::string& id, const StampedPose& m, bool allow_gap_emission) {
  integrator_.ingest(id, m);

  if (options_.fga_mode == FgaMode::kImuAuto) {
    for (const SourceConfig& s : sources_) {
      if (s.id == id && s.kind == SourceKind::kRotationOnly) {
        const Pose in_robot = m.pose * inverse(s.extrinsic);
        const Vec3 rpy = to_rpy(in_robot.rotation);
        fga_monitor_.feed(m.time, rpy.x(), rpy.y());
        break;
      }
    }
  }

  if (!allow_gap_emission || !anchor_time_) return std::nullopt;
  if (m.time - *anchor_time_ <= options_.gap_activation) return std::nullopt;

  PriorResult prior = integrator_.compute_prior(*anchor_time_, m.time);
  if (prior.degraded_to_identity || !prior.source_id || *prior.source_id != id) {
    return std::nullopt;  // emit once per update of the prior source
  }
  if (last_emit_stamp_ && m.time <= *last_emit_stamp_) {
    ++emissions_suppressed_;
    return std::nullopt;
  }

  Pose pose = anchor_pose_ * prior.transform;
  if (fga_active()) pose = apply_fga(pose);

  OdometryOutput proto;
  proto.prior_source = prior.source_id;
  proto.gap_emission = true;
  return emit(m.time, pose, std::move(proto));
}

OdometryOutput Pipeline::process_scan(std::vector<PointCloud> clouds,
                                      const std::vector<Pose>& extrinsics) {
  if (clouds.empty() || clouds.size() != extrinsics.size()) {
    throw std::invalid_argument("process_scan: one extrinsic per cloud required");
  }
  const std::size_t scan_index = scan_counter_++;

  OdometryOutput proto;

  // Motion distortion correction per sensor, then merge into the robot frame.
  if (options_.mdc_enabled) {
    double coverage_weighted = 0.0;
    std::size_t total_points = 0;
    bool any_bypassed = false;
    for (std::size_t i = 0; i < clouds.size(); ++i) {
      // Source health is judged at scan end: that is when processing runs and
      // the buffers hold the whole revolution.
      const MotionProvider provider = integrator_.motion_provider(
          clouds[i].stamp + options_.scan_period, extrinsics[i]);
      MdcResult mdc = motion_correct(clouds[i], provider, options_.scan_period,
                                     options_.mdc_reference);
      any_bypassed = any_bypassed || mdc.bypassed;
      coverage_weighted += mdc.coverage * static_cast<double>(clouds[i].size());
      total_points += clouds[i].size();
      clouds[i] = std::move(mdc.cloud);
    }
    proto.mdc_bypassed = any_bypassed;
    proto.mdc_coverage = total_points == 0
                             ? 1.0
                             : coverage_weighted / static_cast<double>(total_points);
  }

  const PointCloud merged = merge(clouds, extrinsics);
  const double t_curr = merged.stamp;

  const PointCloud filtered = apply_filters(
      merged, options_.filter, mix_seed(options_.seed, scan_index));

  PriorResult prior;
  if (anchor_time_) {
    prior = integrator_.compute_prior(*anchor_time_, t_curr);
    prior_histogram_[prior.source_id.value_or("none")]++;
  }
  proto.prior_source = prior.source_id;
  proto.prior_degraded = prior.degraded_to_identity;

  const bool enough_points =
      filtered.size() >= static_cast<std::size_t>(options_.gicp_s2s.neighbors_k);

  if (!anchor_time_) {
    // First scan: the world frame coincides with the robot frame.
    Pose pose = Pose::Identity();
    if (fga_active()) pose = apply_fga(pose);
    if (!enough_points) {
      ++scans_degraded_;
      proto.scan_degraded = true;
      ++scans_processed_;
      return emit(t_curr, pose, std::move(proto));
    }
    EnrichedCloud enriched = enrich(filtered, options_.gicp_s2s);
    PointCloud world_cloud = transform_cloud(enriched.cloud, pose);
    map_.insert(world_cloud, enriched.covariances, enriched.neighbors_k);
    map_.set_last_keyframe(pose);
    prev_scan_ = std::move(enriched);
    anchor_pose_ = pose;
    anchor_time_ = t_curr;
    ++scans_processed_;
    return emit(t_curr, pose, std::move(proto));
  }

  if (!enough_points || !prev_scan_) {
    // Lidar degraded: propagate the pose from the prior and keep the last
    // good scan as the future matching target.
    Pose pose = anchor_pose_ * prior.transform;
    if (fga_active()) pose = apply_fga(pose);
    ++scans_degraded_;
    ++scans_processed_;
    proto.scan_degraded = true;
    return emit(t_curr, pose, std::move(proto));
  }

  EnrichedCloud enriched = enrich(filtered, options_.gicp_s2s);

  RegistrationResult s2s =
      scan_to_scan(enriched, *prev_scan_, prior, options_.gicp_s2s);
  proto.s2s_converged = s2s.converged;
  proto.s2s_residual = s2s.final_residual;
  proto.s2s_iterations = s2s.iterations_used;

  RegistrationResult seed = s2s;
  if (fga_active()) {
    seed.transform = relative(anchor_pose_, apply_fga(anchor_pose_ * s2s.transform));
  }

  const Pose predicted = anchor_pose_ * seed.transform;
  const EnrichedCloud submap =
      map_.extract_submap(predicted.translation, options_.submap_radius);
  RegistrationResult s2m =
      scan_to_submap(enriched, submap, seed, anchor_pose_, options_.gicp_s2m);
  proto.s2m_converged = s2m.converged;
  proto.s2m_residual = s2m.final_residual;
  proto.s2m_iterations = s2m.iterations_used;

  Pose pose = anchor_pose_ * s2m.transform;
  if (fga_active()) pose = apply_fga(pose);

  if (should_insert(pose, options_.keyframe, map_.last_keyframe())) {
    PointCloud world_cloud = transform_cloud(enriched.cloud, pose);
    const Mat3 R = pose.rotation_matrix();
    std::vector<Mat3> world_covs(enriched.covariances.size());
    for (std::size_t i = 0; i < world_covs.size(); ++i) {
      world_covs[i] = R * enriched.covariances[i] * R.transpose();
    }
    map_.insert(world_cloud, world_covs, enriched.neighbors_k);
    map_.set_last_keyframe(pose);
  }

  prev_scan_ = std::move(enriched);
  anchor_pose_ = pose;
  anchor_time_ = t_curr;
  ++scans_processed_;
  return emit(t_curr, pose, std::move(proto));
}

}  // namespace lodom
