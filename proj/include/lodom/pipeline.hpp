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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lodom/fusion.hpp"
#include "lodom/mapping.hpp"
#include "lodom/preprocess.hpp"
#include "lodom/registration.hpp"

namespace lodom {

enum class FgaMode { kOff, kForcedOn, kImuAuto };

struct PipelineOptions {
  double scan_period = 0.1;
  bool mdc_enabled = true;
  MdcReference mdc_reference = MdcReference::kScanEnd;
  FilterConfig filter;
  GicpConfig gicp_s2s;
  GicpConfig gicp_s2m;
  KeyframePolicy keyframe;
  Scalar map_resolution = 0.001;
  Scalar submap_radius = 20.0;
  FgaMode fga_mode = FgaMode::kOff;
  double fga_window = 5.0;          // seconds of flat attitude before activation
  double fga_angle_tol_rad = 3.0 * M_PI / 180.0;
  double gap_activation = 0.25;     // seconds without a scan before prior emissions
  std::uint64_t seed = 0;

  void validate() const;
};

struct OdometryOutput {
  double stamp = 0.0;
  Pose pose;        // X_k in the world frame
  Pose increment;   // motion since the previous emission
  std::optional<std::string> prior_source;
  bool prior_degraded = false;
  bool scan_degraded = false;  // too few points; pose propagated from the prior
  bool gap_emission = false;   // emitted from the prior during a lidar gap
  bool mdc_bypassed = false;
  double mdc_coverage = 1.0;
  bool s2s_converged = false;
  bool s2m_converged = false;
  Scalar s2s_residual = 0.0;
  Scalar s2m_residual = 0.0;
  int s2s_iterations = 0;
  int s2m_iterations = 0;
};

/// Projects a pose onto the flat-ground manifold: z, roll and pitch become
/// exactly zero; x, y and yaw are preserved.
Pose apply_fga(const Pose& p);

/// Sensor-based flat-ground detection: active once |roll| and |pitch| stay
/// below the tolerance for a full window; deactivates on the first violating
/// sample.
class FgaMonitor {
 public:
  struct Event {
    double time = 0.0;
    bool active = false;
  };

  FgaMonitor(double window, double angle_tol_rad)
      : window_(window), tol_(angle_tol_rad) {}

  void feed(double time, Scalar roll, Scalar pitch);
  bool active() const { return active_; }
  const std::vector<Event>& events() const { return events_; }

 private:
  double window_;
  double tol_;
  std::optional<double> flat_since_;
  bool active_ = false;
  std::vector<Event> events_;
};

/// Realizes the no-buffering rule: a scan that arrives while the previous one
/// is still being processed is dropped and counted.
class DropPolicy {
 public:
  /// True when the scan arriving at `arrival` (stream seconds) can start.
  bool admit(double arrival);

  /// Marks the admitted scan's processing window.
  void complete(double arrival, double processing_duration);

  std::size_t dropped() const { return dropped_; }

 private:
  double busy_until_ = -std::numeric_limits<double>::infinity();
  std::size_t dropped_ = 0;
};

/// The full odometry loop: preprocess, prior, scan-to-scan, scan-to-submap,
/// flat-ground projection, pose update, map maintenance.
class Pipeline {
 public:
  Pipeline(const PipelineOptions& options, const std::vector<SourceConfig>& sources,
           const FusionConfig& fusion);

  /// Feeds one odometry/IMU measurement. When no scan has arrived for longer
  /// than gap_activation (and `allow_gap_emission` holds), a prior-propagated
  /// pose is emitted so odometry never stops during lidar outages.
  std::optional<OdometryOutput> ingest_measurement(const std::string& id,
                                                   const StampedPose& m,
                                                   bool allow_gap_emission = true);

  /// Processes one scan group (one cloud per lidar, sensor frames).
  OdometryOutput process_scan(std::vector<PointCloud> clouds,
                              const std::vector<Pose>& extrinsics);

  bool fga_active() const;

  const MapStore& map() const { return map_; }
  const SensorIntegrator& integrator() const { return integrator_; }
  Pose pose() const { return current_pose_; }
  bool has_scans() const { return anchor_time_.has_value(); }
  std::optional<double> last_scan_time() const { return anchor_time_; }

  std::size_t scans_processed() const { return scans_processed_; }
  std::size_t scans_degraded() const { return scans_degraded_; }
  std::size_t emissions_suppressed() const { return emissions_suppressed_; }
  const std::map<std::string, std::size_t>& prior_histogram() const {
    return prior_histogram_;
  }
  FgaMonitor& fga_monitor() { return fga_monitor_; }

 private:
  OdometryOutput emit(double stamp, const Pose& pose, OdometryOutput proto);

  PipelineOptions options_;
  std::vector<SourceConfig> sources_;
  SensorIntegrator integrator_;
  MapStore map_;
  FgaMonitor fga_monitor_;

  std::optional<EnrichedCloud> prev_scan_;
  Pose anchor_pose_;                  // pose at the last scan that updated prev_scan_
  std::optional<double> anchor_time_;
  Pose current_pose_;
  std::optional<double> last_emit_stamp_;
  Pose last_emit_pose_;

  std::size_t scans_processed_ = 0;
  std::size_t scans_degraded_ = 0;
  std::size_t emissions_suppressed_ = 0;
  std::size_t scan_counter_ = 0;
  std::map<std::string, std::size_t> prior_histogram_;
};

}  // namespace lodom
