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

#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "lodom/geometry.hpp"
#include "lodom/preprocess.hpp"

namespace lodom {

enum class SourceKind { kFullOdometry, kRotationOnly };

struct SourceConfig {
  std::string id;
  SourceKind kind = SourceKind::kFullOdometry;
  int priority = 0;  // lower number wins
  Pose extrinsic;    // source frame expressed in the robot frame
  double expected_rate = 50.0;  // Hz, informational
};

struct FusionConfig {
  double health_window = 2.0;      // seconds over which the rate check runs
  double min_rate = 1.0;           // Hz required to count as healthy
  double buffer_span = 30.0;       // seconds of history retained per source
  double bracket_tolerance = 0.02; // hold-last window past the newest stamp
  double late_tolerance = 0.01;    // out-of-order arrivals inserted within this

  void validate() const;
};

/// The prior transform between two lidar timestamps, and where it came from.
struct PriorResult {
  Pose transform;
  std::optional<std::string> source_id;
  bool degraded_to_identity = false;
};

/// Time-ordered pose buffer for one odometry or IMU source. Measurements are
/// mapped into the robot frame on ingest; rotation-only sources never store a
/// translation. Safe for one concurrent feeder plus readers.
class SourceBuffer {
 public:
  SourceBuffer(SourceConfig config, FusionConfig fusion);

  /// Buffers a measurement. Out-of-order arrivals within late_tolerance are
  /// inserted in order; anything older (or duplicating a stamp) is dropped
  /// and counted, never thrown.
  void ingest(const StampedPose& m);

  /// Rate check: at least ceil(min_rate * health_window) messages inside
  /// [now - health_window, now].
  bool is_healthy(double now) const;

  /// Interpolated pose at t. Holds the newest pose for queries up to
  /// bracket_tolerance past it; anything else outside the buffered span
  /// yields nullopt (never extrapolates).
  std::optional<Pose> sample(double t) const;

  bool can_bracket(double t) const;

  const SourceConfig& config() const { return config_; }
  std::size_t size() const;
  std::size_t dropped() const;
  std::optional<double> newest_time() const;

 private:
  SourceConfig config_;
  FusionConfig fusion_;
  mutable std::mutex mutex_;
  std::deque<StampedPose> buffer_;
  std::size_t dropped_ = 0;
};

/// Owns the prioritized source buffers and produces the GICP seed transform
/// between consecutive lidar timestamps.
class SensorIntegrator {
 public:
  SensorIntegrator(const std::vector<SourceConfig>& sources, FusionConfig config);

  /// Routes a measurement to its source buffer; unknown ids throw.
  void ingest(const std::string& id, const StampedPose& m);

  /// The healthy source with the best (lowest) priority, by the rate rule
  /// alone; nullopt when everything is down.
  std::optional<std::string> select_source(double now) const;

  /// Relative motion of the best usable source between t_prev and t_curr.
  /// Sources are tried in priority order; one must be healthy at t_curr and
  /// able to bracket both times, else the result degrades to identity.
  PriorResult compute_prior(double t_prev, double t_curr) const;

  /// Pose provider for motion correction of a sensor mounted at `extrinsic`:
  /// t -> Y(t) * extrinsic using the source compute_prior would pick around
  /// `now`. Returns an always-empty provider when no source is usable.
  MotionProvider motion_provider(double now, const Pose& extrinsic) const;

  const SourceBuffer* find(const std::string& id) const;
  std::vector<const SourceBuffer*> buffers() const;

 private:
  const SourceBuffer* pick_for_interval(double t_prev, double t_curr) const;

  FusionConfig config_;
  std::vector<std::unique_ptr<SourceBuffer>> sources_;  // sorted by priority
};

}  // namespace lodom
