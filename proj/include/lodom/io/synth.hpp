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

#include <optional>
#include <string>
#include <vector>

#include "lodom/io/dataset.hpp"

namespace lodom::io {

/// World geometry: axis-aligned boxes (rays hit inner or outer faces) and
/// bounded rectangles. A corridor is sugar for an elongated box.
struct WorldSpec {
  struct Box {
    Vec3 min = Vec3::Zero();
    Vec3 max = Vec3::Zero();
  };
  struct Rect {
    Vec3 origin = Vec3::Zero();  // one corner
    Vec3 u = Vec3::Zero();       // first edge
    Vec3 v = Vec3::Zero();       // second edge
  };
  std::vector<Box> boxes;
  std::vector<Rect> rects;
};

/// Piecewise constant-velocity trajectory through stamped waypoints
/// (lerp + slerp between neighbors, clamped outside).
struct TrajectorySpec {
  std::vector<StampedPose> waypoints;

  Pose sample(double t) const;
};

struct LidarSpec {
  std::string id = "lidar0";
  Pose extrinsic;
  double rate = 10.0;         // scans per second
  double scan_period = 0.1;   // seconds per revolution
  int azimuth_steps = 180;
  int elevation_rings = 8;
  double elevation_min_deg = -15.0;
  double elevation_max_deg = 15.0;
  double range_min = 0.1;
  double range_max = 100.0;
  double noise_sigma = 0.0;   // meters, along the ray
  bool per_point_timing = true;
  bool binary = false;        // cloud log encoding
};

struct OdomSourceSpec {
  std::string id = "wio";
  SourceKind kind = SourceKind::kFullOdometry;
  int priority = 0;
  double rate = 50.0;
  double phase = 0.01;  // first sample time; keeps stamps off the lidar grid
  double noise_sigma_translation = 0.0;  // meters per sample
  double noise_sigma_rotation_deg = 0.0; // degrees per sample
  Pose extrinsic;
};

struct SynthSpec {
  WorldSpec world;
  TrajectorySpec trajectory;
  std::vector<LidarSpec> lidars;
  std::vector<OdomSourceSpec> odometry;
  double duration = 5.0;
  double gt_sample_spacing = 0.1;  // meters between ground-truth surface samples
  std::uint64_t seed = 1;

  static SynthSpec load(const std::string& path);
};

/// Nearest surface hit along a ray; nullopt on a miss.
std::optional<double> ray_cast(const WorldSpec& world, const Vec3& origin,
                               const Vec3& direction);

/// Renders the dataset to disk: cloud logs, pose logs, ground-truth
/// trajectory and map, plus a manifest.json binding them. Returns the
/// manifest path.
std::string generate_synthetic(const SynthSpec& spec, const std::string& out_dir);

/// Uniform surface sampling of the world at the requested spacing.
PointCloud sample_world_surface(const WorldSpec& world, double spacing);

/// Renders one scan: raw points in the sensor frame with per-point time
/// offsets reflecting intra-scan motion. Exposed for the test oracles.
PointCloud render_scan(const WorldSpec& world, const TrajectorySpec& trajectory,
                       const LidarSpec& lidar, double scan_start,
                       std::uint64_t seed);

}  // namespace lodom::io
