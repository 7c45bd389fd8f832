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

#include "lodom/fusion.hpp"
#include "lodom/io/formats.hpp"

namespace lodom::io {

struct LidarStreamDecl {
  std::string id;
  Pose extrinsic;  // sensor frame in the robot frame
  std::vector<std::string> files;
};

struct OdomStreamDecl {
  SourceConfig source;
  std::string file;
};

/// Declares the streams of one recorded run: lidar cloud logs plus
/// odometry/IMU pose logs, with optional ground-truth references. Paths are
/// resolved relative to the manifest location; missing files fail at load.
struct DatasetManifest {
  std::vector<LidarStreamDecl> lidars;
  std::vector<OdomStreamDecl> odometry;
  std::optional<std::string> ground_truth_trajectory;
  std::optional<std::string> ground_truth_map;

  static DatasetManifest load(const std::string& path);

  std::vector<SourceConfig> sources() const;
  std::vector<Pose> lidar_extrinsics() const;
};

/// One element of the merged, time-ordered replay stream.
struct Event {
  double stamp = 0.0;
  std::string source_id;
  bool is_lidar = false;
  PointCloud cloud;  // lidar payload
  StampedPose pose;  // odometry/IMU payload
};

/// Loads every stream and merges them into one stream ordered by
/// (stamp, source_id).
std::vector<Event> load_events(const DatasetManifest& manifest);

struct ScenarioEvent {
  enum class Action { kDropSource, kRestoreSource, kLidarGap };
  double time = 0.0;
  Action action = Action::kDropSource;
  std::string id;        // drop/restore target
  double duration = 0.0; // lidar gap length
};

/// Failure-injection schedule; event times must be non-decreasing.
struct ScenarioScript {
  std::vector<ScenarioEvent> events;

  static ScenarioScript load(const std::string& path);
};

/// Pure filter: removes events from dropped sources between drop and restore
/// and removes lidar events inside gap windows. Surviving events keep their
/// order and content.
std::vector<Event> apply_scenario(const std::vector<Event>& stream,
                                  const ScenarioScript& script);

/// Human-readable stream summary for the `inspect` command.
std::string describe(const DatasetManifest& manifest,
                     const std::vector<Event>& events);

}  // namespace lodom::io
