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

#include "lodom/replay.hpp"

#include <chrono>
#include <deque>

namespace lodom {

namespace {

double wall_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

struct ScanGroup {
  double start = 0.0;
  std::vector<std::string> ids;
  std::vector<PointCloud> clouds;

  bool has(const std::string& id) const {
    for (const std::string& existing : ids) {
      if (existing == id) return true;
    }
    return false;
  }
};

}  // namespace

ReplayResult run_replay(const std::vector<io::Event>& events,
                        const PipelineOptions& options, const FusionConfig& fusion,
                        const io::DatasetManifest& manifest,
                        const ReplayOptions& replay) {
  Pipeline pipeline(options, manifest.sources(), fusion);
  DropPolicy drop_policy;
  ReplayResult result;

  std::map<std::string, Pose> extrinsics;
  for (const io::LidarStreamDecl& l : manifest.lidars) {
    extrinsics[l.id] = l.extrinsic;
  }
  const std::size_t lidar_count = manifest.lidars.size();

  // A scan is processed only once the stream has moved past its end, so the
  // motion provider can bracket every point of the revolution. Completed
  // groups wait here until then.
  std::optional<ScanGroup> pending;
  std::deque<ScanGroup> ready;
  const double flush_threshold = options.scan_period + 0.05;

  std::optional<double> last_emitted;
  auto record = [&](OdometryOutput output) {
    // The trajectory contract is strictly increasing stamps; a mixed-timing
    // rig could in principle produce a tie, which is withheld and counted.
    if (last_emitted && output.stamp <= *last_emitted) {
      ++result.emissions_suppressed;
      return;
    }
    last_emitted = output.stamp;
    if (replay.on_output) replay.on_output(output);
    result.outputs.push_back(std::move(output));
  };

  auto process_group = [&](ScanGroup group) {
    ++result.scans_seen;
    const double arrival = group.start + options.scan_period;

    if (replay.mode == ReplayMode::kPaced && !drop_policy.admit(arrival)) {
      return;
    }
    std::vector<Pose> group_extrinsics;
    group_extrinsics.reserve(group.ids.size());
    for (const std::string& id : group.ids) {
      group_extrinsics.push_back(extrinsics.at(id));
    }
    const double t0 = wall_seconds();
    OdometryOutput output =
        pipeline.process_scan(std::move(group.clouds), group_extrinsics);
    const double wall = wall_seconds() - t0;
    result.scan_durations.push_back(wall);
    if (replay.mode == ReplayMode::kPaced) {
      const double stream_duration =
          replay.paced_duration
              ? replay.paced_duration(result.scan_durations.size() - 1, wall)
              : wall;
      drop_policy.complete(arrival, stream_duration);
    }
    record(std::move(output));
  };

  auto flush_due = [&](double now) {
    while (!ready.empty() && now > ready.front().start + flush_threshold) {
      ScanGroup group = std::move(ready.front());
      ready.pop_front();
      process_group(std::move(group));
    }
    if (pending && now > pending->start + flush_threshold) {
      // Incomplete group (a lidar stream went quiet): process what arrived.
      ScanGroup group = std::move(*pending);
      pending.reset();
      process_group(std::move(group));
    }
  };

  for (const io::Event& event : events) {
    flush_due(event.stamp);

    if (event.is_lidar) {
      if (pending && pending->has(event.source_id)) {
        // Next revolution of the same sensor: the old group is complete.
        ready.push_back(std::move(*pending));
        pending.reset();
      }
      if (!pending) {
        pending = ScanGroup{};
        pending->start = event.stamp;
      }
      pending->ids.push_back(event.source_id);
      pending->clouds.push_back(event.cloud);
      if (pending->ids.size() == lidar_count) {
        ready.push_back(std::move(*pending));
        pending.reset();
      }
    } else {
      const bool idle = !pending && ready.empty();
      auto emission =
          pipeline.ingest_measurement(event.source_id, event.pose, idle);
      if (emission) record(std::move(*emission));
    }
  }
  // Drain: everything left is due by construction.
  while (!ready.empty()) {
    ScanGroup group = std::move(ready.front());
    ready.pop_front();
    process_group(std::move(group));
  }
  if (pending) process_group(std::move(*pending));

  if (!events.empty()) {
    result.stream_span = events.back().stamp - events.front().stamp;
  }
  result.scans_processed = pipeline.scans_processed();
  result.scans_degraded = pipeline.scans_degraded();
  result.scans_dropped_busy = drop_policy.dropped();
  result.emissions_suppressed += pipeline.emissions_suppressed();
  result.prior_histogram = pipeline.prior_histogram();
  result.map_cloud = pipeline.map().export_cloud();
  return result;
}

}  // namespace lodom
