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

#include <functional>
#include <map>

#include "lodom/io/dataset.hpp"
#include "lodom/pipeline.hpp"

namespace lodom {

enum class ReplayMode { kDeterministic, kPaced };

struct ReplayOptions {
  ReplayMode mode = ReplayMode::kDeterministic;

  /// Paced-mode processing duration on the stream clock. Defaults to the
  /// measured wall time; tests inject scripted durations here.
  std::function<double(std::size_t scan_index, double wall_seconds)>
      paced_duration;

  /// Called for every emission as it is produced (live streaming sink).
  std::function<void(const OdometryOutput&)> on_output;
};

struct ReplayResult {
  std::vector<OdometryOutput> outputs;  // scan and gap emissions, in order
  std::vector<double> scan_durations;   // wall seconds per processed scan
  std::size_t scans_seen = 0;
  std::size_t scans_dropped_busy = 0;
  std::size_t scans_processed = 0;
  std::size_t scans_degraded = 0;
  std::size_t emissions_suppressed = 0;  // non-monotonic stamps withheld
  std::map<std::string, std::size_t> prior_histogram;
  double stream_span = 0.0;
  PointCloud map_cloud;  // final accumulated map, world frame
};

/// Replays a merged event stream through the pipeline. Deterministic mode
/// processes every scan; paced mode applies the no-buffering drop rule using
/// per-scan processing durations.
ReplayResult run_replay(const std::vector<io::Event>& events,
                        const PipelineOptions& options, const FusionConfig& fusion,
                        const io::DatasetManifest& manifest,
                        const ReplayOptions& replay = {});

}  // namespace lodom
