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

#include <doctest.h>

#include <unistd.h>

#include <filesystem>

#include "lodom/eval.hpp"
#include "lodom/io/synth.hpp"
#include "lodom/replay.hpp"
#include "support/test_support.hpp"

using namespace lodom;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::size_t n = 0;
    path = fs::temp_directory_path() /
           ("lodom_replay_" + std::to_string(::getpid()) + "_" + std::to_string(n++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

io::SynthSpec corridor_spec(double duration, double noise_sigma,
                            bool per_point_timing) {
  io::SynthSpec spec;
  spec.duration = duration;
  spec.seed = 11;
  spec.world.boxes.push_back({Vec3(-3, -3, -1), Vec3(12, 3, 2)});
  spec.trajectory.waypoints.push_back({0.0, Pose::Identity()});
  spec.trajectory.waypoints.push_back({10.0, translate(10, 0, 0)});  // 1 m/s

  io::LidarSpec lidar;
  lidar.azimuth_steps = 160;
  lidar.elevation_rings = 8;
  lidar.noise_sigma = noise_sigma;
  lidar.per_point_timing = per_point_timing;
  spec.lidars.push_back(lidar);

  io::OdomSourceSpec wio;
  wio.id = "wio";
  wio.priority = 0;
  spec.odometry.push_back(wio);
  return spec;
}

PipelineOptions small_options() {
  PipelineOptions opts;
  opts.filter.random_enabled = false;
  opts.filter.range_min = 0.1;
  opts.gicp_s2s.neighbors_k = 10;
  opts.gicp_s2m.neighbors_k = 10;
  opts.gicp_s2s.workers = 2;
  opts.gicp_s2m.workers = 2;
  opts.keyframe.translation_threshold = 0.5;
  return opts;
}

Trajectory to_trajectory(const std::vector<OdometryOutput>& outputs) {
  std::vector<StampedPose> poses;
  for (const OdometryOutput& o : outputs) poses.push_back({o.stamp, o.pose});
  return Trajectory::from_poses(std::move(poses));
}

}  // namespace

TEST_SUITE("replay") {

TEST_CASE("deterministic corridor replay tracks the ground truth") {
  TempDir tmp;
  const io::SynthSpec spec = corridor_spec(3.0, 0.01, true);
  const std::string manifest_path =
      io::generate_synthetic(spec, (tmp.path / "data").string());
  const auto manifest = io::DatasetManifest::load(manifest_path);
  const auto events = io::load_events(manifest);

  const ReplayResult result =
      run_replay(events, small_options(), FusionConfig{}, manifest);
  CHECK(result.scans_processed >= 30);
  CHECK(result.scans_degraded == 0);

  const Trajectory est = to_trajectory(result.outputs);
  const Trajectory gt =
      Trajectory::from_poses(io::read_pose_log(*manifest.ground_truth_trajectory));
  const ApeReport report = ape(est, gt, 0.05);
  CHECK(report.mean_error < 0.05);
}

TEST_CASE("two deterministic replays are bit-identical") {
  TempDir tmp;
  const io::SynthSpec spec = corridor_spec(2.0, 0.01, true);
  const std::string manifest_path =
      io::generate_synthetic(spec, (tmp.path / "data").string());
  const auto manifest = io::DatasetManifest::load(manifest_path);
  const auto events = io::load_events(manifest);

  PipelineOptions opts = small_options();
  opts.filter.random_enabled = true;  // exercise the seeded path too
  opts.filter.keep_fraction = 0.8;
  opts.seed = 1234;

  const ReplayResult a = run_replay(events, opts, FusionConfig{}, manifest);
  const ReplayResult b = run_replay(events, opts, FusionConfig{}, manifest);
  REQUIRE(a.outputs.size() == b.outputs.size());
  for (std::size_t i = 0; i < a.outputs.size(); ++i) {
    CHECK(a.outputs[i].stamp == b.outputs[i].stamp);
    CHECK(a.outputs[i].pose.translation == b.outputs[i].pose.translation);
    CHECK(a.outputs[i].pose.rotation.coeffs() == b.outputs[i].pose.rotation.coeffs());
  }
  CHECK(a.map_cloud.size() == b.map_cloud.size());
}

TEST_CASE("emission stamps are strictly increasing, gaps included") {
  TempDir tmp;
  const io::SynthSpec spec = corridor_spec(3.0, 0.01, true);
  const std::string manifest_path =
      io::generate_synthetic(spec, (tmp.path / "data").string());
  const auto manifest = io::DatasetManifest::load(manifest_path);
  auto events = io::load_events(manifest);

  io::ScenarioScript script;
  script.events.push_back({1.0, io::ScenarioEvent::Action::kLidarGap, "", 1.0});
  events = io::apply_scenario(events, script);

  const ReplayResult result =
      run_replay(events, small_options(), FusionConfig{}, manifest);

  // The pipeline keeps emitting through the gap from the prior source.
  std::size_t gap_emissions = 0;
  for (const OdometryOutput& o : result.outputs) {
    gap_emissions += o.gap_emission ? 1 : 0;
  }
  CHECK(gap_emissions > 10);

  for (std::size_t i = 1; i < result.outputs.size(); ++i) {
    CHECK(result.outputs[i].stamp > result.outputs[i - 1].stamp);
  }

  const Trajectory est = to_trajectory(result.outputs);
  const Trajectory gt =
      Trajectory::from_poses(io::read_pose_log(*manifest.ground_truth_trajectory));
  const ApeReport report = ape(est, gt, 0.05);
  CHECK(report.mean_error < 0.15);
}

TEST_CASE("paced mode with scripted slow processing drops every other scan") {
  TempDir tmp;
  const io::SynthSpec spec = corridor_spec(3.0, 0.01, true);
  const std::string manifest_path =
      io::generate_synthetic(spec, (tmp.path / "data").string());
  const auto manifest = io::DatasetManifest::load(manifest_path);
  const auto events = io::load_events(manifest);

  ReplayOptions paced;
  paced.mode = ReplayMode::kPaced;
  paced.paced_duration = [](std::size_t, double) { return 0.15; };

  const ReplayResult result =
      run_replay(events, small_options(), FusionConfig{}, manifest, paced);

  // Queueing oracle: arrivals every 0.1 s, busy 0.15 s -> alternating drops.
  std::size_t expected_drops = 0;
  double busy_until = -1.0;
  for (std::size_t k = 0; k < result.scans_seen; ++k) {
    const double arrival = 0.1 * static_cast<double>(k) + 0.1;
    if (arrival < busy_until) {
      ++expected_drops;
    } else {
      busy_until = arrival + 0.15;
    }
  }
  CHECK(result.scans_dropped_busy == expected_drops);
  CHECK(result.scans_dropped_busy >= result.scans_seen / 2 - 1);
}

TEST_CASE("paced mode with fast processing drops nothing") {
  TempDir tmp;
  const io::SynthSpec spec = corridor_spec(2.0, 0.01, true);
  const std::string manifest_path =
      io::generate_synthetic(spec, (tmp.path / "data").string());
  const auto manifest = io::DatasetManifest::load(manifest_path);
  const auto events = io::load_events(manifest);

  ReplayOptions paced;
  paced.mode = ReplayMode::kPaced;
  paced.paced_duration = [](std::size_t, double) { return 0.02; };

  const ReplayResult result =
      run_replay(events, small_options(), FusionConfig{}, manifest, paced);
  CHECK(result.scans_dropped_busy == 0);
  CHECK(result.scans_processed == result.scans_seen);
}

TEST_CASE("scan-to-submap refinement beats scan-to-scan-only composition") {
  TempDir tmp;
  const io::SynthSpec spec = corridor_spec(5.0, 0.02, false);
  const std::string manifest_path =
      io::generate_synthetic(spec, (tmp.path / "data").string());
  const auto manifest = io::DatasetManifest::load(manifest_path);
  const auto events = io::load_events(manifest);
  const Trajectory gt =
      Trajectory::from_poses(io::read_pose_log(*manifest.ground_truth_trajectory));

  const PipelineOptions opts = small_options();

  // Full pipeline (scan-to-scan + scan-to-submap against the map).
  const ReplayResult full = run_replay(events, opts, FusionConfig{}, manifest);
  const ApeReport full_ape = ape(to_trajectory(full.outputs), gt, 0.05);

  // Scan-to-scan-only baseline: compose incremental matches, no map.
  Pose x = Pose::Identity();
  std::optional<EnrichedCloud> prev;
  double t_prev = 0.0;
  std::vector<StampedPose> baseline;
  for (const io::Event& e : events) {
    if (!e.is_lidar) continue;
    const PointCloud filtered =
        apply_filters(merge({e.cloud}, {manifest.lidars[0].extrinsic}),
                      opts.filter, 0);
    EnrichedCloud enriched = enrich(filtered, opts.gicp_s2s);
    if (prev) {
      // Exact prior from the generator's trajectory, like a perfect WIO.
      const PriorResult prior{
          relative(spec.trajectory.sample(t_prev), spec.trajectory.sample(e.stamp)),
          "wio", false};
      const RegistrationResult r = scan_to_scan(enriched, *prev, prior, opts.gicp_s2s);
      x = compose(x, r.transform);
    }
    baseline.push_back({e.stamp, x});
    t_prev = e.stamp;
    prev = std::move(enriched);
  }
  const ApeReport s2s_ape = ape(Trajectory::from_poses(baseline), gt, 0.05);

  CHECK(full_ape.mean_error <= s2s_ape.mean_error + 1e-9);
}

}  // TEST_SUITE
