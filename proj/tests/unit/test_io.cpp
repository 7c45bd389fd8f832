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
#include <fstream>

#include "lodom/eval.hpp"
#include "lodom/io/config.hpp"
#include "lodom/io/dataset.hpp"
#include "lodom/io/synth.hpp"
#include "support/test_support.hpp"

using namespace lodom;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("lodom_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static std::size_t counter() {
    static std::size_t n = 0;
    return n++;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<StampedPose> sample_poses(std::size_t n) {
  std::mt19937_64 rng(90);
  std::vector<StampedPose> poses;
  for (std::size_t i = 0; i < n; ++i) {
    poses.push_back({0.1 * static_cast<double>(i) + 0.01, test::random_pose(rng, 10.0)});
  }
  return poses;
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("pose log round-trips exactly") {
  TempDir tmp;
  const auto poses = sample_poses(50);
  io::write_pose_log(tmp.file("poses.txt"), poses);
  const auto back = io::read_pose_log(tmp.file("poses.txt"));
  REQUIRE(back.size() == poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    CHECK(back[i].time == poses[i].time);
    CHECK((back[i].pose.translation - poses[i].pose.translation).norm() < 1e-9);
    CHECK(rotation_angle_between(back[i].pose.rotation, poses[i].pose.rotation) <
          1e-9);
  }
}

TEST_CASE("pose log parse errors name the file and line") {
  TempDir tmp;
  {
    std::ofstream out(tmp.file("bad.txt"));
    out << "0.0 0 0 0 0 0 0 1\n";
    out << "not a number\n";
  }
  try {
    io::read_pose_log(tmp.file("bad.txt"));
    FAIL("expected a parse error");
  } catch (const io::ValidationError& e) {
    const std::string what = e.what();
    CHECK(what.find("bad.txt:2") != std::string::npos);
  }
}

TEST_CASE("pose log rejects stamp regressions") {
  TempDir tmp;
  {
    std::ofstream out(tmp.file("reg.txt"));
    out << "1.0 0 0 0 0 0 0 1\n";
    out << "0.5 0 0 0 0 0 0 1\n";
  }
  CHECK_THROWS_AS(io::read_pose_log(tmp.file("reg.txt")), io::ValidationError);
}

TEST_CASE("cloud log round-trips in both encodings") {
  TempDir tmp;
  std::mt19937_64 rng(91);
  std::vector<PointCloud> clouds;
  for (int k = 0; k < 3; ++k) {
    PointCloud c = test::random_cloud(rng, 100, 5.0);
    c.stamp = 0.1 * k;
    c.frame = "lidar0";
    std::uniform_real_distribution<double> u(1e-4, 0.1);
    for (std::size_t i = 0; i < c.size(); ++i) c.time_offsets.push_back(u(rng));
    clouds.push_back(std::move(c));
  }

  for (const auto format : {io::CloudFormat::kAscii, io::CloudFormat::kBinary}) {
    const std::string file =
        tmp.file(format == io::CloudFormat::kAscii ? "c.txt" : "c.bin");
    io::write_cloud_log(file, clouds, format);
    const auto back = io::read_cloud_log(file, format);
    REQUIRE(back.size() == clouds.size());
    for (std::size_t k = 0; k < clouds.size(); ++k) {
      CHECK(back[k].stamp == clouds[k].stamp);
      CHECK(back[k].frame == clouds[k].frame);
      REQUIRE(back[k].size() == clouds[k].size());
      for (std::size_t i = 0; i < clouds[k].size(); ++i) {
        if (format == io::CloudFormat::kBinary) {
          CHECK(back[k].positions[i] == clouds[k].positions[i]);
          CHECK(back[k].time_offsets[i] == clouds[k].time_offsets[i]);
        } else {
          CHECK((back[k].positions[i] - clouds[k].positions[i]).norm() < 1e-9);
          CHECK(back[k].time_offsets[i] ==
                doctest::Approx(clouds[k].time_offsets[i]).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("untimed clouds survive the round trip as untimed") {
  TempDir tmp;
  std::mt19937_64 rng(92);
  PointCloud c = test::random_cloud(rng, 20);
  c.stamp = 1.0;
  io::write_cloud_log(tmp.file("raw.txt"), {c}, io::CloudFormat::kAscii);
  const auto back = io::read_cloud_log(tmp.file("raw.txt"), io::CloudFormat::kAscii);
  REQUIRE(back.size() == 1);
  CHECK_FALSE(back[0].has_time_offsets());
}

TEST_CASE("config loads, echoes, and validates") {
  TempDir tmp;
  {
    std::ofstream out(tmp.file("husky.json"));
    out << R"({
      "preprocess": {"voxel_leaf": 0.1, "keep_fraction": 0.1},
      "registration": {"scan_to_submap_iterations": 20, "workers": 4},
      "pipeline": {"fga_mode": "off"}
    })";
  }
  const io::PipelineSettings s = io::PipelineSettings::load(tmp.file("husky.json"));
  CHECK(s.pipeline.filter.voxel_leaf == 0.1);
  CHECK(s.pipeline.gicp_s2m.max_iterations == 20);
  CHECK(s.pipeline.gicp_s2m.workers == 4);

  const std::string echo = s.echo();
  CHECK(echo.find("preprocess.voxel_leaf = 0.1") != std::string::npos);
  CHECK(echo.find("registration.scan_to_submap_iterations = 20") !=
        std::string::npos);
  CHECK(echo.find("registration.workers = 4") != std::string::npos);
}

TEST_CASE("unknown config keys are rejected") {
  TempDir tmp;
  {
    std::ofstream out(tmp.file("typo.json"));
    out << R"({"preprocess": {"voxel_laef": 0.1}})";
  }
  try {
    io::PipelineSettings::load(tmp.file("typo.json"));
    FAIL("expected rejection");
  } catch (const io::ValidationError& e) {
    CHECK(std::string(e.what()).find("voxel_laef") != std::string::npos);
  }
}

TEST_CASE("invalid config values fail at load time") {
  TempDir tmp;
  {
    std::ofstream out(tmp.file("bad.json"));
    out << R"({"registration": {"neighbors_k": 1}})";
  }
  CHECK_THROWS_AS(io::PipelineSettings::load(tmp.file("bad.json")),
                  io::ValidationError);
}

TEST_CASE("dataset events merge in stamp order with stable tie-breaks") {
  TempDir tmp;
  // Lidar at 10 Hz and IMU at 50 Hz over one second: 10 + 50 events.
  std::vector<PointCloud> clouds;
  for (int k = 0; k < 10; ++k) {
    PointCloud c;
    c.stamp = 0.1 * k;
    c.frame = "lidar0";
    c.positions.emplace_back(1, 0, 0);
    clouds.push_back(std::move(c));
  }
  io::write_cloud_log(tmp.file("lidar0.txt"), clouds, io::CloudFormat::kAscii);

  std::vector<StampedPose> imu;
  for (int k = 0; k < 50; ++k) imu.push_back({0.02 * k, Pose::Identity()});
  io::write_pose_log(tmp.file("imu.txt"), imu);

  {
    std::ofstream out(tmp.file("manifest.json"));
    out << R"({
      "lidars": [{"id": "lidar0", "file": "lidar0.txt"}],
      "odometry": [{"id": "imu", "kind": "rotation_only", "priority": 0,
                    "rate": 50, "file": "imu.txt"}]
    })";
  }
  const auto manifest = io::DatasetManifest::load(tmp.file("manifest.json"));
  const auto events = io::load_events(manifest);
  CHECK(events.size() == 60);
  for (std::size_t i = 1; i < events.size(); ++i) {
    CHECK(events[i].stamp >= events[i - 1].stamp);
    if (events[i].stamp == events[i - 1].stamp) {
      // Equal stamps: ordered by source id ("imu" < "lidar0").
      CHECK(events[i - 1].source_id <= events[i].source_id);
    }
  }
}

TEST_CASE("manifest validation catches missing files and duplicate ids") {
  TempDir tmp;
  {
    std::ofstream out(tmp.file("manifest.json"));
    out << R"({"lidars": [{"id": "lidar0", "file": "absent.txt"}]})";
  }
  CHECK_THROWS_AS(io::DatasetManifest::load(tmp.file("manifest.json")),
                  io::ValidationError);
}

TEST_CASE("apply_scenario: empty script is a no-op") {
  io::ScenarioScript script;
  std::vector<io::Event> stream(5);
  for (int i = 0; i < 5; ++i) {
    stream[i].stamp = i;
    stream[i].source_id = "wio";
  }
  const auto out = io::apply_scenario(stream, script);
  CHECK(out.size() == stream.size());
}

TEST_CASE("apply_scenario: drop removes a source from the drop time onward") {
  std::vector<io::Event> stream;
  for (int i = 0; i < 2000; ++i) {
    io::Event e;
    e.stamp = i;
    e.source_id = i % 2 == 0 ? "wio" : "imu";
    stream.push_back(e);
  }
  io::ScenarioScript script;
  script.events.push_back(
      {1200.0, io::ScenarioEvent::Action::kDropSource, "wio", 0.0});
  const auto out = io::apply_scenario(stream, script);
  for (const io::Event& e : out) {
    if (e.source_id == "wio") CHECK(e.stamp < 1200.0);
  }
  // imu events are untouched.
  std::size_t imu_count = 0;
  for (const io::Event& e : out) imu_count += e.source_id == "imu" ? 1 : 0;
  CHECK(imu_count == 1000);
}

TEST_CASE("apply_scenario: restore brings a source back") {
  std::vector<io::Event> stream;
  for (int i = 0; i < 100; ++i) {
    io::Event e;
    e.stamp = i;
    e.source_id = "wio";
    stream.push_back(e);
  }
  io::ScenarioScript script;
  script.events.push_back({20.0, io::ScenarioEvent::Action::kDropSource, "wio", 0.0});
  script.events.push_back(
      {40.0, io::ScenarioEvent::Action::kRestoreSource, "wio", 0.0});
  const auto out = io::apply_scenario(stream, script);
  for (const io::Event& e : out) {
    CHECK((e.stamp < 20.0 || e.stamp >= 40.0));
  }
  CHECK(out.size() == 80);
}

TEST_CASE("apply_scenario: lidar gap removes lidar events in [t, t+d)") {
  std::vector<io::Event> stream;
  for (int i = 0; i < 300; ++i) {
    io::Event lidar;
    lidar.stamp = 0.1 * i;
    lidar.source_id = "lidar0";
    lidar.is_lidar = true;
    stream.push_back(lidar);
    io::Event odom;
    odom.stamp = 0.1 * i + 0.005;
    odom.source_id = "wio";
    stream.push_back(odom);
  }
  io::ScenarioScript script;
  script.events.push_back({10.0, io::ScenarioEvent::Action::kLidarGap, "", 10.0});
  const auto out = io::apply_scenario(stream, script);
  for (const io::Event& e : out) {
    if (e.is_lidar) {
      CHECK((e.stamp < 10.0 || e.stamp >= 20.0));
    }
  }
  // Non-lidar events all survive.
  std::size_t odom_count = 0;
  for (const io::Event& e : out) odom_count += e.source_id == "wio" ? 1 : 0;
  CHECK(odom_count == 300);
}

TEST_CASE("apply_scenario never reorders or mutates surviving events") {
  std::mt19937_64 rng(93);
  std::uniform_real_distribution<double> u(0.0, 100.0);
  std::vector<io::Event> stream;
  for (int i = 0; i < 500; ++i) {
    io::Event e;
    e.stamp = 0.2 * i;
    e.source_id = i % 3 == 0 ? "lidar0" : (i % 3 == 1 ? "wio" : "imu");
    e.is_lidar = i % 3 == 0;
    e.pose.time = e.stamp;
    e.pose.pose = translate(u(rng), u(rng), u(rng));
    stream.push_back(e);
  }
  io::ScenarioScript script;
  script.events.push_back({20.0, io::ScenarioEvent::Action::kDropSource, "wio", 0.0});
  script.events.push_back({40.0, io::ScenarioEvent::Action::kRestoreSource, "wio", 0.0});
  script.events.push_back({50.0, io::ScenarioEvent::Action::kLidarGap, "", 10.0});

  const auto out = io::apply_scenario(stream, script);
  REQUIRE(out.size() < stream.size());
  // Every survivor appears in the original order with identical content.
  std::size_t cursor = 0;
  for (const io::Event& e : out) {
    while (cursor < stream.size() &&
           (stream[cursor].stamp != e.stamp ||
            stream[cursor].source_id != e.source_id)) {
      ++cursor;
    }
    REQUIRE(cursor < stream.size());
    CHECK(stream[cursor].pose.pose.translation == e.pose.pose.translation);
    ++cursor;
  }
}

TEST_CASE("scenario scripts validate ordering and actions") {
  TempDir tmp;
  {
    std::ofstream out(tmp.file("bad.json"));
    out << R"({"events": [{"time": 5, "action": "drop_source", "id": "a"},
                          {"time": 1, "action": "drop_source", "id": "b"}]})";
  }
  CHECK_THROWS_AS(io::ScenarioScript::load(tmp.file("bad.json")),
                  io::ValidationError);
}

TEST_CASE("synth: a static pose in a box yields identical consecutive scans") {
  io::SynthSpec spec;
  spec.world.boxes.push_back({Vec3(-5, -5, -1), Vec3(5, 5, 3)});
  spec.trajectory.waypoints.push_back({0.0, Pose::Identity()});
  io::LidarSpec lidar;
  lidar.azimuth_steps = 90;
  lidar.elevation_rings = 4;
  spec.lidars.push_back(lidar);

  const PointCloud a =
      io::render_scan(spec.world, spec.trajectory, spec.lidars[0], 0.0, 1);
  const PointCloud b =
      io::render_scan(spec.world, spec.trajectory, spec.lidars[0], 0.1, 1);
  REQUIRE(a.size() == b.size());
  REQUIRE(a.size() > 100);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK((a.positions[i] - b.positions[i]).norm() < 1e-12);
  }
}

TEST_CASE("synth: the WIO log reproduces the analytic trajectory at sigma 0") {
  TempDir tmp;
  io::SynthSpec spec;
  spec.duration = 2.0;
  spec.world.boxes.push_back({Vec3(-5, -5, -1), Vec3(5, 5, 3)});
  spec.trajectory.waypoints.push_back({0.0, Pose::Identity()});
  spec.trajectory.waypoints.push_back({5.0, translate(5, 0, 0)});
  io::LidarSpec lidar;
  lidar.azimuth_steps = 30;
  lidar.elevation_rings = 2;
  spec.lidars.push_back(lidar);
  io::OdomSourceSpec wio;
  spec.odometry.push_back(wio);

  const std::string manifest_path = io::generate_synthetic(spec, tmp.file("data"));
  const auto manifest = io::DatasetManifest::load(manifest_path);
  REQUIRE(manifest.odometry.size() == 1);
  const auto poses = io::read_pose_log(manifest.odometry[0].file);
  REQUIRE(!poses.empty());
  for (const StampedPose& sp : poses) {
    const Pose expected = spec.trajectory.sample(sp.time);
    CHECK(translation_distance(sp.pose, expected) < 1e-9);
    CHECK(rotation_angle_between(sp.pose.rotation, expected.rotation) < 1e-9);
  }

  // The generator's own ground truth evaluates to zero APE against itself.
  REQUIRE(manifest.ground_truth_trajectory.has_value());
  const auto gt = io::read_pose_log(*manifest.ground_truth_trajectory);
  CHECK(!gt.empty());
}

TEST_CASE("synth ground truth is exact: the noise-free WIO log scores zero APE") {
  TempDir tmp;
  io::SynthSpec spec;
  spec.duration = 2.0;
  spec.world.boxes.push_back({Vec3(-5, -5, -1), Vec3(8, 5, 3)});
  spec.trajectory.waypoints.push_back({0.0, Pose::Identity()});
  spec.trajectory.waypoints.push_back(
      {5.0, Pose(from_rpy(0, 0, 0.4), Vec3(4, 0.5, 0))});
  io::LidarSpec lidar;
  lidar.azimuth_steps = 30;
  lidar.elevation_rings = 2;
  spec.lidars.push_back(lidar);
  spec.odometry.push_back(io::OdomSourceSpec{});

  const std::string manifest_path = io::generate_synthetic(spec, tmp.file("d"));
  const auto manifest = io::DatasetManifest::load(manifest_path);
  const Trajectory wio =
      Trajectory::from_poses(io::read_pose_log(manifest.odometry[0].file));
  const Trajectory gt = Trajectory::from_poses(
      io::read_pose_log(*manifest.ground_truth_trajectory));
  const ApeReport report = ape(wio, gt, 0.05);
  CHECK(report.matched == wio.size());
  CHECK(report.mean_error < 1e-12);
  CHECK(report.max_error < 1e-12);
}

TEST_CASE("synth: degenerate worlds are rejected") {
  TempDir tmp;
  io::SynthSpec spec;
  // A tiny rect far away that no ray will hit within range.
  spec.world.rects.push_back(
      {Vec3(1e7, 1e7, 1e7), Vec3(0.001, 0, 0), Vec3(0, 0.001, 0)});
  spec.trajectory.waypoints.push_back({0.0, Pose::Identity()});
  io::LidarSpec lidar;
  lidar.azimuth_steps = 16;
  lidar.elevation_rings = 2;
  spec.lidars.push_back(lidar);
  CHECK_THROWS_AS(io::generate_synthetic(spec, tmp.file("bad")),
                  io::ValidationError);
}

TEST_CASE("cloud format follows the file extension") {
  CHECK(io::cloud_format_for_path("a/b/clouds.bin") == io::CloudFormat::kBinary);
  CHECK(io::cloud_format_for_path("a/b/clouds.txt") == io::CloudFormat::kAscii);
}

}  // TEST_SUITE
