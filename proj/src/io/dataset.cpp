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

#include "lodom/io/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace lodom::io {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

Pose parse_pose_array(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 7) {
    throw ValidationError(where + ": pose must be [tx ty tz qx qy qz qw]");
  }
  for (const auto& v : j) {
    if (!v.is_number()) throw ValidationError(where + ": pose entries must be numbers");
  }
  const Vec3 t(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
  const Quat q(j[6].get<double>(), j[3].get<double>(), j[4].get<double>(),
               j[5].get<double>());
  if (q.norm() < 1e-6) throw ValidationError(where + ": zero quaternion");
  return Pose(q, t);
}

std::string resolve(const fs::path& base, const std::string& rel) {
  const fs::path p(rel);
  return p.is_absolute() ? p.string() : (base / p).string();
}

void require_file(const std::string& path, const std::string& where) {
  if (!fs::exists(path)) {
    throw ValidationError(where + ": referenced file does not exist: " + path);
  }
}

}  // namespace

DatasetManifest DatasetManifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open manifest: " + path);
  json root = json::parse(in, nullptr, false);
  if (root.is_discarded()) throw ValidationError(path + ": malformed JSON");
  if (!root.is_object()) throw ValidationError(path + ": expected an object");

  const fs::path base = fs::path(path).parent_path();
  DatasetManifest m;
  const std::set<std::string> allowed = {"lidars", "odometry",
                                         "ground_truth_trajectory",
                                         "ground_truth_map"};
  for (const auto& [key, value] : root.items()) {
    if (!allowed.contains(key)) {
      throw ValidationError(path + ": unknown key '" + key + "'");
    }
  }

  if (root.contains("lidars")) {
    for (const auto& j : root["lidars"]) {
      LidarStreamDecl decl;
      decl.id = j.value("id", "");
      if (decl.id.empty()) throw ValidationError(path + ": lidar stream needs an id");
      decl.extrinsic = j.contains("extrinsic")
                           ? parse_pose_array(j["extrinsic"], path + ":" + decl.id)
                           : Pose::Identity();
      if (j.contains("file")) {
        decl.files.push_back(resolve(base, j["file"].get<std::string>()));
      }
      if (j.contains("files")) {
        for (const auto& f : j["files"]) {
          decl.files.push_back(resolve(base, f.get<std::string>()));
        }
      }
      if (decl.files.empty()) {
        throw ValidationError(path + ": lidar stream " + decl.id + " lists no files");
      }
      for (const std::string& f : decl.files) require_file(f, path);
      m.lidars.push_back(std::move(decl));
    }
  }
  if (m.lidars.empty()) {
    throw ValidationError(path + ": at least one lidar stream is required");
  }

  if (root.contains("odometry")) {
    for (const auto& j : root["odometry"]) {
      OdomStreamDecl decl;
      decl.source.id = j.value("id", "");
      if (decl.source.id.empty()) {
        throw ValidationError(path + ": odometry stream needs an id");
      }
      const std::string kind = j.value("kind", "full");
      if (kind == "full") {
        decl.source.kind = SourceKind::kFullOdometry;
      } else if (kind == "rotation_only") {
        decl.source.kind = SourceKind::kRotationOnly;
      } else {
        throw ValidationError(path + ": odometry kind must be full or rotation_only");
      }
      if (!j.contains("priority")) {
        throw ValidationError(path + ": odometry stream " + decl.source.id +
                              " needs a priority");
      }
      decl.source.priority = j["priority"].get<int>();
      decl.source.expected_rate = j.value("rate", 50.0);
      decl.source.extrinsic =
          j.contains("extrinsic")
              ? parse_pose_array(j["extrinsic"], path + ":" + decl.source.id)
              : Pose::Identity();
      if (!j.contains("file")) {
        throw ValidationError(path + ": odometry stream " + decl.source.id +
                              " needs a file");
      }
      decl.file = resolve(base, j["file"].get<std::string>());
      require_file(decl.file, path);
      m.odometry.push_back(std::move(decl));
    }
  }

  if (root.contains("ground_truth_trajectory")) {
    m.ground_truth_trajectory =
        resolve(base, root["ground_truth_trajectory"].get<std::string>());
    require_file(*m.ground_truth_trajectory, path);
  }
  if (root.contains("ground_truth_map")) {
    m.ground_truth_map = resolve(base, root["ground_truth_map"].get<std::string>());
    require_file(*m.ground_truth_map, path);
  }

  // Unique ids across all streams (the merge tie-break needs them).
  std::set<std::string> ids;
  for (const auto& l : m.lidars) {
    if (!ids.insert(l.id).second) {
      throw ValidationError(path + ": duplicate stream id " + l.id);
    }
  }
  for (const auto& o : m.odometry) {
    if (!ids.insert(o.source.id).second) {
      throw ValidationError(path + ": duplicate stream id " + o.source.id);
    }
  }
  return m;
}

std::vector<SourceConfig> DatasetManifest::sources() const {
  std::vector<SourceConfig> out;
  out.reserve(odometry.size());
  for (const OdomStreamDecl& o : odometry) out.push_back(o.source);
  return out;
}

std::vector<Pose> DatasetManifest::lidar_extrinsics() const {
  std::vector<Pose> out;
  out.reserve(lidars.size());
  for (const LidarStreamDecl& l : lidars) out.push_back(l.extrinsic);
  return out;
}

std::vector<Event> load_events(const DatasetManifest& manifest) {
  std::vector<Event> events;

  for (const LidarStreamDecl& l : manifest.lidars) {
    double previous = -std::numeric_limits<double>::infinity();
    for (const std::string& file : l.files) {
      for (PointCloud& c : read_cloud_log(file, cloud_format_for_path(file))) {
        if (c.stamp <= previous) {
          throw ValidationError(file + ": stamp regression across stream " + l.id);
        }
        previous = c.stamp;
        Event e;
        e.stamp = c.stamp;
        e.source_id = l.id;
        e.is_lidar = true;
        e.cloud = std::move(c);
        events.push_back(std::move(e));
      }
    }
  }

  for (const OdomStreamDecl& o : manifest.odometry) {
    for (const StampedPose& sp : read_pose_log(o.file)) {
      Event e;
      e.stamp = sp.time;
      e.source_id = o.source.id;
      e.is_lidar = false;
      e.pose = sp;
      events.push_back(std::move(e));
    }
  }

  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return a.stamp != b.stamp ? a.stamp < b.stamp : a.source_id < b.source_id;
  });
  return events;
}

ScenarioScript ScenarioScript::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario: " + path);
  json root = json::parse(in, nullptr, false);
  if (root.is_discarded()) throw ValidationError(path + ": malformed JSON");
  const json& list = root.is_object() && root.contains("events") ? root["events"] : root;
  if (!list.is_array()) {
    throw ValidationError(path + ": expected an array of events");
  }

  ScenarioScript script;
  double previous = -std::numeric_limits<double>::infinity();
  for (const auto& j : list) {
    ScenarioEvent e;
    e.time = j.value("time", 0.0);
    if (e.time < previous) {
      throw ValidationError(path + ": event times must be non-decreasing");
    }
    previous = e.time;
    const std::string action = j.value("action", "");
    if (action == "drop_source") {
      e.action = ScenarioEvent::Action::kDropSource;
      e.id = j.value("id", "");
      if (e.id.empty()) throw ValidationError(path + ": drop_source needs an id");
    } else if (action == "restore_source") {
      e.action = ScenarioEvent::Action::kRestoreSource;
      e.id = j.value("id", "");
      if (e.id.empty()) throw ValidationError(path + ": restore_source needs an id");
    } else if (action == "lidar_gap") {
      e.action = ScenarioEvent::Action::kLidarGap;
      e.duration = j.value("duration", 0.0);
      if (!(e.duration > 0.0)) {
        throw ValidationError(path + ": lidar_gap needs a positive duration");
      }
    } else {
      throw ValidationError(path + ": unknown action '" + action + "'");
    }
    script.events.push_back(std::move(e));
  }
  return script;
}

std::vector<Event> apply_scenario(const std::vector<Event>& stream,
                                  const ScenarioScript& script) {
  std::vector<Event> out;
  out.reserve(stream.size());
  std::set<std::string> dropped;
  std::vector<std::pair<double, double>> gaps;  // [begin, end)
  std::size_t next = 0;

  for (const Event& e : stream) {
    while (next < script.events.size() && script.events[next].time <= e.stamp) {
      const ScenarioEvent& s = script.events[next++];
      switch (s.action) {
        case ScenarioEvent::Action::kDropSource:
          dropped.insert(s.id);
          break;
        case ScenarioEvent::Action::kRestoreSource:
          dropped.erase(s.id);
          break;
        case ScenarioEvent::Action::kLidarGap:
          gaps.emplace_back(s.time, s.time + s.duration);
          break;
      }
    }
    if (dropped.contains(e.source_id)) continue;
    if (e.is_lidar) {
      bool in_gap = false;
      for (const auto& [begin, end] : gaps) {
        if (e.stamp >= begin && e.stamp < end) {
          in_gap = true;
          break;
        }
      }
      if (in_gap) continue;
    }
    out.push_back(e);
  }
  return out;
}

std::string describe(const DatasetManifest& manifest,
                     const std::vector<Event>& events) {
  std::map<std::string, std::size_t> counts;
  std::map<std::string, std::pair<double, double>> spans;
  for (const Event& e : events) {
    counts[e.source_id]++;
    auto [it, inserted] = spans.emplace(e.source_id, std::make_pair(e.stamp, e.stamp));
    if (!inserted) {
      it->second.first = std::min(it->second.first, e.stamp);
      it->second.second = std::max(it->second.second, e.stamp);
    }
  }

  std::ostringstream out;
  out << "streams: " << manifest.lidars.size() << " lidar, "
      << manifest.odometry.size() << " odometry/imu\n";
  for (const LidarStreamDecl& l : manifest.lidars) {
    const auto span = spans.count(l.id) ? spans.at(l.id)
                                        : std::make_pair(0.0, 0.0);
    out << "  lidar " << l.id << ": " << counts[l.id] << " scans, span ["
        << span.first << ", " << span.second << "] s\n";
  }
  for (const OdomStreamDecl& o : manifest.odometry) {
    const std::string& id = o.source.id;
    const auto span = spans.count(id) ? spans.at(id) : std::make_pair(0.0, 0.0);
    out << "  "
        << (o.source.kind == SourceKind::kRotationOnly ? "imu " : "odom ") << id
        << ": priority " << o.source.priority << ", " << counts[id]
        << " poses, span [" << span.first << ", " << span.second << "] s\n";
  }
  if (manifest.ground_truth_trajectory) {
    out << "  ground-truth trajectory: " << *manifest.ground_truth_trajectory << '\n';
  }
  if (manifest.ground_truth_map) {
    out << "  ground-truth map: " << *manifest.ground_truth_map << '\n';
  }
  return out.str();
}

}  // namespace lodom::io
