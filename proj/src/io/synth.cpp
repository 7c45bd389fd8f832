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

#include "lodom/io/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <json.hpp>

namespace lodom::io {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kRayEpsilon = 1e-9;

std::optional<double> hit_box(const WorldSpec::Box& box, const Vec3& o,
                              const Vec3& d) {
  // Slab test. From inside the box the exit face is the hit; from outside it
  // is the entry face.
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  for (int axis = 0; axis < 3; ++axis) {
    if (std::abs(d[axis]) < 1e-15) {
      if (o[axis] < box.min[axis] || o[axis] > box.max[axis]) return std::nullopt;
      continue;
    }
    double t0 = (box.min[axis] - o[axis]) / d[axis];
    double t1 = (box.max[axis] - o[axis]) / d[axis];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
    if (t_near > t_far) return std::nullopt;
  }
  if (t_near > kRayEpsilon) return t_near;
  if (t_far > kRayEpsilon) return t_far;
  return std::nullopt;
}

std::optional<double> hit_rect(const WorldSpec::Rect& rect, const Vec3& o,
                               const Vec3& d) {
  const Vec3 n = rect.u.cross(rect.v);
  const double denom = n.dot(d);
  if (std::abs(denom) < 1e-15) return std::nullopt;
  const double t = n.dot(rect.origin - o) / denom;
  if (t <= kRayEpsilon) return std::nullopt;
  const Vec3 p = o + t * d - rect.origin;
  const double uu = rect.u.squaredNorm(), vv = rect.v.squaredNorm();
  const double uv = rect.u.dot(rect.v);
  const double pu = p.dot(rect.u), pv = p.dot(rect.v);
  const double det = uu * vv - uv * uv;
  if (std::abs(det) < 1e-18) return std::nullopt;
  const double a = (pu * vv - pv * uv) / det;
  const double b = (pv * uu - pu * uv) / det;
  if (a < 0.0 || a > 1.0 || b < 0.0 || b > 1.0) return std::nullopt;
  return t;
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Pose TrajectorySpec::sample(double t) const {
  if (waypoints.empty()) {
    throw ValidationError("synth: trajectory needs at least one waypoint");
  }
  if (t <= waypoints.front().time) return waypoints.front().pose;
  if (t >= waypoints.back().time) return waypoints.back().pose;
  auto hi = std::upper_bound(
      waypoints.begin(), waypoints.end(), t,
      [](double q, const StampedPose& a) { return q < a.time; });
  auto lo = std::prev(hi);
  return interpolate(*lo, *hi, t);
}

std::optional<double> ray_cast(const WorldSpec& world, const Vec3& origin,
                               const Vec3& direction) {
  std::optional<double> best;
  for (const WorldSpec::Box& box : world.boxes) {
    if (const auto t = hit_box(box, origin, direction)) {
      if (!best || *t < *best) best = t;
    }
  }
  for (const WorldSpec::Rect& rect : world.rects) {
    if (const auto t = hit_rect(rect, origin, direction)) {
      if (!best || *t < *best) best = t;
    }
  }
  return best;
}

PointCloud render_scan(const WorldSpec& world, const TrajectorySpec& trajectory,
                       const LidarSpec& lidar, double scan_start,
                       std::uint64_t seed) {
  PointCloud cloud;
  cloud.stamp = scan_start;
  cloud.frame = lidar.id;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double el_min = lidar.elevation_min_deg * M_PI / 180.0;
  const double el_max = lidar.elevation_max_deg * M_PI / 180.0;
  const int rings = std::max(1, lidar.elevation_rings);

  for (int step = 0; step < lidar.azimuth_steps; ++step) {
    const double offset =
        lidar.per_point_timing
            ? lidar.scan_period * static_cast<double>(step) /
                  static_cast<double>(lidar.azimuth_steps)
            : 0.0;
    const double t = scan_start + offset;
    const Pose sensor = trajectory.sample(t) * lidar.extrinsic;
    const Mat3 R = sensor.rotation_matrix();
    const double azimuth =
        2.0 * M_PI * static_cast<double>(step) / lidar.azimuth_steps;

    for (int ring = 0; ring < rings; ++ring) {
      const double elevation =
          rings == 1 ? 0.5 * (el_min + el_max)
                     : el_min + (el_max - el_min) * static_cast<double>(ring) /
                                    static_cast<double>(rings - 1);
      const Vec3 dir_sensor(std::cos(elevation) * std::cos(azimuth),
                            std::cos(elevation) * std::sin(azimuth),
                            std::sin(elevation));
      const auto range = ray_cast(world, sensor.translation, R * dir_sensor);
      if (!range) continue;
      double r = *range;
      if (lidar.noise_sigma > 0.0) r += lidar.noise_sigma * gauss(rng);
      if (r < lidar.range_min || r > lidar.range_max) continue;
      cloud.positions.push_back(dir_sensor * r);
      if (lidar.per_point_timing) cloud.time_offsets.push_back(offset);
    }
  }
  return cloud;
}

PointCloud sample_world_surface(const WorldSpec& world, double spacing) {
  if (!(spacing > 0.0)) {
    throw ValidationError("synth: gt_sample_spacing must be positive");
  }
  PointCloud out;
  out.frame = "world";

  auto emit_grid = [&](const Vec3& origin, const Vec3& u, const Vec3& v) {
    const auto nu = std::max<std::int64_t>(1, std::llround(u.norm() / spacing));
    const auto nv = std::max<std::int64_t>(1, std::llround(v.norm() / spacing));
    for (std::int64_t i = 0; i <= nu; ++i) {
      for (std::int64_t j = 0; j <= nv; ++j) {
        out.positions.push_back(origin +
                                u * (static_cast<double>(i) / nu) +
                                v * (static_cast<double>(j) / nv));
      }
    }
  };

  for (const WorldSpec::Box& b : world.boxes) {
    const Vec3 d = b.max - b.min;
    const Vec3 ux(d.x(), 0, 0), uy(0, d.y(), 0), uz(0, 0, d.z());
    emit_grid(b.min, ux, uy);                      // floor
    emit_grid(Vec3(b.min.x(), b.min.y(), b.max.z()), ux, uy);  // ceiling
    emit_grid(b.min, ux, uz);                      // y = min wall
    emit_grid(Vec3(b.min.x(), b.max.y(), b.min.z()), ux, uz);  // y = max wall
    emit_grid(b.min, uy, uz);                      // x = min wall
    emit_grid(Vec3(b.max.x(), b.min.y(), b.min.z()), uy, uz);  // x = max wall
  }
  for (const WorldSpec::Rect& r : world.rects) {
    emit_grid(r.origin, r.u, r.v);
  }
  if (out.empty()) {
    throw ValidationError("synth: world has no surfaces to sample");
  }
  return out;
}

namespace {

Vec3 parse_vec3(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) {
    throw ValidationError(where + ": expected [x, y, z]");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Pose parse_pose7(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 7) {
    throw ValidationError(where + ": expected [tx ty tz qx qy qz qw]");
  }
  return Pose(Quat(j[6].get<double>(), j[3].get<double>(), j[4].get<double>(),
                   j[5].get<double>()),
              Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>()));
}

}  // namespace

SynthSpec SynthSpec::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open synth spec: " + path);
  json root = json::parse(in, nullptr, false);
  if (root.is_discarded()) throw ValidationError(path + ": malformed JSON");

  SynthSpec spec;
  spec.duration = root.value("duration", spec.duration);
  spec.gt_sample_spacing = root.value("gt_sample_spacing", spec.gt_sample_spacing);
  spec.seed = root.value("seed", spec.seed);

  if (!root.contains("world")) throw ValidationError(path + ": missing world");
  for (const auto& j : root["world"].value("primitives", json::array())) {
    const std::string type = j.value("type", "");
    if (type == "box") {
      WorldSpec::Box b;
      b.min = parse_vec3(j.at("min"), path + ":box.min");
      b.max = parse_vec3(j.at("max"), path + ":box.max");
      spec.world.boxes.push_back(b);
    } else if (type == "corridor") {
      // Sugar: a box centered on the segment start->end.
      const Vec3 start = parse_vec3(j.at("start"), path + ":corridor.start");
      const Vec3 end = parse_vec3(j.at("end"), path + ":corridor.end");
      const double width = j.value("width", 4.0);
      const double height = j.value("height", 3.0);
      WorldSpec::Box b;
      b.min = start.cwiseMin(end) - Vec3(0.0, width / 2, 0.0);
      b.max = start.cwiseMax(end) + Vec3(0.0, width / 2, height);
      spec.world.boxes.push_back(b);
    } else if (type == "plane") {
      WorldSpec::Rect r;
      r.origin = parse_vec3(j.at("origin"), path + ":plane.origin");
      r.u = parse_vec3(j.at("u"), path + ":plane.u");
      r.v = parse_vec3(j.at("v"), path + ":plane.v");
      spec.world.rects.push_back(r);
    } else {
      throw ValidationError(path + ": unknown primitive type '" + type + "'");
    }
  }
  if (spec.world.boxes.empty() && spec.world.rects.empty()) {
    throw ValidationError(path + ": world needs at least one primitive");
  }

  if (!root.contains("trajectory")) throw ValidationError(path + ": missing trajectory");
  for (const auto& j : root["trajectory"].value("waypoints", json::array())) {
    StampedPose wp;
    wp.time = j.at("time").get<double>();
    wp.pose.translation = parse_vec3(j.at("position"), path + ":waypoint.position");
    if (j.contains("rpy_deg")) {
      const Vec3 rpy = parse_vec3(j["rpy_deg"], path + ":waypoint.rpy_deg") *
                       (M_PI / 180.0);
      wp.pose.rotation = from_rpy(rpy);
    }
    if (!spec.trajectory.waypoints.empty() &&
        wp.time <= spec.trajectory.waypoints.back().time) {
      throw ValidationError(path + ": waypoint times must be strictly increasing");
    }
    spec.trajectory.waypoints.push_back(wp);
  }
  if (spec.trajectory.waypoints.empty()) {
    throw ValidationError(path + ": trajectory needs waypoints");
  }

  for (const auto& j : root.value("lidars", json::array())) {
    LidarSpec l;
    l.id = j.value("id", l.id);
    if (j.contains("extrinsic")) {
      l.extrinsic = parse_pose7(j["extrinsic"], path + ":" + l.id);
    }
    l.rate = j.value("rate", l.rate);
    l.scan_period = j.value("scan_period", l.scan_period);
    l.azimuth_steps = j.value("azimuth_steps", l.azimuth_steps);
    l.elevation_rings = j.value("elevation_rings", l.elevation_rings);
    l.elevation_min_deg = j.value("elevation_min_deg", l.elevation_min_deg);
    l.elevation_max_deg = j.value("elevation_max_deg", l.elevation_max_deg);
    l.range_min = j.value("range_min", l.range_min);
    l.range_max = j.value("range_max", l.range_max);
    l.noise_sigma = j.value("noise_sigma", l.noise_sigma);
    l.per_point_timing = j.value("per_point_timing", l.per_point_timing);
    l.binary = j.value("binary", l.binary);
    spec.lidars.push_back(std::move(l));
  }
  if (spec.lidars.empty()) throw ValidationError(path + ": needs at least one lidar");

  for (const auto& j : root.value("odometry", json::array())) {
    OdomSourceSpec o;
    o.id = j.value("id", o.id);
    const std::string kind = j.value("kind", "full");
    if (kind == "full") {
      o.kind = SourceKind::kFullOdometry;
    } else if (kind == "rotation_only") {
      o.kind = SourceKind::kRotationOnly;
    } else {
      throw ValidationError(path + ": odometry kind must be full or rotation_only");
    }
    o.priority = j.value("priority", o.priority);
    o.rate = j.value("rate", o.rate);
    o.phase = j.value("phase", o.phase);
    o.noise_sigma_translation =
        j.value("noise_sigma_translation", o.noise_sigma_translation);
    o.noise_sigma_rotation_deg =
        j.value("noise_sigma_rotation_deg", o.noise_sigma_rotation_deg);
    if (j.contains("extrinsic")) {
      o.extrinsic = parse_pose7(j["extrinsic"], path + ":" + o.id);
    }
    spec.odometry.push_back(std::move(o));
  }
  return spec;
}

std::string generate_synthetic(const SynthSpec& spec, const std::string& out_dir) {
  fs::create_directories(out_dir);
  const fs::path base(out_dir);

  json manifest;
  manifest["lidars"] = json::array();
  manifest["odometry"] = json::array();

  // Lidar scans.
  bool any_surface = false;
  std::set<double> gt_stamps;
  for (std::size_t li = 0; li < spec.lidars.size(); ++li) {
    const LidarSpec& lidar = spec.lidars[li];
    std::vector<PointCloud> clouds;
    const auto scans =
        static_cast<std::size_t>(std::floor(spec.duration * lidar.rate)) + 1;
    for (std::size_t k = 0; k < scans; ++k) {
      const double t0 = static_cast<double>(k) / lidar.rate;
      PointCloud scan = render_scan(spec.world, spec.trajectory, lidar, t0,
                                    mix(spec.seed, mix(li, k)));
      any_surface = any_surface || !scan.empty();
      clouds.push_back(std::move(scan));
      gt_stamps.insert(t0);
      gt_stamps.insert(t0 + (lidar.per_point_timing ? lidar.scan_period : 0.0));
    }
    const std::string file =
        lidar.id + (lidar.binary ? ".clouds.bin" : ".clouds.txt");
    write_cloud_log((base / file).string(), clouds,
                    lidar.binary ? CloudFormat::kBinary : CloudFormat::kAscii);

    json decl;
    decl["id"] = lidar.id;
    const Quat& q = lidar.extrinsic.rotation;
    const Vec3& t = lidar.extrinsic.translation;
    decl["extrinsic"] = {t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w()};
    decl["file"] = file;
    manifest["lidars"].push_back(decl);
  }
  if (!any_surface) {
    throw ValidationError("synth: no ray hit any surface; degenerate world");
  }

  // Odometry / IMU pose logs.
  for (std::size_t oi = 0; oi < spec.odometry.size(); ++oi) {
    const OdomSourceSpec& o = spec.odometry[oi];
    std::mt19937_64 rng(mix(spec.seed, 0xD00D + oi));
    std::normal_distribution<double> gauss(0.0, 1.0);

    std::vector<StampedPose> poses;
    const auto samples =
        static_cast<std::size_t>(std::floor((spec.duration + 0.5) * o.rate)) + 1;
    for (std::size_t k = 0; k < samples; ++k) {
      const double t = o.phase + static_cast<double>(k) / o.rate;
      gt_stamps.insert(t);
      Pose pose = spec.trajectory.sample(t) * o.extrinsic;
      if (o.noise_sigma_translation > 0.0) {
        pose.translation += o.noise_sigma_translation *
                            Vec3(gauss(rng), gauss(rng), gauss(rng));
      }
      if (o.noise_sigma_rotation_deg > 0.0) {
        const Vec3 axis =
            Vec3(gauss(rng), gauss(rng), gauss(rng)).normalized();
        const double angle =
            o.noise_sigma_rotation_deg * M_PI / 180.0 * gauss(rng);
        pose.rotation = (Eigen::AngleAxis<Scalar>(angle, axis) * pose.rotation)
                            .normalized();
      }
      if (o.kind == SourceKind::kRotationOnly) pose.translation.setZero();
      poses.push_back({t, pose});
    }
    const std::string file = o.id + ".poses.txt";
    write_pose_log((base / file).string(), poses);

    json decl;
    decl["id"] = o.id;
    decl["kind"] = o.kind == SourceKind::kRotationOnly ? "rotation_only" : "full";
    decl["priority"] = o.priority;
    decl["rate"] = o.rate;
    const Quat& q = o.extrinsic.rotation;
    const Vec3& t = o.extrinsic.translation;
    decl["extrinsic"] = {t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w()};
    decl["file"] = file;
    manifest["odometry"].push_back(decl);
  }

  // Ground truth: the analytic trajectory at scan boundaries, plus a surface
  // sampling of the world.
  {
    std::vector<StampedPose> gt;
    double previous = -1.0;
    for (double t : gt_stamps) {
      if (t - previous < 1e-9) continue;
      previous = t;
      gt.push_back({t, spec.trajectory.sample(t)});
    }
    write_pose_log((base / "gt_trajectory.txt").string(), gt);
    manifest["ground_truth_trajectory"] = "gt_trajectory.txt";
  }
  {
    std::vector<PointCloud> gt_map = {
        sample_world_surface(spec.world, spec.gt_sample_spacing)};
    write_cloud_log((base / "gt_map.txt").string(), gt_map, CloudFormat::kAscii);
    manifest["ground_truth_map"] = "gt_map.txt";
  }

  const std::string manifest_path = (base / "manifest.json").string();
  std::ofstream out(manifest_path);
  if (!out) throw ValidationError("cannot write manifest: " + manifest_path);
  out << manifest.dump(2) << '\n';
  return manifest_path;
}

}  // namespace lodom::io
