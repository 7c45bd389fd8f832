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

#include "lodom/io/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace lodom::io {

namespace {

using nlohmann::json;

/// Tracks which keys of a JSON object were consumed; leftovers are errors so
/// config typos never tune silently.
class StrictObject {
 public:
  StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw ValidationError(path_ + ": expected an object");
    }
  }

  double number(const char* key, double def) {
    const json* v = take(key);
    if (v == nullptr) return def;
    if (!v->is_number()) throw ValidationError(at(key) + ": expected a number");
    return v->get<double>();
  }

  int integer(const char* key, int def) {
    const json* v = take(key);
    if (v == nullptr) return def;
    if (!v->is_number_integer()) {
      throw ValidationError(at(key) + ": expected an integer");
    }
    return v->get<int>();
  }

  std::uint64_t uinteger(const char* key, std::uint64_t def) {
    const json* v = take(key);
    if (v == nullptr) return def;
    if (!v->is_number_unsigned() && !v->is_number_integer()) {
      throw ValidationError(at(key) + ": expected an unsigned integer");
    }
    return v->get<std::uint64_t>();
  }

  bool boolean(const char* key, bool def) {
    const json* v = take(key);
    if (v == nullptr) return def;
    if (!v->is_boolean()) throw ValidationError(at(key) + ": expected a boolean");
    return v->get<bool>();
  }

  std::string str(const char* key, const std::string& def) {
    const json* v = take(key);
    if (v == nullptr) return def;
    if (!v->is_string()) throw ValidationError(at(key) + ": expected a string");
    return v->get<std::string>();
  }

  const json* object(const char* key) { return take(key); }

  void done() const {
    for (const auto& [key, value] : j_.items()) {
      if (!consumed_.contains(key)) {
        throw ValidationError(path_ + ": unknown key '" + key + "'");
      }
    }
  }

  std::string at(const char* key) const { return path_ + "." + key; }

 private:
  const json* take(const char* key) {
    consumed_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> consumed_;
};

json parse_json(const std::string& text, const std::string& origin) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) {
    throw ValidationError(origin + ": malformed JSON");
  }
  return j;
}

}  // namespace

PipelineSettings PipelineSettings::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str(), path);
}

PipelineSettings PipelineSettings::parse(const std::string& json_text,
                                         const std::string& origin) {
  const json root_json = parse_json(json_text, origin);
  StrictObject root(root_json, origin);
  PipelineSettings s;

  if (const json* sec = root.object("preprocess")) {
    StrictObject o(*sec, origin + ":preprocess");
    s.pipeline.scan_period = o.number("scan_period", s.pipeline.scan_period);
    s.pipeline.mdc_enabled = o.boolean("mdc_enabled", s.pipeline.mdc_enabled);
    const std::string ref = o.str("mdc_reference", "scan_end");
    if (ref == "scan_end") {
      s.pipeline.mdc_reference = MdcReference::kScanEnd;
    } else if (ref == "scan_start") {
      s.pipeline.mdc_reference = MdcReference::kScanStart;
    } else {
      throw ValidationError(o.at("mdc_reference") +
                            ": expected scan_end or scan_start");
    }
    FilterConfig& f = s.pipeline.filter;
    f.range_min = o.number("range_min", f.range_min);
    f.range_max = o.number("range_max", f.range_max);
    f.voxel_enabled = o.boolean("voxel_enabled", f.voxel_enabled);
    f.voxel_leaf = o.number("voxel_leaf", f.voxel_leaf);
    f.random_enabled = o.boolean("random_enabled", f.random_enabled);
    f.keep_fraction = o.number("keep_fraction", f.keep_fraction);
    o.done();
  }

  if (const json* sec = root.object("fusion")) {
    StrictObject o(*sec, origin + ":fusion");
    FusionConfig& f = s.fusion;
    f.health_window = o.number("health_window", f.health_window);
    f.min_rate = o.number("min_rate", f.min_rate);
    f.buffer_span = o.number("buffer_span", f.buffer_span);
    f.bracket_tolerance = o.number("bracket_tolerance", f.bracket_tolerance);
    f.late_tolerance = o.number("late_tolerance", f.late_tolerance);
    o.done();
  }

  {
    GicpConfig base;
    int s2s_iterations = 20;
    int s2m_iterations = 20;
    if (const json* sec = root.object("registration")) {
      StrictObject o(*sec, origin + ":registration");
      s2s_iterations = o.integer("scan_to_scan_iterations", s2s_iterations);
      s2m_iterations = o.integer("scan_to_submap_iterations", s2m_iterations);
      base.correspondence_max_dist =
          o.number("correspondence_max_dist", base.correspondence_max_dist);
      base.translation_epsilon =
          o.number("translation_epsilon", base.translation_epsilon);
      base.rotation_epsilon = o.number("rotation_epsilon", base.rotation_epsilon);
      base.neighbors_k = o.integer("neighbors_k", base.neighbors_k);
      base.workers = o.integer("workers", base.workers);
      base.covariance_floor = o.number("covariance_floor", base.covariance_floor);
      o.done();
    }
    s.pipeline.gicp_s2s = base;
    s.pipeline.gicp_s2s.max_iterations = s2s_iterations;
    s.pipeline.gicp_s2m = base;
    s.pipeline.gicp_s2m.max_iterations = s2m_iterations;
  }

  if (const json* sec = root.object("mapping")) {
    StrictObject o(*sec, origin + ":mapping");
    s.pipeline.keyframe.translation_threshold =
        o.number("translation_threshold", s.pipeline.keyframe.translation_threshold);
    s.pipeline.keyframe.rotation_threshold_deg =
        o.number("rotation_threshold_deg", s.pipeline.keyframe.rotation_threshold_deg);
    s.pipeline.map_resolution = o.number("map_resolution", s.pipeline.map_resolution);
    s.pipeline.submap_radius = o.number("submap_radius", s.pipeline.submap_radius);
    o.done();
  }

  if (const json* sec = root.object("pipeline")) {
    StrictObject o(*sec, origin + ":pipeline");
    const std::string mode = o.str("fga_mode", "off");
    if (mode == "off") {
      s.pipeline.fga_mode = FgaMode::kOff;
    } else if (mode == "forced_on") {
      s.pipeline.fga_mode = FgaMode::kForcedOn;
    } else if (mode == "imu_auto") {
      s.pipeline.fga_mode = FgaMode::kImuAuto;
    } else {
      throw ValidationError(o.at("fga_mode") +
                            ": expected off, forced_on or imu_auto");
    }
    s.pipeline.fga_window = o.number("fga_window", s.pipeline.fga_window);
    s.pipeline.fga_angle_tol_rad =
        o.number("fga_angle_tol_deg", 3.0) * M_PI / 180.0;
    s.pipeline.gap_activation = o.number("gap_activation", s.pipeline.gap_activation);
    s.pipeline.seed = o.uinteger("seed", s.pipeline.seed);
    o.done();
  }

  if (const json* sec = root.object("eval")) {
    StrictObject o(*sec, origin + ":eval");
    s.eval.assoc_tol = o.number("assoc_tol", s.eval.assoc_tol);
    const std::string alignment = o.str("alignment", "se3");
    if (alignment == "se3") {
      s.eval.alignment = ApeAlignment::kSe3;
    } else if (alignment == "none") {
      s.eval.alignment = ApeAlignment::kNone;
    } else {
      throw ValidationError(o.at("alignment") + ": expected se3 or none");
    }
    o.done();
  }

  root.done();

  try {
    s.pipeline.validate();
    s.fusion.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(origin + ": " + e.what());
  }
  if (!(s.eval.assoc_tol > 0.0)) {
    throw ValidationError(origin + ": eval.assoc_tol must be positive");
  }
  return s;
}

std::string PipelineSettings::echo() const {
  std::ostringstream out;
  const PipelineOptions& p = pipeline;
  out << "preprocess.scan_period = " << p.scan_period << '\n'
      << "preprocess.mdc_enabled = " << (p.mdc_enabled ? "true" : "false") << '\n'
      << "preprocess.mdc_reference = "
      << (p.mdc_reference == MdcReference::kScanEnd ? "scan_end" : "scan_start")
      << '\n'
      << "preprocess.range_min = " << p.filter.range_min << '\n'
      << "preprocess.range_max = " << p.filter.range_max << '\n'
      << "preprocess.voxel_enabled = " << (p.filter.voxel_enabled ? "true" : "false")
      << '\n'
      << "preprocess.voxel_leaf = " << p.filter.voxel_leaf << '\n'
      << "preprocess.random_enabled = "
      << (p.filter.random_enabled ? "true" : "false") << '\n'
      << "preprocess.keep_fraction = " << p.filter.keep_fraction << '\n'
      << "fusion.health_window = " << fusion.health_window << '\n'
      << "fusion.min_rate = " << fusion.min_rate << '\n'
      << "fusion.buffer_span = " << fusion.buffer_span << '\n'
      << "fusion.bracket_tolerance = " << fusion.bracket_tolerance << '\n'
      << "fusion.late_tolerance = " << fusion.late_tolerance << '\n'
      << "registration.scan_to_scan_iterations = " << p.gicp_s2s.max_iterations
      << '\n'
      << "registration.scan_to_submap_iterations = " << p.gicp_s2m.max_iterations
      << '\n'
      << "registration.correspondence_max_dist = "
      << p.gicp_s2s.correspondence_max_dist << '\n'
      << "registration.translation_epsilon = " << p.gicp_s2s.translation_epsilon
      << '\n'
      << "registration.rotation_epsilon = " << p.gicp_s2s.rotation_epsilon << '\n'
      << "registration.neighbors_k = " << p.gicp_s2s.neighbors_k << '\n'
      << "registration.workers = " << p.gicp_s2s.workers << '\n'
      << "registration.covariance_floor = " << p.gicp_s2s.covariance_floor << '\n'
      << "mapping.translation_threshold = " << p.keyframe.translation_threshold
      << '\n'
      << "mapping.rotation_threshold_deg = " << p.keyframe.rotation_threshold_deg
      << '\n'
      << "mapping.map_resolution = " << p.map_resolution << '\n'
      << "mapping.submap_radius = " << p.submap_radius << '\n'
      << "pipeline.fga_mode = "
      << (p.fga_mode == FgaMode::kOff
              ? "off"
              : p.fga_mode == FgaMode::kForcedOn ? "forced_on" : "imu_auto")
      << '\n'
      << "pipeline.fga_window = " << p.fga_window << '\n'
      << "pipeline.fga_angle_tol_deg = " << p.fga_angle_tol_rad * 180.0 / M_PI
      << '\n'
      << "pipeline.gap_activation = " << p.gap_activation << '\n'
      << "pipeline.seed = " << p.seed << '\n'
      << "eval.assoc_tol = " << eval.assoc_tol << '\n'
      << "eval.alignment = "
      << (eval.alignment == ApeAlignment::kSe3 ? "se3" : "none") << '\n';
  return out.str();
}

}  // namespace lodom::io
