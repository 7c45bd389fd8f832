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

#include "lodom/io/formats.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace lodom::io {

namespace {

[[noreturn]] void fail(const std::string& path, std::size_t line,
                       const std::string& what) {
  throw ValidationError(path + ":" + std::to_string(line) + ": " + what);
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode) {
  std::ofstream out(path, mode);
  if (!out) throw ValidationError("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path, std::ios::openmode mode) {
  std::ifstream in(path, mode);
  if (!in) throw ValidationError("cannot open: " + path);
  return in;
}

void write_raw(std::ofstream& out, const void* data, std::size_t bytes) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
}

bool read_raw(std::ifstream& in, void* data, std::size_t bytes) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(bytes));
  return in.gcount() == static_cast<std::streamsize>(bytes);
}

}  // namespace

void write_pose_log(const std::string& path, const std::vector<StampedPose>& poses) {
  std::ofstream out = open_out(path, std::ios::out);
  out << std::setprecision(17);
  out << "# stamp tx ty tz qx qy qz qw\n";
  for (const StampedPose& sp : poses) {
    const Quat& q = sp.pose.rotation;
    const Vec3& t = sp.pose.translation;
    out << sp.time << ' ' << t.x() << ' ' << t.y() << ' ' << t.z() << ' '
        << q.x() << ' ' << q.y() << ' ' << q.z() << ' ' << q.w() << '\n';
  }
}

std::vector<StampedPose> read_pose_log(const std::string& path) {
  std::ifstream in = open_in(path, std::ios::in);
  std::vector<StampedPose> poses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double stamp, tx, ty, tz, qx, qy, qz, qw;
    if (!(ss >> stamp >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
      fail(path, line_no, "expected 8 fields: stamp tx ty tz qx qy qz qw");
    }
    if (!std::isfinite(stamp) || stamp < 0.0) {
      fail(path, line_no, "stamp must be finite and non-negative");
    }
    if (!poses.empty() && stamp <= poses.back().time) {
      fail(path, line_no, "stamp regression within stream");
    }
    poses.push_back({stamp, Pose(Quat(qw, qx, qy, qz), Vec3(tx, ty, tz))});
  }
  return poses;
}

void write_cloud_log(const std::string& path, const std::vector<PointCloud>& clouds,
                     CloudFormat format) {
  if (format == CloudFormat::kAscii) {
    std::ofstream out = open_out(path, std::ios::out);
    out << std::setprecision(17);
    for (const PointCloud& c : clouds) {
      out << c.stamp << ' ' << c.frame << ' ' << c.size() << '\n';
      for (std::size_t i = 0; i < c.size(); ++i) {
        const Vec3& p = c.positions[i];
        const double off = c.has_time_offsets() ? c.time_offsets[i] : 0.0;
        out << p.x() << ' ' << p.y() << ' ' << p.z() << ' ' << off << '\n';
      }
    }
    return;
  }

  std::ofstream out = open_out(path, std::ios::out | std::ios::binary);
  for (const PointCloud& c : clouds) {
    write_raw(out, &c.stamp, sizeof(double));
    const auto frame_len = static_cast<std::uint32_t>(c.frame.size());
    write_raw(out, &frame_len, sizeof(frame_len));
    write_raw(out, c.frame.data(), c.frame.size());
    const auto count = static_cast<std::uint64_t>(c.size());
    write_raw(out, &count, sizeof(count));
    for (std::size_t i = 0; i < c.size(); ++i) {
      double rec[4] = {c.positions[i].x(), c.positions[i].y(), c.positions[i].z(),
                       c.has_time_offsets() ? c.time_offsets[i] : 0.0};
      write_raw(out, rec, sizeof(rec));
    }
  }
}

namespace {

// An all-zero offset column means the scan carries no per-point timing.
void finalize_offsets(PointCloud& c) {
  const bool any_nonzero =
      std::any_of(c.time_offsets.begin(), c.time_offsets.end(),
                  [](double v) { return v != 0.0; });
  if (!any_nonzero) c.time_offsets.clear();
}

}  // namespace

std::vector<PointCloud> read_cloud_log(const std::string& path, CloudFormat format) {
  std::vector<PointCloud> clouds;

  if (format == CloudFormat::kAscii) {
    std::ifstream in = open_in(path, std::ios::in);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream header(line);
      PointCloud c;
      std::size_t count = 0;
      if (!(header >> c.stamp >> c.frame >> count)) {
        fail(path, line_no, "expected cloud header: stamp frame count");
      }
      if (!clouds.empty() && c.stamp <= clouds.back().stamp) {
        fail(path, line_no, "cloud stamp regression within stream");
      }
      c.positions.reserve(count);
      c.time_offsets.reserve(count);
      for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(in, line)) {
          fail(path, line_no, "unexpected end of file inside cloud block");
        }
        ++line_no;
        std::istringstream ss(line);
        double x, y, z, off;
        if (!(ss >> x >> y >> z >> off)) {
          fail(path, line_no, "expected point record: x y z time_offset");
        }
        c.positions.emplace_back(x, y, z);
        c.time_offsets.push_back(off);
      }
      finalize_offsets(c);
      clouds.push_back(std::move(c));
    }
    return clouds;
  }

  std::ifstream in = open_in(path, std::ios::in | std::ios::binary);
  std::size_t record = 0;
  while (true) {
    PointCloud c;
    if (!read_raw(in, &c.stamp, sizeof(double))) break;  // clean EOF
    ++record;
    std::uint32_t frame_len = 0;
    if (!read_raw(in, &frame_len, sizeof(frame_len)) || frame_len > 4096) {
      fail(path, record, "corrupt binary cloud record (frame)");
    }
    c.frame.resize(frame_len);
    if (frame_len > 0 && !read_raw(in, c.frame.data(), frame_len)) {
      fail(path, record, "corrupt binary cloud record (frame bytes)");
    }
    std::uint64_t count = 0;
    if (!read_raw(in, &count, sizeof(count))) {
      fail(path, record, "corrupt binary cloud record (count)");
    }
    if (!clouds.empty() && c.stamp <= clouds.back().stamp) {
      fail(path, record, "cloud stamp regression within stream");
    }
    c.positions.reserve(count);
    c.time_offsets.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
      double rec[4];
      if (!read_raw(in, rec, sizeof(rec))) {
        fail(path, record, "corrupt binary cloud record (points)");
      }
      c.positions.emplace_back(rec[0], rec[1], rec[2]);
      c.time_offsets.push_back(rec[3]);
    }
    finalize_offsets(c);
    clouds.push_back(std::move(c));
  }
  return clouds;
}

CloudFormat cloud_format_for_path(const std::string& path) {
  return path.size() >= 4 && path.substr(path.size() - 4) == ".bin"
             ? CloudFormat::kBinary
             : CloudFormat::kAscii;
}

}  // namespace lodom::io
