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

#include "lodom/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace lodom {

void FusionConfig::validate() const {
  if (!(health_window > 0.0)) {
    throw std::invalid_argument("fusion: health_window must be positive");
  }
  if (!(min_rate > 0.0)) {
    throw std::invalid_argument("fusion: min_rate must be positive");
  }
  if (!(buffer_span > 0.0)) {
    throw std::invalid_argument("fusion: buffer_span must be positive");
  }
  if (bracket_tolerance < 0.0 || late_tolerance < 0.0) {
    throw std::invalid_argument("fusion: tolerances must be non-negative");
  }
}

SourceBuffer::SourceBuffer(SourceConfig config, FusionConfig fusion)
    : config_(std::move(config)), fusion_(fusion) {}

void SourceBuffer::ingest(const StampedPose& m) {
  Pose in_robot = m.pose * inverse(config_.extrinsic);
  if (config_.kind == SourceKind::kRotationOnly) {
    in_robot.translation.setZero();
  }
  const StampedPose entry{m.time, in_robot};

  std::lock_guard<std::mutex> lock(mutex_);
  if (buffer_.empty() || entry.time > buffer_.back().time) {
    buffer_.push_back(entry);
  } else if (buffer_.back().time - entry.time <= fusion_.late_tolerance) {
    auto it = std::lower_bound(
        buffer_.begin(), buffer_.end(), entry.time,
        [](const StampedPose& a, double t) { return a.time < t; });
    if (it != buffer_.end() && it->time == entry.time) {
      ++dropped_;  // duplicate stamp
      return;
    }
    buffer_.insert(it, entry);
  } else {
    ++dropped_;
    return;
  }

  const double horizon = buffer_.back().time - fusion_.buffer_span;
  while (!buffer_.empty() && buffer_.front().time < horizon) {
    buffer_.pop_front();
  }
}

bool SourceBuffer::is_healthy(double now) const {
  const auto required = static_cast<std::size_t>(
      std::ceil(fusion_.min_rate * fusion_.health_window));
  std::lock_guard<std::mutex> lock(mutex_);
  auto lo = std::lower_bound(
      buffer_.begin(), buffer_.end(), now - fusion_.health_window,
      [](const StampedPose& a, double t) { return a.time < t; });
  auto hi = std::upper_bound(
      buffer_.begin(), buffer_.end(), now,
      [](double t, const StampedPose& a) { return t < a.time; });
  return static_cast<std::size_t>(std::distance(lo, hi)) >= required;
}

std::optional<Pose> SourceBuffer::sample(double t) const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (buffer_.empty()) return std::nullopt;
  if (t < buffer_.front().time) return std::nullopt;
  if (t >= buffer_.back().time) {
    if (t - buffer_.back().time <= fusion_.bracket_tolerance) {
      return buffer_.back().pose;  // hold the newest pose, never extrapolate
    }
    return std::nullopt;
  }
  auto hi = std::upper_bound(
      buffer_.begin(), buffer_.end(), t,
      [](double q, const StampedPose& a) { return q < a.time; });
  auto lo = std::prev(hi);
  if (lo->time == t) return lo->pose;
  return interpolate(*lo, *hi, t);
}

bool SourceBuffer::can_bracket(double t) const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (buffer_.empty()) return false;
  return t >= buffer_.front().time &&
         t <= buffer_.back().time + fusion_.bracket_tolerance;
}

std::size_t SourceBuffer::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return buffer_.size();
}

std::size_t SourceBuffer::dropped() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return dropped_;
}

std::optional<double> SourceBuffer::newest_time() const {
  std::lock_guard<std::mutex> lock(mutex_);
  if (buffer_.empty()) return std::nullopt;
  return buffer_.back().time;
}

SensorIntegrator::SensorIntegrator(const std::vector<SourceConfig>& sources,
                                   FusionConfig config)
    : config_(config) {
  config_.validate();
  std::set<int> priorities;
  std::set<std::string> ids;
  for (const SourceConfig& s : sources) {
    if (!priorities.insert(s.priority).second) {
      throw std::invalid_argument("fusion: duplicate source priority " +
                                  std::to_string(s.priority));
    }
    if (!ids.insert(s.id).second) {
      throw std::invalid_argument("fusion: duplicate source id " + s.id);
    }
    sources_.push_back(std::make_unique<SourceBuffer>(s, config_));
  }
  std::sort(sources_.begin(), sources_.end(),
            [](const auto& a, const auto& b) {
              return a->config().priority < b->config().priority;
            });
}

void SensorIntegrator::ingest(const std::string& id, const StampedPose& m) {
  for (auto& s : sources_) {
    if (s->config().id == id) {
      s->ingest(m);
      return;
    }
  }
  throw std::invalid_argument("fusion: unknown source id " + id);
}

std::optional<std::string> SensorIntegrator::select_source(double now) const {
  for (const auto& s : sources_) {
    if (s->is_healthy(now)) return s->config().id;
  }
  return std::nullopt;
}

const SourceBuffer* SensorIntegrator::pick_for_interval(double t_prev,
                                                        double t_curr) const {
  for (const auto& s : sources_) {
    if (!s->is_healthy(t_curr)) continue;
    if (!s->can_bracket(t_prev) || !s->can_bracket(t_curr)) continue;
    return s.get();
  }
  return nullptr;
}

PriorResult SensorIntegrator::compute_prior(double t_prev, double t_curr) const {
  if (!(t_prev < t_curr)) {
    throw std::invalid_argument("compute_prior: require t_prev < t_curr");
  }
  const SourceBuffer* src = pick_for_interval(t_prev, t_curr);
  if (src == nullptr) {
    return PriorResult{Pose::Identity(), std::nullopt, true};
  }
  const std::optional<Pose> y_prev = src->sample(t_prev);
  const std::optional<Pose> y_curr = src->sample(t_curr);
  if (!y_prev || !y_curr) {
    return PriorResult{Pose::Identity(), std::nullopt, true};
  }
  Pose prior = relative(*y_prev, *y_curr);
  if (src->config().kind == SourceKind::kRotationOnly) {
    prior.translation.setZero();
  }
  return PriorResult{prior, src->config().id, false};
}

MotionProvider SensorIntegrator::motion_provider(double now,
                                                 const Pose& extrinsic) const {
  // Pick the source once per scan so every point of the scan is corrected by
  // one consistent stream.
  const SourceBuffer* chosen = nullptr;
  for (const auto& s : sources_) {
    if (s->is_healthy(now)) {
      chosen = s.get();
      break;
    }
  }
  if (chosen == nullptr) {
    return [](double) { return std::nullopt; };
  }
  return [chosen, extrinsic](double t) -> std::optional<Pose> {
    const std::optional<Pose> y = chosen->sample(t);
    if (!y) return std::nullopt;
    return *y * extrinsic;
  };
}

const SourceBuffer* SensorIntegrator::find(const std::string& id) const {
  for (const auto& s : sources_) {
    if (s->config().id == id) return s.get();
  }
  return nullptr;
}

std::vector<const SourceBuffer*> SensorIntegrator::buffers() const {
  std::vector<const SourceBuffer*> out;
  out.reserve(sources_.size());
  for (const auto& s : sources_) out.push_back(s.get());
  return out;
}

}  // namespace lodom
