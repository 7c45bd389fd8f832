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

#include <cmath>
#include <thread>

#include "lodom/fusion.hpp"
#include "support/test_support.hpp"

using namespace lodom;

namespace {

SourceConfig make_source(const std::string& id, int priority,
                         SourceKind kind = SourceKind::kFullOdometry) {
  SourceConfig s;
  s.id = id;
  s.priority = priority;
  s.kind = kind;
  return s;
}

FusionConfig tight_config() {
  FusionConfig f;
  f.health_window = 2.0;
  f.min_rate = 1.0;
  f.buffer_span = 30.0;
  return f;
}

void feed_constant_rate(SensorIntegrator& integrator, const std::string& id,
                        double start, double stop, double rate,
                        const std::function<Pose(double)>& pose_fn) {
  const auto n = static_cast<std::size_t>(std::floor((stop - start) * rate)) + 1;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = start + static_cast<double>(k) / rate;
    if (t > stop) break;
    integrator.ingest(id, {t, pose_fn(t)});
  }
}

}  // namespace

TEST_SUITE("fusion") {

TEST_CASE("ingest: first measurement, ordering, and eviction") {
  SourceBuffer buf(make_source("wio", 0), tight_config());

  buf.ingest({1.0, Pose::Identity()});
  CHECK(buf.size() == 1);

  // In-order 50 Hz stream of 100 spans 2 s (no eviction at a 30 s bound).
  SourceBuffer stream(make_source("wio", 0), tight_config());
  for (int k = 0; k < 100; ++k) {
    stream.ingest({1.0 + 0.02 * k, Pose::Identity()});
  }
  CHECK(stream.size() == 100);
  CHECK(*stream.newest_time() == doctest::Approx(1.0 + 0.02 * 99));

  // A measurement older than the retained span is dropped and counted.
  FusionConfig small = tight_config();
  small.buffer_span = 2.0;
  SourceBuffer bounded(make_source("wio", 0), small);
  bounded.ingest({10.0, Pose::Identity()});
  const std::size_t before = bounded.dropped();
  bounded.ingest({7.5, Pose::Identity()});
  CHECK(bounded.dropped() == before + 1);
  CHECK(bounded.size() == 1);
}

TEST_CASE("ingest: late arrivals within tolerance insert in order") {
  SourceBuffer buf(make_source("wio", 0), tight_config());
  buf.ingest({1.000, translate(1, 0, 0)});
  buf.ingest({1.020, translate(2, 0, 0)});
  buf.ingest({1.015, translate(1.5, 0, 0)});  // 5 ms late: inserted
  CHECK(buf.size() == 3);
  buf.ingest({0.900, Pose::Identity()});  // 120 ms late: dropped
  CHECK(buf.size() == 3);
  CHECK(buf.dropped() == 1);
  // Interpolation across the inserted sample stays consistent.
  const auto pose = buf.sample(1.0175);
  REQUIRE(pose.has_value());
  CHECK(pose->translation.x() == doctest::Approx(1.75));
}

TEST_CASE("ingest: eviction keeps the buffer span bounded") {
  FusionConfig cfg = tight_config();
  cfg.buffer_span = 1.0;
  SourceBuffer buf(make_source("wio", 0), cfg);
  for (int k = 0; k <= 200; ++k) {
    buf.ingest({0.02 * k, Pose::Identity()});
  }
  // Entries older than newest - 1 s are gone: 1 s at 50 Hz ~ 51 entries.
  CHECK(buf.size() <= 52);
  CHECK(buf.size() >= 50);
}

TEST_CASE("is_healthy: 50 Hz stream over a 2 s window") {
  SourceBuffer buf(make_source("wio", 0), tight_config());
  for (int k = 0; k < 100; ++k) buf.ingest({0.02 * k, Pose::Identity()});
  CHECK(buf.is_healthy(2.0));
}

TEST_CASE("is_healthy: empty buffer is unhealthy") {
  SourceBuffer buf(make_source("wio", 0), tight_config());
  CHECK_FALSE(buf.is_healthy(1.0));
}

TEST_CASE("is_healthy: a stopped stream flips within one window") {
  SourceBuffer buf(make_source("wio", 0), tight_config());
  const double stop = 5.0;
  for (double t = 0.0; t <= stop; t += 0.02) buf.ingest({t, Pose::Identity()});

  CHECK(buf.is_healthy(stop));
  CHECK_FALSE(buf.is_healthy(stop + 2.0 + 1e-6));

  // Counting oracle at every probe instant.
  const auto required = static_cast<std::size_t>(std::ceil(1.0 * 2.0));
  for (double now = stop; now < stop + 3.0; now += 0.1) {
    std::size_t count = 0;
    for (double t = 0.0; t <= stop; t += 0.02) {
      if (t >= now - 2.0 && t <= now) ++count;
    }
    CHECK(buf.is_healthy(now) == (count >= required));
  }
}

TEST_CASE("select_source walks the priority queue") {
  SensorIntegrator integrator(
      {make_source("vio", 0), make_source("kio", 1),
       make_source("imu", 2, SourceKind::kRotationOnly)},
      tight_config());

  feed_constant_rate(integrator, "vio", 0.0, 5.0, 50.0,
                     [](double) { return Pose::Identity(); });
  feed_constant_rate(integrator, "kio", 0.0, 5.0, 50.0,
                     [](double) { return Pose::Identity(); });
  feed_constant_rate(integrator, "imu", 0.0, 5.0, 50.0,
                     [](double) { return Pose::Identity(); });

  CHECK(*integrator.select_source(5.0) == "vio");

  // VIO stops; KIO takes over after the window drains.
  feed_constant_rate(integrator, "kio", 5.0, 12.0, 50.0,
                     [](double) { return Pose::Identity(); });
  feed_constant_rate(integrator, "imu", 5.0, 12.0, 50.0,
                     [](double) { return Pose::Identity(); });
  CHECK(*integrator.select_source(10.0) == "kio");
}

TEST_CASE("select_source: all unhealthy yields none") {
  SensorIntegrator integrator({make_source("vio", 0)}, tight_config());
  CHECK_FALSE(integrator.select_source(1.0).has_value());
}

TEST_CASE("priorities must be unique") {
  CHECK_THROWS_AS(
      SensorIntegrator({make_source("a", 0), make_source("b", 0)}, tight_config()),
      std::invalid_argument);
}

TEST_CASE("compute_prior: constant pose yields identity") {
  SensorIntegrator integrator({make_source("wio", 0)}, tight_config());
  feed_constant_rate(integrator, "wio", 0.0, 3.0, 50.0,
                     [](double) { return translate(4, 5, 6); });
  const PriorResult prior = integrator.compute_prior(2.0, 2.1);
  CHECK_FALSE(prior.degraded_to_identity);
  CHECK(*prior.source_id == "wio");
  CHECK(prior.transform.translation.norm() < 1e-12);
  CHECK(rotation_angle(prior.transform.rotation) < 1e-12);
}

TEST_CASE("compute_prior: constant velocity gives the exact displacement") {
  SensorIntegrator integrator({make_source("wio", 0)}, tight_config());
  feed_constant_rate(integrator, "wio", 0.0, 3.0, 50.0, [](double t) {
    return Pose(Quat::Identity(), Vec3(t, 0, 0));
  });
  const PriorResult prior = integrator.compute_prior(2.0, 2.1);
  CHECK((prior.transform.translation - Vec3(0.1, 0, 0)).norm() < 1e-9);
}

TEST_CASE("compute_prior: rotation-only source yields zero translation") {
  SensorIntegrator integrator(
      {make_source("imu", 0, SourceKind::kRotationOnly)}, tight_config());
  const double rate_rad = 10.0 * M_PI / 180.0;  // 10 deg/s about z
  feed_constant_rate(integrator, "imu", 0.0, 3.0, 50.0, [&](double t) {
    // The log reports translation too; a rotation-only source must ignore it.
    return Pose(from_rpy(0, 0, rate_rad * t), Vec3(t, t, t));
  });
  const PriorResult prior = integrator.compute_prior(2.0, 2.1);
  CHECK(prior.transform.translation.norm() == 0.0);
  CHECK(rotation_angle(prior.transform.rotation) ==
        doctest::Approx(1.0 * M_PI / 180.0).epsilon(1e-6));
}

TEST_CASE("source extrinsics map measurements into the robot frame") {
  // A source mounted with a 90 degree yaw offset: it reports its own pose in
  // the world, and the buffered prior must still describe the robot motion.
  SourceConfig src = make_source("vio", 0);
  src.extrinsic = Pose(from_rpy(0, 0, M_PI / 2), Vec3(0.3, 0.0, 0.1));
  SensorIntegrator integrator({src}, tight_config());

  const auto robot_pose = [](double t) {
    return Pose(Quat::Identity(), Vec3(t, 0, 0));  // +x at 1 m/s
  };
  feed_constant_rate(integrator, "vio", 0.0, 3.0, 50.0, [&](double t) {
    return robot_pose(t) * src.extrinsic;  // sensor pose in the world
  });

  const PriorResult prior = integrator.compute_prior(2.0, 2.1);
  REQUIRE_FALSE(prior.degraded_to_identity);
  CHECK((prior.transform.translation - Vec3(0.1, 0, 0)).norm() < 1e-9);
  CHECK(rotation_angle(prior.transform.rotation) < 1e-9);
}

TEST_CASE("compute_prior validates the interval") {
  SensorIntegrator integrator({make_source("wio", 0)}, tight_config());
  CHECK_THROWS_AS(integrator.compute_prior(2.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(integrator.compute_prior(2.1, 2.0), std::invalid_argument);
}

TEST_CASE("compute_prior never extrapolates") {
  SensorIntegrator integrator({make_source("wio", 0)}, tight_config());
  feed_constant_rate(integrator, "wio", 0.0, 2.0, 50.0, [](double t) {
    return Pose(Quat::Identity(), Vec3(t, 0, 0));
  });
  // t_curr far beyond the newest stamp: identity fallback, never a guess.
  const PriorResult prior = integrator.compute_prior(1.9, 3.5);
  CHECK(prior.degraded_to_identity);
  CHECK_FALSE(prior.source_id.has_value());
  CHECK(prior.transform.translation.norm() == 0.0);
}

TEST_CASE("compute_prior holds the newest pose within the bracket tolerance") {
  SensorIntegrator integrator({make_source("wio", 0)}, tight_config());
  feed_constant_rate(integrator, "wio", 0.0, 2.0, 50.0, [](double t) {
    return Pose(Quat::Identity(), Vec3(t, 0, 0));
  });
  // newest stamp is 2.0; t_curr 15 ms past it uses the held pose.
  const PriorResult prior = integrator.compute_prior(1.5, 2.015);
  CHECK_FALSE(prior.degraded_to_identity);
  CHECK(prior.transform.translation.x() == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("compute_prior falls through to a source that can bracket") {
  SensorIntegrator integrator(
      {make_source("wio", 0), make_source("imu", 1, SourceKind::kRotationOnly)},
      tight_config());
  // WIO dies at t = 4; IMU keeps running. Shortly after the failure WIO is
  // still rate-healthy but cannot bracket current stamps, so the prior must
  // come from the IMU.
  feed_constant_rate(integrator, "wio", 0.0, 4.0, 50.0, [](double t) {
    return Pose(Quat::Identity(), Vec3(t, 0, 0));
  });
  feed_constant_rate(integrator, "imu", 0.0, 6.0, 50.0, [](double t) {
    return Pose(from_rpy(0, 0, 0.1 * t), Vec3::Zero());
  });

  CHECK(*integrator.select_source(4.5) == "wio");  // rate rule alone
  const PriorResult prior = integrator.compute_prior(4.4, 4.5);
  CHECK_FALSE(prior.degraded_to_identity);
  CHECK(*prior.source_id == "imu");
  CHECK(prior.transform.translation.norm() == 0.0);
}

TEST_CASE("concurrent feeders and a reader do not tear the buffers") {
  SensorIntegrator integrator(
      {make_source("a", 0), make_source("b", 1)}, tight_config());

  auto feeder = [&](const std::string& id) {
    for (int k = 0; k < 20000; ++k) {
      const double t = 1e-4 * k;
      integrator.ingest(id, {t, Pose(Quat::Identity(), Vec3(t, 0, 0))});
    }
  };
  std::thread fa(feeder, "a");
  std::thread fb(feeder, "b");

  // Reader: a sampled pose is either an exact interpolant (x == t) or the
  // newest pose held within bracket_tolerance, never a torn value.
  bool consistent = true;
  for (int probe = 0; probe < 2000; ++probe) {
    const double t = 1e-4 * (probe % 15000);
    const auto pose = integrator.find("a")->sample(t);
    if (pose && std::abs(pose->translation.x() - t) >
                    tight_config().bracket_tolerance + 1e-9) {
      consistent = false;
    }
  }
  fa.join();
  fb.join();
  CHECK(consistent);
  CHECK(integrator.find("a")->size() > 0);
  CHECK(integrator.find("b")->size() > 0);
  const PriorResult prior = integrator.compute_prior(1.0, 1.5);
  CHECK_FALSE(prior.degraded_to_identity);
}

TEST_CASE("cascade property: selection matches a scripted counting oracle") {
  const double wio_stop = 6.0, imu_stop = 10.0;
  SensorIntegrator integrator(
      {make_source("wio", 0), make_source("imu", 1, SourceKind::kRotationOnly)},
      tight_config());
  feed_constant_rate(integrator, "wio", 0.0, wio_stop, 50.0,
                     [](double) { return Pose::Identity(); });
  feed_constant_rate(integrator, "imu", 0.0, imu_stop, 50.0,
                     [](double) { return Pose::Identity(); });

  const auto required = static_cast<std::size_t>(std::ceil(1.0 * 2.0));
  auto count_in_window = [&](double stop, double now) {
    std::size_t count = 0;
    for (std::size_t k = 0;; ++k) {
      const double t = static_cast<double>(k) / 50.0;  // same stamps as the feed
      if (t > stop) break;
      if (t >= now - 2.0 && t <= now) ++count;
    }
    return count;
  };

  for (double now = 0.5; now < 14.0; now += 0.25) {
    std::optional<std::string> expected;
    if (count_in_window(wio_stop, now) >= required) {
      expected = "wio";
    } else if (count_in_window(imu_stop, now) >= required) {
      expected = "imu";
    }
    CHECK(integrator.select_source(now) == expected);
  }
}

}  // TEST_SUITE
