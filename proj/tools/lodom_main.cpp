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

#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "lodom/eval.hpp"
#include "lodom/io/config.hpp"
#include "lodom/io/dataset.hpp"
#include "lodom/io/synth.hpp"
#include "lodom/replay.hpp"

namespace {

namespace fs = std::filesystem;
using namespace lodom;

struct RunArgs {
  std::string config;
  std::string dataset;
  std::string scenario;
  std::string mode = "deterministic";
  std::string out;
  std::string stream;  // host:port for live odometry records
  std::int64_t seed = -1;
};

/// Streams odometry records over a local TCP connection, one newline-ended
/// record per emission, in trajectory-file field order.
class OdometryStream {
 public:
  OdometryStream(const std::string& host, const std::string& port) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* info = nullptr;
    if (getaddrinfo(host.c_str(), port.c_str(), &hints, &info) != 0) {
      throw io::ValidationError("stream: cannot resolve " + host + ":" + port);
    }
    for (addrinfo* a = info; a != nullptr; a = a->ai_next) {
      fd_ = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
      if (fd_ < 0) continue;
      if (::connect(fd_, a->ai_addr, a->ai_addrlen) == 0) break;
      ::close(fd_);
      fd_ = -1;
    }
    freeaddrinfo(info);
    if (fd_ < 0) {
      throw io::ValidationError("stream: cannot connect to " + host + ":" + port);
    }
  }

  ~OdometryStream() {
    if (fd_ >= 0) ::close(fd_);
  }

  void send(const OdometryOutput& o) {
    char line[320];
    const Vec3& t = o.pose.translation;
    const Quat& q = o.pose.rotation;
    const int n = std::snprintf(
        line, sizeof(line),
        "%.17g %.17g %.17g %.17g %.17g %.17g %.17g %.17g\n", o.stamp, t.x(),
        t.y(), t.z(), q.x(), q.y(), q.z(), q.w());
    if (n > 0) {
      // MSG_NOSIGNAL: a vanished consumer must not abort the replay.
      const ssize_t sent =
          ::send(fd_, line, static_cast<std::size_t>(n), MSG_NOSIGNAL);
      (void)sent;
    }
  }

 private:
  int fd_ = -1;
};

struct EvalArgs {
  std::string est;
  std::string gt;
  std::string map_est;
  std::string map_gt;
  std::string out;
  double assoc_tol = 0.05;
  std::string alignment = "se3";
};

struct SynthArgs {
  std::string spec;
  std::string out;
  std::int64_t seed = -1;
};

PointCloud read_single_cloud(const std::string& path) {
  const auto clouds = io::read_cloud_log(path, io::cloud_format_for_path(path));
  if (clouds.empty()) throw io::ValidationError(path + ": no clouds in file");
  if (clouds.size() == 1) return clouds.front();
  PointCloud merged = clouds.front();
  for (std::size_t i = 1; i < clouds.size(); ++i) {
    merged.positions.insert(merged.positions.end(), clouds[i].positions.begin(),
                            clouds[i].positions.end());
  }
  merged.time_offsets.clear();
  return merged;
}

void write_scan_log(const std::string& path,
                    const std::vector<OdometryOutput>& outputs) {
  std::ofstream out(path);
  out << std::setprecision(17);
  out << "# stamp kind prior_source prior_degraded scan_degraded "
         "s2s_conv s2m_conv s2s_iters s2m_iters s2s_res s2m_res mdc_coverage\n";
  for (const OdometryOutput& o : outputs) {
    out << o.stamp << ' ' << (o.gap_emission ? "gap" : "scan") << ' '
        << o.prior_source.value_or("none") << ' ' << o.prior_degraded << ' '
        << o.scan_degraded << ' ' << o.s2s_converged << ' ' << o.s2m_converged
        << ' ' << o.s2s_iterations << ' ' << o.s2m_iterations << ' '
        << o.s2s_residual << ' ' << o.s2m_residual << ' ' << o.mdc_coverage
        << '\n';
  }
}

int run_command(const RunArgs& args) {
  io::PipelineSettings settings = io::PipelineSettings::load(args.config);
  if (args.seed >= 0) {
    settings.pipeline.seed = static_cast<std::uint64_t>(args.seed);
  }

  const io::DatasetManifest manifest = io::DatasetManifest::load(args.dataset);
  std::vector<io::Event> events = io::load_events(manifest);
  if (!args.scenario.empty()) {
    events = io::apply_scenario(events, io::ScenarioScript::load(args.scenario));
  }

  ReplayOptions replay;
  if (args.mode == "deterministic") {
    replay.mode = ReplayMode::kDeterministic;
  } else if (args.mode == "paced") {
    replay.mode = ReplayMode::kPaced;
  } else {
    throw io::ValidationError("mode must be deterministic or paced");
  }

  std::unique_ptr<OdometryStream> stream;
  if (!args.stream.empty()) {
    const auto colon = args.stream.rfind(':');
    if (colon == std::string::npos) {
      throw io::ValidationError("stream: expected host:port");
    }
    stream = std::make_unique<OdometryStream>(args.stream.substr(0, colon),
                                              args.stream.substr(colon + 1));
    replay.on_output = [&stream](const OdometryOutput& o) { stream->send(o); };
  }

  std::cout << "effective settings:\n" << settings.echo();
  std::cout << "dataset: " << manifest.lidars.size() << " lidar stream(s), "
            << manifest.odometry.size() << " odometry/imu stream(s)\n";
  for (const io::OdomStreamDecl& o : manifest.odometry) {
    std::cout << "  source " << o.source.id << " kind "
              << (o.source.kind == SourceKind::kRotationOnly ? "rotation_only"
                                                             : "full")
              << " priority " << o.source.priority << '\n';
  }

  const ReplayResult result =
      run_replay(events, settings.pipeline, settings.fusion, manifest, replay);

  fs::create_directories(args.out);
  const fs::path out(args.out);

  std::vector<StampedPose> trajectory;
  trajectory.reserve(result.outputs.size());
  for (const OdometryOutput& o : result.outputs) {
    trajectory.push_back({o.stamp, o.pose});
  }
  io::write_pose_log((out / "trajectory.txt").string(), trajectory);
  io::write_cloud_log((out / "map.txt").string(), {result.map_cloud},
                      io::CloudFormat::kAscii);
  write_scan_log((out / "scan_log.txt").string(), result.outputs);

  const TimingReport timing = timing_report(
      result.scan_durations, settings.pipeline.scan_period,
      result.scans_dropped_busy, result.stream_span);
  {
    std::ofstream tf(out / "timing.txt");
    tf << "count " << timing.count << "\nmean " << timing.mean << "\nmedian "
       << timing.median << "\nmax " << timing.max << "\nrealtime_fraction "
       << timing.realtime_fraction << "\ndrops_per_second "
       << timing.drops_per_second << '\n';
    for (std::size_t i = 0; i < timing.histogram.size(); ++i) {
      tf << "bin " << static_cast<double>(i) * timing.bin_width << ' '
         << timing.histogram[i] << '\n';
    }
  }
  {
    std::ofstream sf(out / "summary.txt");
    sf << "scans_seen " << result.scans_seen << '\n'
       << "scans_processed " << result.scans_processed << '\n'
       << "scans_degraded " << result.scans_degraded << '\n'
       << "scans_dropped_busy " << result.scans_dropped_busy << '\n'
       << "emissions " << result.outputs.size() << '\n';
    for (const auto& [source, count] : result.prior_histogram) {
      sf << "prior_source " << source << ' ' << count << '\n';
    }
    sf << "map_points " << result.map_cloud.size() << '\n';
    sf << settings.echo();
  }

  std::cout << "processed " << result.scans_processed << '/' << result.scans_seen
            << " scans (" << result.scans_degraded << " degraded, "
            << result.scans_dropped_busy << " dropped), "
            << result.outputs.size() << " emissions, map "
            << result.map_cloud.size() << " points\n";
  std::cout << "wrote " << (out / "trajectory.txt").string() << '\n';
  return 0;
}

int eval_command(const EvalArgs& args) {
  const Trajectory est = Trajectory::from_poses(io::read_pose_log(args.est));
  const Trajectory gt = Trajectory::from_poses(io::read_pose_log(args.gt));
  const ApeAlignment alignment =
      args.alignment == "none" ? ApeAlignment::kNone : ApeAlignment::kSe3;
  const ApeReport report = ape(est, gt, args.assoc_tol, alignment);

  std::ostringstream human;
  human << std::fixed << std::setprecision(6);
  human << "APE [m]: max " << report.max_error << "  mean " << report.mean_error
        << "  std " << report.std_error << "  rmse " << report.rmse
        << "  (n = " << report.matched << ")\n";

  std::optional<MapErrorResult> map_result;
  if (!args.map_est.empty() || !args.map_gt.empty()) {
    if (args.map_est.empty() || args.map_gt.empty()) {
      throw io::ValidationError("map error needs both --map-est and --map-gt");
    }
    map_result = map_error(read_single_cloud(args.map_est),
                           read_single_cloud(args.map_gt), 4);
    human << "ME rmse [m]: " << map_result->rmse
          << (map_result->icp_converged ? "" : "  (icp did not converge)") << '\n';
  }

  std::cout << human.str();

  if (!args.out.empty()) {
    fs::create_directories(args.out);
    const fs::path out(args.out);
    {
      std::ofstream rf(out / "report.txt");
      rf << human.str();
    }
    {
      std::ofstream kf(out / "results.txt");
      kf << std::setprecision(17);
      kf << "ape_max " << report.max_error << '\n'
         << "ape_mean " << report.mean_error << '\n'
         << "ape_std " << report.std_error << '\n'
         << "ape_rmse " << report.rmse << '\n'
         << "ape_pairs " << report.matched << '\n';
      if (map_result) {
        kf << "map_rmse " << map_result->rmse << '\n'
           << "map_icp_converged " << map_result->icp_converged << '\n';
      }
    }
    {
      // Error over time, gnuplot friendly: stamp error
      std::ofstream cf(out / "ape_curve.dat");
      cf << std::setprecision(17);
      for (const auto& [stamp, error] : report.per_pose) {
        cf << stamp << ' ' << error << '\n';
      }
    }
  }
  return 0;
}

int synth_command(const SynthArgs& args) {
  io::SynthSpec spec = io::SynthSpec::load(args.spec);
  if (args.seed >= 0) spec.seed = static_cast<std::uint64_t>(args.seed);
  const std::string manifest = io::generate_synthetic(spec, args.out);
  std::cout << "wrote " << manifest << '\n';
  return 0;
}

int inspect_command(const std::string& dataset) {
  const io::DatasetManifest manifest = io::DatasetManifest::load(dataset);
  const std::vector<io::Event> events = io::load_events(manifest);
  std::cout << io::describe(manifest, events);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-sensor lidar odometry: replay, evaluation, synthesis"};
  app.require_subcommand(1);

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "replay a dataset through the pipeline");
  run->add_option("--config", run_args.config, "pipeline config (JSON)")->required();
  run->add_option("--dataset", run_args.dataset, "dataset manifest")->required();
  run->add_option("--scenario", run_args.scenario, "failure-injection script");
  run->add_option("--mode", run_args.mode, "deterministic|paced");
  run->add_option("--out", run_args.out, "output directory")->required();
  run->add_option("--stream", run_args.stream,
                  "stream odometry records to host:port while replaying");
  run->add_option("--seed", run_args.seed, "override the config seed");

  EvalArgs eval_args;
  CLI::App* ev = app.add_subcommand("eval", "trajectory and map accuracy reports");
  ev->add_option("--est", eval_args.est, "estimated trajectory")->required();
  ev->add_option("--gt", eval_args.gt, "ground-truth trajectory")->required();
  ev->add_option("--map-est", eval_args.map_est, "estimated map cloud");
  ev->add_option("--map-gt", eval_args.map_gt, "ground-truth map cloud");
  ev->add_option("--out", eval_args.out, "report directory");
  ev->add_option("--assoc-tol", eval_args.assoc_tol, "stamp association tolerance");
  ev->add_option("--alignment", eval_args.alignment, "se3|none");

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--spec", synth_args.spec, "scene/trajectory spec (JSON)")
      ->required();
  synth->add_option("--out", synth_args.out, "output directory")->required();
  synth->add_option("--seed", synth_args.seed, "override the spec seed");

  std::string inspect_dataset;
  CLI::App* inspect = app.add_subcommand("inspect", "print a dataset summary");
  inspect->add_option("--dataset", inspect_dataset, "dataset manifest")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(run_args);
    if (ev->parsed()) return eval_command(eval_args);
    if (synth->parsed()) return synth_command(synth_args);
    if (inspect->parsed()) return inspect_command(inspect_dataset);
  } catch (const lodom::io::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
