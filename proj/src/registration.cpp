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

#include "lodom/registration.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

#include "lodom/parallel.hpp"

namespace lodom {

namespace {

constexpr std::size_t kBlockSize = 512;
constexpr int kMaxHalvings = 8;

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

struct NormalEquations {
  Mat6 H = Mat6::Zero();
  Vec6 b = Vec6::Zero();
  Scalar cost = 0.0;
};

// Accumulates H, b and the total cost over the pairs at the current
// transform. Per-block partials are combined in block order, so the result is
// identical for any worker count.
NormalEquations build_normal_equations(const EnrichedCloud& source,
                                       const EnrichedCloud& target,
                                       const std::vector<detail::Correspondence>& pairs,
                                       const Pose& transform, int workers) {
  const std::size_t blocks = block_count(pairs.size(), kBlockSize);
  std::vector<NormalEquations> partial(blocks);
  const Mat3 R = transform.rotation_matrix();
  const Vec3 t = transform.translation;

  for_each_block(pairs.size(), workers, kBlockSize,
                 [&](std::size_t block, std::size_t lo, std::size_t hi) {
                   NormalEquations acc;
                   for (std::size_t i = lo; i < hi; ++i) {
                     const detail::Correspondence& c = pairs[i];
                     const Vec3 a = R * source.cloud.positions[c.source] + t;
                     const Vec3 r = a - target.cloud.positions[c.target];
                     const Vec3 mr = c.mahalanobis * r;

                     Eigen::Matrix<Scalar, 3, 6> J;
                     J.leftCols<3>() = Mat3::Identity();
                     J.rightCols<3>() = -skew(a);

                     acc.H.noalias() += J.transpose() * c.mahalanobis * J;
                     acc.b.noalias() += J.transpose() * mr;
                     acc.cost += r.dot(mr);
                   }
                   partial[block] = acc;
                 });

  NormalEquations total;
  for (const NormalEquations& p : partial) {
    total.H += p.H;
    total.b += p.b;
    total.cost += p.cost;
  }
  return total;
}

Scalar total_cost(const EnrichedCloud& source, const EnrichedCloud& target,
                  const std::vector<detail::Correspondence>& pairs,
                  const Pose& transform, int workers) {
  const std::size_t blocks = block_count(pairs.size(), kBlockSize);
  std::vector<Scalar> partial(blocks, 0.0);
  const Mat3 R = transform.rotation_matrix();
  const Vec3 t = transform.translation;

  for_each_block(pairs.size(), workers, kBlockSize,
                 [&](std::size_t block, std::size_t lo, std::size_t hi) {
                   Scalar acc = 0.0;
                   for (std::size_t i = lo; i < hi; ++i) {
                     const detail::Correspondence& c = pairs[i];
                     const Vec3 r =
                         R * source.cloud.positions[c.source] + t -
                         target.cloud.positions[c.target];
                     acc += r.dot(c.mahalanobis * r);
                   }
                   partial[block] = acc;
                 });

  Scalar total = 0.0;
  for (Scalar p : partial) total += p;
  return total;
}

}  // namespace

void GicpConfig::validate() const {
  if (max_iterations < 1) {
    throw std::invalid_argument("gicp: max_iterations must be >= 1");
  }
  if (neighbors_k < 3) {
    throw std::invalid_argument("gicp: neighbors_k must be >= 3");
  }
  if (workers < 1) {
    throw std::invalid_argument("gicp: workers must be >= 1");
  }
  if (!(correspondence_max_dist > 0.0)) {
    throw std::invalid_argument("gicp: correspondence_max_dist must be positive");
  }
  if (!(translation_epsilon > 0.0) || !(rotation_epsilon > 0.0)) {
    throw std::invalid_argument("gicp: epsilons must be positive");
  }
  if (!(covariance_floor > 0.0) || covariance_floor > 1.0) {
    throw std::invalid_argument("gicp: covariance_floor must be in (0, 1]");
  }
}

EnrichedCloud enrich(const PointCloud& c, const GicpConfig& cfg) {
  cfg.validate();
  const std::size_t n = c.size();
  if (n < static_cast<std::size_t>(cfg.neighbors_k)) {
    throw std::invalid_argument(
        "enrich: cloud has " + std::to_string(n) + " points; needs at least " +
        std::to_string(cfg.neighbors_k));
  }

  EnrichedCloud out;
  out.cloud = c;
  out.neighbors_k = cfg.neighbors_k;
  out.index = std::make_shared<KdTree>(c.positions);
  out.covariances.resize(n);

  const Scalar floor = cfg.covariance_floor;
  for_each_block(
      n, cfg.workers, 256,
      [&](std::size_t, std::size_t lo, std::size_t hi) {
        std::vector<KdTree::Neighbor> nn;
        for (std::size_t i = lo; i < hi; ++i) {
          out.index->knn(c.positions[i], cfg.neighbors_k, nn);
          Vec3 mean = Vec3::Zero();
          for (const KdTree::Neighbor& m : nn) mean += c.positions[m.index];
          mean /= static_cast<Scalar>(nn.size());

          Mat3 cov = Mat3::Zero();
          for (const KdTree::Neighbor& m : nn) {
            const Vec3 d = c.positions[m.index] - mean;
            cov.noalias() += d * d.transpose();
          }
          cov /= static_cast<Scalar>(nn.size());

          // Plane-to-plane model: keep the eigenvectors, replace the
          // eigenvalues by (floor, 1, 1) in ascending order.
          Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
          const Mat3& U = es.eigenvectors();
          out.covariances[i] = floor * U.col(0) * U.col(0).transpose() +
                               U.col(1) * U.col(1).transpose() +
                               U.col(2) * U.col(2).transpose();
        }
      });
  return out;
}

EnrichedCloud enriched_from_cache(PointCloud c, std::vector<Mat3> covariances,
                                  int neighbors_k) {
  if (c.size() != covariances.size()) {
    throw std::invalid_argument("enriched_from_cache: covariance count mismatch");
  }
  EnrichedCloud out;
  out.cloud = std::move(c);
  out.covariances = std::move(covariances);
  out.neighbors_k = neighbors_k;
  if (!out.cloud.empty()) {
    out.index = std::make_shared<KdTree>(out.cloud.positions);
  }
  return out;
}

namespace detail {

Quat exp_so3(const Vec3& omega) {
  const Scalar angle = omega.norm();
  if (angle < 1e-12) {
    return Quat(1.0, 0.5 * omega.x(), 0.5 * omega.y(), 0.5 * omega.z())
        .normalized();
  }
  return Quat(Eigen::AngleAxis<Scalar>(angle, omega / angle));
}

std::vector<Correspondence> find_correspondences(const EnrichedCloud& source,
                                                 const EnrichedCloud& target,
                                                 const Pose& transform,
                                                 const GicpConfig& cfg) {
  const std::size_t n = source.size();
  const std::size_t blocks = block_count(n, kBlockSize);
  std::vector<std::vector<Correspondence>> partial(blocks);
  const Mat3 R = transform.rotation_matrix();
  const Vec3 t = transform.translation;
  const Scalar max_sq =
      cfg.correspondence_max_dist * cfg.correspondence_max_dist;

  for_each_block(n, cfg.workers, kBlockSize,
                 [&](std::size_t block, std::size_t lo, std::size_t hi) {
                   std::vector<Correspondence>& local = partial[block];
                   local.reserve(hi - lo);
                   for (std::size_t i = lo; i < hi; ++i) {
                     const Vec3 q = R * source.cloud.positions[i] + t;
                     const KdTree::Neighbor nn = target.index->nearest(q);
                     if (nn.sq_dist > max_sq) continue;
                     Correspondence c;
                     c.source = static_cast<std::uint32_t>(i);
                     c.target = static_cast<std::uint32_t>(nn.index);
                     const Mat3 combined =
                         target.covariances[nn.index] +
                         R * source.covariances[i] * R.transpose();
                     c.mahalanobis = combined.inverse();
                     local.push_back(c);
                   }
                 });

  std::vector<Correspondence> pairs;
  std::size_t total = 0;
  for (const auto& p : partial) total += p.size();
  pairs.reserve(total);
  for (const auto& p : partial) pairs.insert(pairs.end(), p.begin(), p.end());
  return pairs;
}

Scalar cost_at(const EnrichedCloud& source, const EnrichedCloud& target,
               const std::vector<Correspondence>& pairs, const Pose& transform,
               const Vec6& delta, int workers) {
  if (pairs.empty()) return 0.0;
  const Pose shifted =
      Pose(exp_so3(delta.tail<3>()), delta.head<3>()) * transform;
  return total_cost(source, target, pairs, shifted, workers) /
         static_cast<Scalar>(pairs.size());
}

void cost_and_gradient(const EnrichedCloud& source, const EnrichedCloud& target,
                       const std::vector<Correspondence>& pairs,
                       const Pose& transform, int workers, Scalar* cost,
                       Vec6* gradient) {
  const NormalEquations eq =
      build_normal_equations(source, target, pairs, transform, workers);
  const auto n = static_cast<Scalar>(pairs.empty() ? 1 : pairs.size());
  if (cost != nullptr) *cost = eq.cost / n;
  if (gradient != nullptr) *gradient = 2.0 * eq.b / n;
}

}  // namespace detail

RegistrationResult gicp_align(const EnrichedCloud& source,
                              const EnrichedCloud& target, const Pose& guess,
                              const GicpConfig& cfg) {
  cfg.validate();
  if (source.neighbors_k != 0 && target.neighbors_k != 0 &&
      source.neighbors_k != target.neighbors_k) {
    throw std::invalid_argument(
        "gicp_align: clouds enriched with different neighbors_k");
  }

  RegistrationResult result;
  result.transform = guess;
  if (source.empty() || target.empty() || !target.index) {
    return result;  // nothing to match; echo the guess
  }

  Pose T = guess;
  for (int iter = 1; iter <= cfg.max_iterations; ++iter) {
    const std::vector<detail::Correspondence> pairs =
        detail::find_correspondences(source, target, T, cfg);
    if (pairs.empty()) {
      // First iteration: echo the guess (the gap scenario must not crash).
      // Later iterations: keep the best transform found so far.
      break;
    }
    const auto n_pairs = static_cast<Scalar>(pairs.size());

    const NormalEquations eq =
        build_normal_equations(source, target, pairs, T, cfg.workers);
    const Scalar pre_step = eq.cost / n_pairs;

    Vec6 step = eq.H.ldlt().solve(-eq.b);
    if (!step.allFinite()) {
      result.iterations_used = iter;
      break;
    }

    const bool vanishing = step.head<3>().norm() < cfg.translation_epsilon &&
                           step.tail<3>().norm() < cfg.rotation_epsilon;

    // Damping: halve the step until the residual stops increasing. A step
    // already below the convergence epsilons is a fixed point; comparing
    // costs there would only measure rounding noise.
    bool accepted = vanishing;
    Scalar post_step = pre_step;
    Vec6 taken = step;
    if (!vanishing) {
      for (int h = 0; h <= kMaxHalvings; ++h) {
        const Scalar cost =
            detail::cost_at(source, target, pairs, T, taken, cfg.workers);
        if (cost <= pre_step) {
          accepted = true;
          post_step = cost;
          break;
        }
        taken *= 0.5;
      }
    }
    result.iterations_used = iter;
    if (!accepted) break;

    T = Pose(detail::exp_so3(taken.tail<3>()), taken.head<3>()) * T;
    result.transform = T;
    result.final_residual = post_step;
    result.correspondence_fraction = n_pairs / static_cast<Scalar>(source.size());
    result.trace.push_back({pre_step, post_step, pairs.size()});

    if (vanishing || (taken.head<3>().norm() < cfg.translation_epsilon &&
                      taken.tail<3>().norm() < cfg.rotation_epsilon)) {
      result.converged = true;
      break;
    }
  }
  return result;
}

RegistrationResult scan_to_scan(const EnrichedCloud& curr,
                                const EnrichedCloud& prev,
                                const PriorResult& prior, const GicpConfig& cfg) {
  return gicp_align(curr, prev, prior.transform, cfg);
}

RegistrationResult scan_to_submap(const EnrichedCloud& curr,
                                  const EnrichedCloud& submap_world,
                                  const RegistrationResult& seed,
                                  const Pose& prev_pose, const GicpConfig& cfg) {
  if (submap_world.empty()) {
    RegistrationResult result = seed;
    result.skipped = true;
    return result;
  }
  const Pose guess_world = prev_pose * seed.transform;
  RegistrationResult result = gicp_align(curr, submap_world, guess_world, cfg);
  result.transform = relative(prev_pose, result.transform);
  return result;
}

}  // namespace lodom
