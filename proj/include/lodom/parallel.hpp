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

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lodom {

/// Splits [0, n) into fixed-size blocks and runs fn(block_index, begin, end)
/// on each, fanning out over `workers` threads. The block layout depends only
/// on n and block_size, never on the worker count, so per-block outputs (and
/// any reduction that combines blocks in index order) are identical for any
/// number of workers.
template <typename Fn>
void for_each_block(std::size_t n, int workers, std::size_t block_size, Fn&& fn) {
  if (n == 0) return;
  if (block_size == 0) block_size = 1;
  const std::size_t num_blocks = (n + block_size - 1) / block_size;

  auto run_block = [&](std::size_t b) {
    const std::size_t begin = b * block_size;
    const std::size_t end = std::min(n, begin + block_size);
    fn(b, begin, end);
  };

  if (workers <= 1 || num_blocks <= 1) {
    for (std::size_t b = 0; b < num_blocks; ++b) run_block(b);
    return;
  }

  const std::size_t num_threads =
      std::min<std::size_t>(static_cast<std::size_t>(workers), num_blocks);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker_loop = [&] {
    while (true) {
      const std::size_t b = next.fetch_add(1, std::memory_order_relaxed);
      if (b >= num_blocks || failed.load(std::memory_order_relaxed)) return;
      try {
        run_block(b);
      } catch (...) {
        failed.store(true, std::memory_order_relaxed);
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(num_threads - 1);
  for (std::size_t i = 1; i < num_threads; ++i) threads.emplace_back(worker_loop);
  worker_loop();
  for (std::thread& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

/// Number of blocks for_each_block will produce; handy for sizing per-block
/// accumulator arrays.
inline std::size_t block_count(std::size_t n, std::size_t block_size) {
  if (n == 0) return 0;
  if (block_size == 0) block_size = 1;
  return (n + block_size - 1) / block_size;
}

}  // namespace lodom
