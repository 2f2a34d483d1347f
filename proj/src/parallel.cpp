/* Copyright 2026 The tvmerge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "tvmerge/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace tvmerge {

std::size_t WorkerCount() {
  if (const char* env = std::getenv("TVM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::size_t ChunkCount(std::size_t n, std::size_t min_chunk) {
  if (n == 0) return 0;
  min_chunk = std::max<std::size_t>(min_chunk, 1);
  // Fixed upper bound keeps chunking independent of the machine.
  constexpr std::size_t kMaxChunks = 64;
  return std::clamp<std::size_t>(n / min_chunk, 1, kMaxChunks);
}

void ParallelChunks(std::size_t n, std::size_t min_chunk,
                    const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  const std::size_t chunks = ChunkCount(n, min_chunk);
  if (chunks == 0) return;
  auto bounds = [&](std::size_t c) { return c * n / chunks; };

  const std::size_t workers = std::min(WorkerCount(), chunks);
  if (workers <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) fn(c, bounds(c), bounds(c + 1));
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    for (std::size_t c = next++; c < chunks; c = next++) {
      try {
        fn(c, bounds(c), bounds(c + 1));
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace tvmerge
