// Copyright 2026 The elir Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ELIR_RANDOM_HPP
#define ELIR_RANDOM_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <initializer_list>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

/**
 * \file
 * \brief Seeded random streams and a deterministic parallel loop.
 *
 * Every stochastic routine takes an explicit master seed. Work is split into
 * numbered substreams whose seeds depend only on (master seed, stream path),
 * so the result of a computation never depends on how many threads ran it.
 */

namespace elir {

/// Engine used throughout. Distributions come from Boost.Random, whose
/// algorithms are fixed across platforms (unlike the std distributions).
using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31U);
}

/// Seed of the substream addressed by `path` under `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t state = splitmix64(master);
  for (const auto step : path) {
    state = splitmix64(state ^ splitmix64(step + 0x632be59bd9b4e019ULL));
  }
  return state;
}

inline Engine make_engine(std::uint64_t master, std::initializer_list<std::uint64_t> path = {}) {
  const std::uint64_t seed = derive_seed(master, path);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32U)};
  return Engine(seq);
}

/// Worker count for `requested` (0 = all hardware threads).
inline unsigned resolve_threads(unsigned requested) noexcept {
  if (requested != 0) {
    return requested;
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

/// Runs `task(i)` for i in [0, count). Tasks must write only to their own
/// slot; the first exception thrown by any task is rethrown after joining.
template <class Task>
void parallel_for(std::size_t count, unsigned threads, Task&& task) {
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(resolve_threads(threads), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      task(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          task(i);
        } catch (...) {
          const std::scoped_lock lock(error_mutex);
          if (!error) {
            error = std::current_exception();
          }
        }
      }
    });
  }
  for (auto& t : pool) {
    t.join();
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

}  // namespace elir

#endif  // ELIR_RANDOM_HPP
