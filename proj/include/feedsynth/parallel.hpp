/*
 Copyright 2026 The feedsynth Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef FEEDSYNTH_PARALLEL_HPP_
#define FEEDSYNTH_PARALLEL_HPP_

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace feedsynth
{

/// Resolves a requested worker count; 0 means "all hardware threads".
inline int resolve_workers(int requested)
{
  if (requested > 0)
    return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/**
 * Runs body(i) for i in [0, count) on a static contiguous partition.
 *
 * Each index is processed by exactly one worker and bodies write only to
 * their own outputs, so results do not depend on the worker count. The first
 * exception thrown by any body is rethrown on the calling thread.
 */
template <typename Body>
void parallel_for(std::size_t count, int workers, Body &&body)
{
  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(resolve_workers(workers)), count);
  if (n_workers <= 1) {
    for (std::size_t i = 0; i < count; ++i)
      body(i);
    return;
  }

  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(n_workers);
  const std::size_t chunk = (count + n_workers - 1) / n_workers;
  for (std::size_t w = 0; w < n_workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(count, begin + chunk);
    if (begin >= end)
      break;
    threads.emplace_back([&, begin, end]() {
      try {
        for (std::size_t i = begin; i < end; ++i)
          body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error)
          first_error = std::current_exception();
      }
    });
  }
  for (auto &t : threads)
    t.join();
  if (first_error)
    std::rethrow_exception(first_error);
}

} // namespace feedsynth

#endif // FEEDSYNTH_PARALLEL_HPP_
