#pragma once

// Replicate-parallel map. Workers pull replicate indices from a shared atomic
// counter and write results into caller-owned slots indexed by replicate, so
// the reduction afterwards sees the same values in the same order for every
// worker count.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "radwalk/errors.hpp"

namespace radwalk {

/// Worker count from RADWALK_WORKERS, else the hardware concurrency.
inline int default_workers() {
  if (const char* env = std::getenv("RADWALK_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Calls fn(i) for every i in [0, count). Errors are rethrown as a
/// ReplicateFailure for the lowest failing index.
template <class Fn>
void for_each_replicate(std::size_t count, int workers, Fn&& fn) {
  constexpr std::size_t kChunk = 64;
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::size_t failed_index = count;
  ErrorKind failed_kind = ErrorKind::Numerical;
  std::string failed_what;

  auto record = [&](std::size_t i, ErrorKind kind, const std::string& what) {
    std::lock_guard lock(error_mutex);
    if (i < failed_index) {
      failed_index = i;
      failed_kind = kind;
      failed_what = what;
    }
  };

  auto body = [&] {
    for (;;) {
      const std::size_t begin = next.fetch_add(kChunk);
      if (begin >= count) return;
      const std::size_t end = std::min(count, begin + kChunk);
      for (std::size_t i = begin; i < end; ++i) {
        try {
          fn(i);
        } catch (const Error& e) {
          record(i, e.kind(), e.what());
          return;
        } catch (const std::exception& e) {
          record(i, ErrorKind::Numerical, e.what());
          return;
        }
      }
    }
  };

  const int n_workers = std::max(1, std::min<int>(workers, static_cast<int>((count + kChunk - 1) / kChunk)));
  if (n_workers <= 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(body);
  }
  if (failed_index < count) throw ReplicateFailure(failed_kind, failed_index, failed_what);
}

}  // namespace radwalk
