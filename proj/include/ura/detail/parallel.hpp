#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ura {

template <class Fn>
void parallel_for(Index count, Index workers, Fn&& fn) {
  const Index threads = std::clamp<Index>(workers, 1, std::max<Index>(count, 1));
  if (threads == 1) {
    for (Index t = 0; t < count; ++t) fn(t);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (Index w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (Index t = next++; t < count; t = next++) {
          try {
            fn(t);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace ura
