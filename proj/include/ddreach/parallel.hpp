#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace ddreach {

/// Default worker count: $DDREACH_WORKERS if set, else hardware concurrency.
[[nodiscard]] inline std::size_t default_workers() {
  if (const char* env = std::getenv("DDREACH_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, n) on up to `workers` threads.
///
/// Indices are split into contiguous blocks. If any body throws, the
/// exception from the smallest failing index is rethrown after all threads
/// join, so the reported failure does not depend on the worker count.
template <class Body>
void parallel_for(std::size_t n, std::size_t workers, Body&& body) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }

  struct Failure {
    std::size_t index = static_cast<std::size_t>(-1);
    std::exception_ptr error;
  };
  std::vector<Failure> failures(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  const std::size_t block = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * block;
    const std::size_t end = std::min(n, begin + block);
    threads.emplace_back([&, w, begin, end] {
      for (std::size_t i = begin; i < end; ++i) {
        try {
          body(i);
        } catch (...) {
          failures[w] = {i, std::current_exception()};
          return;
        }
      }
    });
  }
  for (auto& t : threads) t.join();

  const Failure* first = nullptr;
  for (const auto& f : failures) {
    if (f.error && (first == nullptr || f.index < first->index)) first = &f;
  }
  if (first != nullptr) std::rethrow_exception(first->error);
}

}  // namespace ddreach
