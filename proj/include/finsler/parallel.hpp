#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <type_traits>
#include <vector>

namespace finsler {

// Evaluates fn(0..count-1) on up to `workers` threads. Results keep index
// order, and the exception of the lowest failing index is rethrown, so the
// outcome does not depend on scheduling.
template <class Fn>
auto parallel_map(std::size_t count, int workers, Fn fn) {
  using R = std::decay_t<decltype(fn(std::size_t{0}))>;
  std::vector<R> out(count);
  std::vector<std::exception_ptr> errors(count);
  auto run = [&](std::atomic<std::size_t>& next) {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::atomic<std::size_t> next{0};
  const std::size_t w = workers < 1 ? 1 : static_cast<std::size_t>(workers);
  if (w == 1 || count < 2) {
    run(next);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < std::min(w, count); ++k) pool.emplace_back(run, std::ref(next));
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace finsler
