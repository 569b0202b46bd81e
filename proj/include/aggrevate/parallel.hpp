#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace aggrevate {

/// out[j] = fn(j) for j in [0, n), split into contiguous chunks over
/// `workers` threads. Each slot is written by exactly one thread, so the
/// result is independent of the worker count.
template <class T, class Fn>
std::vector<T> parallel_generate(std::size_t n, int workers, Fn fn) {
  std::vector<T> out(n);
  const auto w = static_cast<std::size_t>(std::max(1, workers));
  if (w == 1 || n < 2) {
    for (std::size_t j = 0; j < n; ++j) out[j] = fn(j);
    return out;
  }
  const std::size_t chunk = (n + w - 1) / w;
  std::vector<std::exception_ptr> errors(w);
  {
    std::vector<std::jthread> threads;
    for (std::size_t k = 0; k < w; ++k) {
      const std::size_t begin = k * chunk;
      const std::size_t end = std::min(n, begin + chunk);
      if (begin >= end) break;
      threads.emplace_back([&, k, begin, end] {
        try {
          for (std::size_t j = begin; j < end; ++j) out[j] = fn(j);
        } catch (...) {
          errors[k] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace aggrevate
