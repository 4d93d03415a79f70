#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace newsgen {

/// Calls fn(i) for i in [0, count) on up to `threads` workers (strided split).
/// Results must be written by index; the first exception thrown is rethrown.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  threads = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(threads, count)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex mu;
  auto work = [&](unsigned t) {
    try {
      for (std::size_t i = t; i < count; i += threads) fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!error) error = std::current_exception();
    }
  };
  std::vector<std::thread> workers;
  for (unsigned t = 0; t < threads; ++t) workers.emplace_back(work, t);
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace newsgen
