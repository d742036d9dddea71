#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace volatix {

/// Worker count used by library calls; results never depend on it.
unsigned thread_count() noexcept;
void set_thread_count(unsigned n) noexcept;

/// Runs fn(0..n_tasks-1) over up to thread_count() workers. Tasks are claimed
/// dynamically, so fn must write only to task-owned state.
void parallel_for(std::size_t n_tasks, const std::function<void(std::size_t)>& fn);

/// Fixed-topology pairwise reduction: the combination tree depends only on
/// parts.size(), which keeps floating-point sums independent of scheduling.
template <class T, class Combine>
T tree_reduce(std::vector<T> parts, Combine combine) {
  if (parts.empty()) return T{};
  std::size_t n = parts.size();
  while (n > 1) {
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i + half < n; ++i) combine(parts[i], parts[i + half]);
    n = half;
  }
  return std::move(parts.front());
}

/// Fixed chunk size for event loops; chunk boundaries never depend on threads.
inline constexpr std::size_t kEventChunk = 128;

}  // namespace volatix
