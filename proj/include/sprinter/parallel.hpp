#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace sprinter {

/// 0 resolves to SPRINTER_THREADS when set, else the hardware concurrency.
std::size_t resolve_threads(std::size_t requested) noexcept;

/// Runs fn(task) for task in [0, count) on up to `threads` workers. Task t is
/// handled by worker t % workers, so the assignment is fixed for a given
/// worker count. The first exception thrown by any task is rethrown.
void parallel_for(std::size_t count, std::size_t threads,
                  const std::function<void(std::size_t)>& fn);

/// Like parallel_for, but fn(worker, workers) is called once per worker.
void parallel_workers(std::size_t workers, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace sprinter
