#pragma once

#include <cstddef>

// Heap accounting through replacement global operator new/delete. Linking
// the sprinter_alloc library into an executable installs it; the counters
// then cover every C++ allocation in the process.

namespace sprinter::alloc {

struct Snapshot {
  std::size_t current = 0;      // bytes live now
  std::size_t peak = 0;         // high-water mark since the last reset
  std::size_t largest = 0;      // largest single allocation since the last reset
  std::size_t allocations = 0;  // count since the last reset
};

Snapshot snapshot() noexcept;

/// Starts a new measurement window: peak = current, largest = allocations = 0.
void reset() noexcept;

/// Peak bytes above the level at the start of the window.
inline std::size_t peak_above(const Snapshot& start, const Snapshot& end) noexcept {
  return end.peak > start.current ? end.peak - start.current : 0;
}

}  // namespace sprinter::alloc
