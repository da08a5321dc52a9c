#include "sprinter/alloc_tracker.hpp"

#include <malloc.h>

#include <atomic>
#include <cstdlib>
#include <new>

namespace sprinter::alloc {

namespace {

std::atomic<std::size_t> g_current{0};
std::atomic<std::size_t> g_peak{0};
std::atomic<std::size_t> g_largest{0};
std::atomic<std::size_t> g_count{0};

void raise(std::atomic<std::size_t>& slot, std::size_t value) noexcept {
  std::size_t seen = slot.load(std::memory_order_relaxed);
  while (value > seen && !slot.compare_exchange_weak(seen, value, std::memory_order_relaxed)) {
  }
}

void* record(void* ptr) noexcept {
  if (ptr == nullptr) return nullptr;
  const std::size_t size = malloc_usable_size(ptr);
  const std::size_t now = g_current.fetch_add(size, std::memory_order_relaxed) + size;
  raise(g_peak, now);
  raise(g_largest, size);
  g_count.fetch_add(1, std::memory_order_relaxed);
  return ptr;
}

void release(void* ptr) noexcept {
  if (ptr == nullptr) return;
  g_current.fetch_sub(malloc_usable_size(ptr), std::memory_order_relaxed);
  std::free(ptr);
}

void* allocate(std::size_t size, std::size_t align) {
  if (size == 0) size = 1;
  void* ptr = nullptr;
  if (align <= alignof(std::max_align_t)) {
    ptr = std::malloc(size);
  } else {
    ptr = std::aligned_alloc(align, (size + align - 1) / align * align);
  }
  if (ptr == nullptr) throw std::bad_alloc();
  return record(ptr);
}

}  // namespace

Snapshot snapshot() noexcept {
  return {g_current.load(std::memory_order_relaxed), g_peak.load(std::memory_order_relaxed),
          g_largest.load(std::memory_order_relaxed), g_count.load(std::memory_order_relaxed)};
}

void reset() noexcept {
  g_peak.store(g_current.load(std::memory_order_relaxed), std::memory_order_relaxed);
  g_largest.store(0, std::memory_order_relaxed);
  g_count.store(0, std::memory_order_relaxed);
}

}  // namespace sprinter::alloc

using sprinter::alloc::allocate;
using sprinter::alloc::release;

void* operator new(std::size_t size) { return allocate(size, 0); }
void* operator new[](std::size_t size) { return allocate(size, 0); }
void* operator new(std::size_t size, std::align_val_t align) { return allocate(size, static_cast<std::size_t>(align)); }
void* operator new[](std::size_t size, std::align_val_t align) {
  return allocate(size, static_cast<std::size_t>(align));
}
void* operator new(std::size_t size, const std::nothrow_t&) noexcept {
  try {
    return allocate(size, 0);
  } catch (...) {
    return nullptr;
  }
}
void* operator new[](std::size_t size, const std::nothrow_t&) noexcept {
  try {
    return allocate(size, 0);
  } catch (...) {
    return nullptr;
  }
}

void operator delete(void* ptr) noexcept { release(ptr); }
void operator delete[](void* ptr) noexcept { release(ptr); }
void operator delete(void* ptr, std::size_t) noexcept { release(ptr); }
void operator delete[](void* ptr, std::size_t) noexcept { release(ptr); }
void operator delete(void* ptr, std::align_val_t) noexcept { release(ptr); }
void operator delete[](void* ptr, std::align_val_t) noexcept { release(ptr); }
void operator delete(void* ptr, std::size_t, std::align_val_t) noexcept { release(ptr); }
void operator delete[](void* ptr, std::size_t, std::align_val_t) noexcept { release(ptr); }
void operator delete(void* ptr, const std::nothrow_t&) noexcept { release(ptr); }
void operator delete[](void* ptr, const std::nothrow_t&) noexcept { release(ptr); }
