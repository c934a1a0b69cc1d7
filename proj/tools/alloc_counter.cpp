// Copyright 2026 The TGB Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "alloc_counter.hpp"

#include <atomic>
#include <cstdlib>
#include <new>

namespace tgb::alloc {
namespace {

std::atomic<std::size_t> g_live{0};
std::atomic<std::size_t> g_peak{0};
std::atomic<std::size_t> g_base{0};

// Each block carries its size in a max_align_t-sized header.
constexpr std::size_t kHeader = alignof(std::max_align_t);

void* counted_alloc(std::size_t n) {
  void* raw = std::malloc(n + kHeader);
  if (raw == nullptr) return nullptr;
  *static_cast<std::size_t*>(raw) = n;
  const std::size_t now = g_live.fetch_add(n, std::memory_order_relaxed) + n;
  std::size_t peak = g_peak.load(std::memory_order_relaxed);
  while (now > peak && !g_peak.compare_exchange_weak(peak, now, std::memory_order_relaxed)) {
  }
  return static_cast<char*>(raw) + kHeader;
}

void counted_free(void* p) noexcept {
  if (p == nullptr) return;
  void* raw = static_cast<char*>(p) - kHeader;
  g_live.fetch_sub(*static_cast<std::size_t*>(raw), std::memory_order_relaxed);
  std::free(raw);
}

}  // namespace

void reset_peak() {
  const std::size_t now = g_live.load();
  g_base.store(now);
  g_peak.store(now);
}

std::size_t peak_bytes_since_reset() {
  const std::size_t peak = g_peak.load(), base = g_base.load();
  return peak > base ? peak - base : 0;
}

std::size_t live_bytes() { return g_live.load(); }

}  // namespace tgb::alloc

void* operator new(std::size_t n) {
  if (void* p = tgb::alloc::counted_alloc(n)) return p;
  throw std::bad_alloc();
}
void* operator new[](std::size_t n) {
  if (void* p = tgb::alloc::counted_alloc(n)) return p;
  throw std::bad_alloc();
}
void* operator new(std::size_t n, const std::nothrow_t&) noexcept {
  return tgb::alloc::counted_alloc(n);
}
void* operator new[](std::size_t n, const std::nothrow_t&) noexcept {
  return tgb::alloc::counted_alloc(n);
}
void operator delete(void* p) noexcept { tgb::alloc::counted_free(p); }
void operator delete[](void* p) noexcept { tgb::alloc::counted_free(p); }
void operator delete(void* p, std::size_t) noexcept { tgb::alloc::counted_free(p); }
void operator delete[](void* p, std::size_t) noexcept { tgb::alloc::counted_free(p); }
void operator delete(void* p, const std::nothrow_t&) noexcept { tgb::alloc::counted_free(p); }
void operator delete[](void* p, const std::nothrow_t&) noexcept { tgb::alloc::counted_free(p); }
