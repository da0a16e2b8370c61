// Copyright 2026 The Rivet Authors
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

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <span>

namespace rivet {

enum class NotifyMode : uint8_t {
  kOnTransmit,       // decremented once the local transport op is complete
  kOnRemoteConsume,  // decremented once the destination ran the function
};

// Where a destination writes cumulative consume counts when the notification
// travels back by one-sided write instead of a send-based call. One 8-byte
// slot per destination thread, indexed by flat thread id.
struct WriteBackSlots {
  uint32_t machine = 0;
  uint32_t region = 0;
  uint64_t offset = 0;
  uint32_t count = 0;
  const uint64_t* local = nullptr;
};

// Counting semaphore attached to outgoing calls.
class Synchronizer {
 public:
  explicit Synchronizer(NotifyMode mode = NotifyMode::kOnTransmit)
      : mode_(mode) {}
  Synchronizer(const Synchronizer&) = delete;
  Synchronizer& operator=(const Synchronizer&) = delete;

  NotifyMode mode() const { return mode_; }

  void add(int64_t n = 1) {
    increments_.fetch_add(static_cast<uint64_t>(n), std::memory_order_relaxed);
    counter_.fetch_add(n, std::memory_order_acq_rel);
  }
  // Withdraws increments for calls that were rejected before sending.
  void cancel(int64_t n = 1) {
    increments_.fetch_sub(static_cast<uint64_t>(n), std::memory_order_relaxed);
    counter_.fetch_sub(n, std::memory_order_acq_rel);
  }
  void notify(int64_t n = 1) {
    decrements_.fetch_add(static_cast<uint64_t>(n), std::memory_order_relaxed);
    counter_.fetch_sub(n, std::memory_order_acq_rel);
  }
  void fail(int64_t n = 1) {
    failures_.fetch_add(static_cast<uint64_t>(n), std::memory_order_relaxed);
    notify(n);
  }

  void attach_write_back(const WriteBackSlots& slots) { write_back_ = slots; }
  const WriteBackSlots* write_back() const {
    return write_back_.local != nullptr ? &write_back_ : nullptr;
  }

  // Outstanding completions, including those reported through write-back
  // slots.
  int64_t pending() const;
  bool done() const { return pending() <= 0; }

  uint64_t increments() const { return increments_.load(); }
  uint64_t decrements() const;
  uint64_t failures() const { return failures_.load(); }

  // Spins with yield until pending() reaches zero, running `progress` between
  // checks. Returns false on timeout.
  bool wait(const std::function<void()>& progress = {},
            std::chrono::milliseconds timeout = std::chrono::hours(24)) const;

 private:
  uint64_t write_back_total() const;

  NotifyMode mode_;
  std::atomic<int64_t> counter_{0};
  std::atomic<uint64_t> increments_{0};
  std::atomic<uint64_t> decrements_{0};
  std::atomic<uint64_t> failures_{0};
  WriteBackSlots write_back_{};
};

}  // namespace rivet
