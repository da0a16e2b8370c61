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
#include <cstdint>
#include <functional>
#include <span>

#include "rivet/common/synchronizer.hpp"
#include "rivet/regmem/registered_memory.hpp"
#include "rivet/verbs/device.hpp"

namespace rivet::transmit {

struct Ticket {
  uint64_t op_number = 0;  // 0 when the op did not consume a number
  bool signaled = false;
  verbs::PostStatus status = verbs::PostStatus::kOk;
  uint64_t tag_flush = 0;  // flush number the memory was tagged with

  bool ok() const { return status == verbs::PostStatus::kOk; }
};

// Protocol steps at which tests may inject a pause.
enum class Step : uint8_t {
  kAfterIncrement,
  kAfterPost,
  kAfterTag,
  kInPoll,
};

// Shared-QP front end implementing automatic selective signaling. Every
// u_max-th operation (and every operation issued while the flush number
// lags) is signaled; completing one advances the flush number, which
// releases all memory tagged below it. The transmit path is lock-free.
class Transmitter {
 public:
  explicit Transmitter(verbs::QueuePair& qp);
  ~Transmitter();
  Transmitter(const Transmitter&) = delete;
  Transmitter& operator=(const Transmitter&) = delete;

  // `memory` is tagged after the post. Synchronizers in kOnTransmit mode are
  // notified once the op is known to be complete; a failed post leaves them
  // untouched.
  Ticket transmit(verbs::WorkRequest wr, const mem::RegisteredMemory& memory,
                  std::span<Synchronizer* const> syncs = {});
  Ticket transmit(verbs::WorkRequest wr, const mem::RegisteredMemory& memory,
                  Synchronizer* sync) {
    Synchronizer* one[1] = {sync};
    return transmit(wr, memory,
                    sync ? std::span<Synchronizer* const>(one, 1)
                         : std::span<Synchronizer* const>());
  }

  Ticket write(const mem::RegisteredMemory& src, const mem::RemoteLocator& dst,
               Synchronizer* sync = nullptr);
  Ticket read(const mem::RegisteredMemory& dst, const mem::RemoteLocator& src,
              Synchronizer* sync = nullptr);
  Ticket send(const mem::RegisteredMemory& src, Synchronizer* sync = nullptr);
  Ticket send(const mem::RegisteredMemory& src, std::span<Synchronizer* const> syncs);

  // Advances the flush number past everything transmitted before the call,
  // so all memory tagged so far becomes reusable and pending kOnTransmit
  // synchronizers fire. No-op on an idle transmitter.
  void flush();

  // Processes available completions; returns the number consumed.
  size_t poll();

  verbs::QueuePair& qp() { return qp_; }
  uint64_t u_max() const { return u_max_; }
  uint64_t op_count() const { return ops_.load(); }
  uint64_t flush_number() const { return flush_.load(); }
  const std::atomic<uint64_t>& flush_counter() const { return flush_; }
  uint64_t signaled_count() const { return signaled_.load(); }
  uint64_t flush_advances() const { return advances_.load(); }
  uint64_t completion_faults() const { return faults_.load(); }

  // Test hook, called at each protocol step. Must be set before use.
  void set_step_hook(std::function<void(Step)> hook) { hook_ = std::move(hook); }

 private:
  struct SignalRecord;
  struct Pending;

  void step(Step s) {
    if (hook_) hook_(s);
  }
  void raise_max_tag(uint64_t tag);
  void push_pending(Pending* node);
  void release_pending();
  bool flush_round(uint64_t observed);

  verbs::QueuePair& qp_;
  const uint64_t u_max_;

  alignas(64) std::atomic<uint64_t> ops_{0};       // k
  alignas(64) std::atomic<uint64_t> flush_{0};     // flush number k'
  alignas(64) std::atomic<uint64_t> granted_{0};   // unsignaled credits taken
  alignas(64) std::atomic<uint64_t> posted_{0};    // unsignaled ops posted
  alignas(64) std::atomic<uint64_t> returned_{0};  // unsignaled ops retired
  std::atomic<uint64_t> max_tag_{0};
  std::atomic<Pending*> pending_{nullptr};
  std::atomic<uint64_t> signaled_{0};
  std::atomic<uint64_t> advances_{0};
  std::atomic<uint64_t> faults_{0};
  std::function<void(Step)> hook_;
};

}  // namespace rivet::transmit
