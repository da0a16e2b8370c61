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
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <span>
#include <thread>
#include <utility>
#include <vector>

#include "rivet/verbs/types.hpp"

namespace rivet::verbs {

namespace detail {
class Link;
class InProcessLink;
class StreamPort;
}  // namespace detail

class Network;
class QueuePair;

// A registered byte range on one simulated machine. Storage is 64-byte
// aligned and zeroed at registration.
class MemoryRegion {
 public:
  MemoryRegion(RegionId id, MachineId machine, uint32_t zone, uint64_t length);
  ~MemoryRegion();
  MemoryRegion(const MemoryRegion&) = delete;
  MemoryRegion& operator=(const MemoryRegion&) = delete;

  RegionId id() const { return id_; }
  MachineId machine() const { return machine_; }
  uint32_t zone() const { return zone_; }
  uint64_t length() const { return length_; }
  uint64_t base() const { return reinterpret_cast<uint64_t>(data_); }
  std::byte* data() const { return data_; }

  bool contains(uint64_t offset, uint64_t length) const {
    return offset <= length_ && length <= length_ - offset;
  }

 private:
  RegionId id_;
  MachineId machine_;
  uint32_t zone_;
  uint64_t length_;
  std::byte* data_;
};

struct MachineConfig {
  uint32_t zones = 1;
  uint64_t registration_cap_bytes = 0;  // 0 = unlimited
  uint32_t max_regions = 1u << 16;
};

class Machine {
 public:
  Machine(MachineId id, const MachineConfig& config);
  ~Machine();

  MachineId id() const { return id_; }
  uint32_t zones() const { return config_.zones; }

  // Throws Error(kUnknownZone / kCapacity / kInvalidArgument).
  MemoryRegion& register_memory(uint32_t zone, uint64_t length);
  void deregister_memory(RegionId id);

  MemoryRegion* find(RegionId id) const;
  // Pointer to [offset, offset+length) of a live region, or nullptr.
  std::byte* translate(RegionId id, uint64_t offset, uint64_t length) const;

  uint64_t registration_count() const { return registrations_.load(); }
  uint64_t registered_bytes() const { return registered_bytes_.load(); }

 private:
  MachineId id_;
  MachineConfig config_;
  std::mutex mu_;
  std::unique_ptr<std::atomic<MemoryRegion*>[]> table_;
  std::vector<std::unique_ptr<MemoryRegion>> storage_;
  RegionId next_id_ = 0;
  std::atomic<uint64_t> registrations_{0};
  std::atomic<uint64_t> registered_bytes_{0};
};

// Completion queue. Entries are delivered exactly once across concurrent
// pollers, in completion order.
class CompletionQueue {
 public:
  explicit CompletionQueue(size_t depth = 1u << 20) : depth_(depth) {}

  size_t poll(std::span<CompletionEntry> out);
  std::vector<CompletionEntry> poll(size_t max_entries);
  size_t size() const;

 private:
  friend class QueuePair;
  friend class detail::StreamPort;
  struct Slot {
    CompletionEntry entry;
    QueuePair* qp = nullptr;
    uint64_t unsignaled_before = 0;  // only meaningful for send-side slots
    bool releases_unsignaled = false;
  };
  bool push(const Slot& slot);

  size_t depth_;
  mutable std::mutex mu_;
  std::deque<Slot> entries_;
};

class QueuePair {
 public:
  ~QueuePair();
  QueuePair(const QueuePair&) = delete;
  QueuePair& operator=(const QueuePair&) = delete;

  QpId id() const { return id_; }
  MachineId machine() const { return machine_->id(); }
  MachineId peer_machine() const { return peer_machine_; }
  const QpConfig& config() const { return config_; }

  // Linearizable across threads.
  PostStatus post(const WorkRequest& wr);
  PostStatus post_recv(const LocalSegment& local, uint64_t user_tag);

  CompletionQueue& send_cq() { return *send_cq_; }
  CompletionQueue& recv_cq() { return *recv_cq_; }

  uint64_t pending_unsignaled() const;
  uint64_t posted_recv_count() const;
  QpStats stats() const;

  struct RecvEntry {
    LocalSegment local;
    uint64_t user_tag = 0;
  };

 private:
  friend class Network;
  friend class CompletionQueue;
  friend class detail::InProcessLink;
  friend class detail::StreamPort;

  struct Op {
    WorkRequest wr;
    std::byte* local = nullptr;
    RecvEntry reserved;
    uint64_t unsignaled_before = 0;
  };

  QueuePair(Network& net, QpId id, Machine& machine, MachineId peer_machine,
            const QpConfig& config, std::shared_ptr<CompletionQueue> send_cq,
            std::shared_ptr<CompletionQueue> recv_cq);

  void execute(Op& op);
  void release_unsignaled(uint64_t up_to);
  bool take_recv(uint64_t length, RecvEntry* out);
  void deliver_send(const RecvEntry& recv, const std::byte* data, uint64_t len);
  void deliver_incoming_send(std::vector<std::byte> data);
  bool run_one_deferred();

  Network& net_;
  QpId id_;
  Machine* machine_;
  MachineId peer_machine_;
  QpConfig config_;
  std::shared_ptr<CompletionQueue> send_cq_;
  std::shared_ptr<CompletionQueue> recv_cq_;
  std::unique_ptr<detail::Link> link_;

  mutable std::mutex mu_;  // serializes posts
  uint64_t unsignaled_posted_ = 0;
  std::atomic<uint64_t> unsignaled_released_{0};
  std::deque<Op> deferred_;

  mutable std::mutex rq_mu_;
  std::deque<RecvEntry> rq_;
  std::deque<std::vector<std::byte>> unmatched_sends_;

  struct AtomicStats;
  std::unique_ptr<AtomicStats> stats_;
};

enum class Execution : uint8_t {
  kImmediate,  // work executes inside post()
  kDeferred,   // a progress thread executes work later, FIFO per QP
};

enum class Backend : uint8_t { kInProcess, kStream };

struct NetworkConfig {
  Execution execution = Execution::kImmediate;
  uint32_t deferred_max_delay_us = 20;
  uint64_t seed = 1;
  MachineConfig machine;
  size_t cq_depth = 1u << 20;
};

struct ConnectOptions {
  QpConfig qp;
  Backend backend = Backend::kInProcess;
  bool forbid_duplicate = false;
  // Optional shared receive completion queues for side a / side b.
  std::shared_ptr<CompletionQueue> recv_cq_a;
  std::shared_ptr<CompletionQueue> recv_cq_b;
};

// Test hook: split WRITEs of at least 16 bytes into two visibility steps.
struct SplitVisibility {
  double probability = 0.0;
  bool reverse = false;  // make the second half visible first
};

class Network {
 public:
  explicit Network(const NetworkConfig& config = {});
  ~Network();
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  MachineId add_machine(uint32_t zones = 1);
  Machine& machine(MachineId id);
  size_t machine_count() const;

  // Throws Error(kUnknownMachine / kDuplicate).
  std::pair<QueuePair*, QueuePair*> connect(MachineId a, MachineId b,
                                            const ConnectOptions& options = {});

  // Stream backend over an already connected byte stream (socket or pipe
  // pair). Performs the CONNECT / CONNECT_ACK exchange and returns the local
  // queue pair. The caller keeps ownership of nothing; the fd is closed with
  // the network.
  QueuePair* attach_stream(MachineId local, int fd, bool initiator,
                           const QpConfig& qp = {},
                           std::shared_ptr<CompletionQueue> recv_cq = nullptr);

  void set_split_visibility(const SplitVisibility& split);
  SplitVisibility split_visibility() const;

  const NetworkConfig& config() const { return config_; }
  QpStats totals() const;

  // Copies len bytes into remote-visible memory in ascending address order,
  // honouring the split-visibility hook.
  void device_write(std::byte* dst, const std::byte* src, uint64_t len,
                    QpStats* stats);

 private:
  friend class QueuePair;
  QueuePair* make_qp(Machine& machine, MachineId peer, const QpConfig& cfg,
                     std::shared_ptr<CompletionQueue> recv_cq);
  void notify_deferred();
  void progress_loop();
  bool roll_split();

  NetworkConfig config_;
  mutable std::mutex mu_;
  std::vector<std::unique_ptr<Machine>> machines_;
  std::vector<std::unique_ptr<QueuePair>> qps_;
  std::set<std::pair<MachineId, MachineId>> connected_;

  std::atomic<uint64_t> split_bits_{0};
  std::atomic<bool> split_reverse_{false};
  std::mutex rng_mu_;
  std::mt19937_64 rng_;

  std::mutex progress_mu_;
  std::condition_variable progress_cv_;
  std::atomic<bool> stop_{false};
  std::atomic<uint64_t> deferred_pending_{0};
  std::thread progress_;
};

// Ascending 8-byte-word copy with release stores: once the last word is
// visible to an acquire load, every earlier word is too.
void ordered_copy(std::byte* dst, const std::byte* src, uint64_t len);

}  // namespace rivet::verbs
