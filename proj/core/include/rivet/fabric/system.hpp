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
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <thread>
#include <tuple>
#include <vector>

#include "rivet/common/mpsc_queue.hpp"
#include "rivet/common/synchronizer.hpp"
#include "rivet/fabric/config.hpp"
#include "rivet/fabric/ids.hpp"
#include "rivet/fabric/registry.hpp"
#include "rivet/fabric/serialized_call.hpp"
#include "rivet/regmem/circular_allocator.hpp"
#include "rivet/regmem/general_allocator.hpp"
#include "rivet/regmem/zone_arena.hpp"
#include "rivet/transmit/transmitter.hpp"
#include "rivet/verbs/device.hpp"

namespace rivet::messenger {
class Endpoint;
}
namespace rivet::aggregator {
class Aggregator;
}

namespace rivet::fabric {

class CallPath;
class Invoker;
class Process;
class System;

enum class Role : uint8_t { kWorker, kService, kHelper };

// A record delivered over the send path, copied out of the receive buffer.
struct InboundCall {
  ThreadId source;
  std::vector<std::byte> record;
};

using Job = std::function<void(ThreadContext&)>;

// Per-thread state: allocators, channel endpoint, aggregator and invokers.
// Worker contexts are handed out by System::init_thread; service and helper
// threads get their own for scratch memory.
class ThreadContext {
 public:
  ThreadContext(System& system, Process& process, Role role, uint32_t flat);
  ~ThreadContext();
  ThreadContext(const ThreadContext&) = delete;
  ThreadContext& operator=(const ThreadContext&) = delete;

  System& system() { return system_; }
  Process& process() { return process_; }
  Role role() const { return role_; }
  const ThreadId& id() const { return id_; }
  uint32_t flat() const { return id_.flat; }
  bool initialized() const { return initialized_.load(); }

  mem::CircularAllocator& ring();
  mem::LinearCircularAllocator& segments();
  mem::GeneralAllocator& general();
  // Segment for an outgoing record. When the ring is exhausted the process
  // transmitters are flushed and the allocation retried.
  mem::RegisteredMemory scratch(uint64_t length);

  transmit::Transmitter& transmitter_to(uint32_t dest_flat);

  messenger::Endpoint& messenger();
  aggregator::Aggregator& aggregator();
  Invoker& via_send();
  Invoker& via_write();
  Invoker& via_aggregator();
  Invoker& invoker(PathKind path);

  // Runs inbound calls and deferred jobs. Returns the number of items
  // handled; 0 when another poll on this context is already running.
  size_t poll(size_t budget = 256);
  // Queues a job to run on this context's next poll. Any thread.
  void defer(Job job);

  // Flushes this thread's outgoing paths, then polls and flushes the
  // process transmitters until `sync` is done. False on timeout.
  bool wait(const Synchronizer& sync,
            std::chrono::milliseconds timeout = std::chrono::minutes(5));
  // One round of that loop without the wait.
  void progress();

  std::mt19937_64& rng() { return rng_; }
  uint64_t invoked_count() const { return invoked_.load(); }

  // Helper handling: a background thread polls on the worker's behalf.
  void start_helper();
  void stop_helper();
  bool helper_running() const { return helper_mode_.load(); }
  // Serializes the worker with its helper; empty lock in direct mode.
  std::unique_lock<std::recursive_mutex> guard();

  // Cumulative consume count for a write-back slot array (destination side).
  uint64_t bump_write_back(uint32_t machine, uint32_t region, uint64_t offset);

 private:
  friend class System;
  friend class Process;

  void enqueue_inbound(InboundCall call) { inbound_.push(std::move(call)); }

  System& system_;
  Process& process_;
  Role role_;
  ThreadId id_;
  std::atomic<bool> initialized_{false};
  std::atomic<bool> polling_{false};
  std::atomic<uint64_t> invoked_{0};

  std::unique_ptr<mem::CircularAllocator> ring_;
  std::unique_ptr<mem::LinearCircularAllocator> segments_;
  std::unique_ptr<mem::GeneralAllocator> general_;
  std::unique_ptr<messenger::Endpoint> endpoint_;
  std::unique_ptr<aggregator::Aggregator> aggregator_;
  std::unique_ptr<CallPath> send_path_, write_path_, agg_path_;
  std::unique_ptr<Invoker> send_invoker_, write_invoker_, agg_invoker_;

  MpscQueue<InboundCall> inbound_;
  MpscQueue<Job> jobs_;
  std::mt19937_64 rng_;
  std::map<std::tuple<uint32_t, uint32_t, uint64_t>, uint64_t> write_back_counts_;

  std::thread helper_;
  std::atomic<bool> helper_stop_{false};
  std::atomic<bool> helper_mode_{false};
  std::recursive_mutex exclusive_;
};

// One simulated process: a queue pair per peer process (shared by all of its
// threads through one transmitter each), receive buffers for the send path
// and a service thread that drains them.
class Process {
 public:
  Process(System& system, uint32_t index);
  ~Process();
  Process(const Process&) = delete;
  Process& operator=(const Process&) = delete;

  uint32_t index() const { return index_; }
  verbs::MachineId machine() const { return machine_; }
  uint32_t zone() const { return zone_; }
  mem::ZoneArena& arena() { return *arena_; }

  transmit::Transmitter& transmitter_to(uint32_t dest_process) {
    return *tx_[dest_process];
  }
  void flush_transmitters();

  ThreadContext& service() { return *service_ctx_; }
  // Runs `job` on the process helper thread (started on first use).
  void run_on_helper(Job job);

  uint64_t malformed_records() const { return malformed_.load(); }
  uint64_t service_calls() const { return service_calls_.load(); }
  uint64_t routed_calls() const { return routed_.load(); }

 private:
  friend class System;

  void wire_up();
  void start();
  void stop();
  void service_loop();
  void handle_recv(const verbs::CompletionEntry& entry);
  void repost(size_t slot);

  System& system_;
  uint32_t index_;
  verbs::MachineId machine_;
  uint32_t zone_;
  mem::ZoneArena* arena_ = nullptr;

  std::vector<verbs::QueuePair*> out_qp_;  // by destination process
  std::vector<std::unique_ptr<transmit::Transmitter>> tx_;
  std::vector<verbs::QueuePair*> in_qp_;   // distinct receiving queue pairs
  std::shared_ptr<verbs::CompletionQueue> recv_cq_;
  std::vector<mem::RegisteredMemory> recv_buffers_;  // in_qp slot * depth + i

  std::unique_ptr<ThreadContext> service_ctx_;
  std::thread service_thread_;
  std::atomic<bool> stop_{false};

  std::once_flag helper_once_;
  std::unique_ptr<ThreadContext> helper_ctx_;
  MpscQueue<Job> helper_jobs_;
  std::thread helper_thread_;

  std::atomic<uint64_t> malformed_{0};
  std::atomic<uint64_t> service_calls_{0};
  std::atomic<uint64_t> routed_{0};
};

// Destination word used by the send path: the high bit selects the service
// thread of the process in the low bits.
inline constexpr uint32_t kServiceDest = 0x8000'0000u;

class System {
 public:
  explicit System(SystemConfig config);
  ~System();
  System(const System&) = delete;
  System& operator=(const System&) = delete;

  const SystemConfig& config() const { return config_; }
  FunctionRegistry& registry() { return registry_; }
  verbs::Network& network() { return *network_; }

  uint32_t thread_count() const { return config_.thread_count(); }
  uint32_t process_count() const { return config_.process_count(); }
  ThreadId thread_id(uint32_t flat) const { return fabric::thread_id(config_, flat); }

  // Binds the calling OS thread to worker `flat`. Throws kAlreadyInitialized
  // when taken and kCapacity when flat is outside the id space.
  ThreadContext& init_thread(uint32_t flat);
  // Next unclaimed id.
  ThreadContext& init_thread();
  // Collective: returns once every worker has called it and the system is
  // quiescent, then closes this thread's channels.
  void finalize_thread(ThreadContext& ctx);

  ThreadContext& context(uint32_t flat) { return *workers_[flat]; }
  Process& process(uint32_t index) { return *processes_[index]; }
  Process& process_of(uint32_t flat) {
    return *processes_[flat / config_.threads_per_process];
  }

  // Starts one OS thread per worker, runs init, body and finalize, and joins.
  // The first exception thrown by a body is rethrown.
  void run(const std::function<void(ThreadContext&)>& body);

  uint64_t submitted() const { return submitted_.load(); }
  uint64_t invoked() const { return invoked_.load(); }
  uint64_t malformed_records() const;
  uint64_t unknown_functions() const { return unknown_.load(); }

  // Plumbing shared by the call paths.
  void count_submitted(int64_t n) { submitted_.fetch_add(static_cast<uint64_t>(n)); }
  void count_invoked(ThreadContext& self, uint64_t n = 1);
  void freeze_registry();
  // Runs a ready record on a worker.
  void dispatch(ThreadContext& self, const ThreadId& source, const CallView& view,
                PathKind path);
  // Runs a ready record on a service thread.
  void dispatch_service(ThreadContext& service, const ThreadId& source,
                        const CallView& view);
  // Serializes a record behind a send envelope and posts it. `dest` is a
  // flat id or kServiceDest | process. False when the peer has no receive
  // buffer posted.
  bool send_record(ThreadContext& from, uint32_t dest, uint64_t fn,
                   const ContextParts& context,
                   const std::span<const std::byte>* payload,
                   std::span<Synchronizer* const> syncs);
  // Keeps retrying send_record until accepted.
  void send_record_blocking(ThreadContext& from, uint32_t dest, uint64_t fn,
                            const ContextParts& context,
                            const std::span<const std::byte>* payload = nullptr);

 private:
  SystemConfig config_;
  FunctionRegistry registry_;
  std::unique_ptr<verbs::Network> network_;
  std::map<std::pair<verbs::MachineId, uint32_t>, std::unique_ptr<mem::ZoneArena>> arenas_;
  std::vector<std::unique_ptr<Process>> processes_;
  std::vector<std::unique_ptr<ThreadContext>> workers_;
  std::atomic<uint32_t> next_flat_{0};
  std::mutex freeze_mu_;

  std::atomic<uint64_t> submitted_{0};
  std::atomic<uint64_t> invoked_{0};
  std::atomic<uint64_t> unknown_{0};
  std::atomic<uint32_t> arrived_{0};
  std::atomic<bool> failed_{false};

  friend class Process;
};

}  // namespace rivet::fabric
