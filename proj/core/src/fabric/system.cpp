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

#include "rivet/fabric/system.hpp"

#include <cstring>
#include <exception>

#include <spdlog/spdlog.h>

#include "rivet/aggregator/aggregator.hpp"
#include "rivet/common/spin.hpp"
#include "rivet/messenger/channel.hpp"
#include "system_calls.hpp"

namespace rivet::fabric {

namespace detail {
void dispatch_system(System& system, ThreadContext& self, const ThreadId& source,
                     const CallView& view, PathKind path);
void dispatch_service_call(System& system, ThreadContext& service,
                           const ThreadId& source, const CallView& view);
}  // namespace detail

System::System(SystemConfig config) : config_(std::move(config)) {
  validate(config_);
  verbs::NetworkConfig nc;
  nc.execution = config_.execution;
  nc.seed = config_.seed;
  nc.machine.zones = config_.zones();
  network_ = std::make_unique<verbs::Network>(nc);
  for (uint32_t m = 0; m < config_.machines; ++m) {
    network_->add_machine(config_.zones());
  }
  mem::ArenaConfig ac;
  ac.slab_size = config_.slab_size;
  for (uint32_t m = 0; m < config_.machines; ++m) {
    for (uint32_t z = 0; z < config_.zones(); ++z) {
      arenas_[{m, z}] = std::make_unique<mem::ZoneArena>(network_->machine(m), z, ac);
    }
  }
  const uint32_t np = process_count();
  for (uint32_t i = 0; i < np; ++i) {
    processes_.push_back(std::make_unique<Process>(*this, i));
  }
  for (uint32_t p = 0; p < np; ++p) {
    for (uint32_t q = p; q < np; ++q) {
      Process& a = *processes_[p];
      Process& b = *processes_[q];
      verbs::ConnectOptions opts;
      opts.qp.u_max = config_.u_max;
      opts.backend = config_.backend;
      opts.recv_cq_a = a.recv_cq_;
      opts.recv_cq_b = b.recv_cq_;
      auto [qa, qb] = network_->connect(a.machine(), b.machine(), opts);
      a.out_qp_[q] = qa;
      if (p == q) {
        a.in_qp_.push_back(qb);
      } else {
        b.out_qp_[p] = qb;
        a.in_qp_.push_back(qa);
        b.in_qp_.push_back(qb);
      }
    }
  }
  for (auto& proc : processes_) proc->wire_up();
  for (uint32_t t = 0; t < thread_count(); ++t) {
    workers_.push_back(std::make_unique<ThreadContext>(*this, process_of(t), Role::kWorker, t));
  }
  for (auto& proc : processes_) proc->start();
}

System::~System() {
  for (auto& w : workers_) w->stop_helper();
  for (auto& proc : processes_) proc->stop();
  workers_.clear();
  for (auto& proc : processes_) {
    proc->service_ctx_.reset();
    proc->helper_ctx_.reset();
  }
  processes_.clear();
  network_.reset();
}

ThreadContext& System::init_thread(uint32_t flat) {
  if (flat >= thread_count()) {
    throw Error(Errc::kCapacity, "thread id " + std::to_string(flat) +
                                     " outside the configured id space");
  }
  ThreadContext& ctx = *workers_[flat];
  bool expected = false;
  if (!ctx.initialized_.compare_exchange_strong(expected, true)) {
    throw Error(Errc::kAlreadyInitialized,
                "thread id " + std::to_string(flat) + " already initialized");
  }
  if (config_.handling == HandlingMode::kHelper) ctx.start_helper();
  return ctx;
}

ThreadContext& System::init_thread() {
  for (;;) {
    const uint32_t flat = next_flat_.fetch_add(1);
    if (flat >= thread_count()) {
      throw Error(Errc::kCapacity, "all thread ids are taken");
    }
    if (!workers_[flat]->initialized()) {
      try {
        return init_thread(flat);
      } catch (const Error& e) {
        if (e.code() != Errc::kAlreadyInitialized) throw;
      }
    }
  }
}

void System::finalize_thread(ThreadContext& ctx) {
  ctx.stop_helper();
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::milliseconds(config_.finalize_timeout_ms);
  auto check_deadline = [&](const char* phase) {
    if (std::chrono::steady_clock::now() > deadline) {
      throw Error(Errc::kTimeout,
                  std::string("finalize timed out while ") + phase +
                      " (submitted " + std::to_string(submitted()) + ", invoked " +
                      std::to_string(invoked()) + ")");
    }
  };

  arrived_.fetch_add(1);
  Backoff backoff;
  for (;;) {
    if (failed_.load()) return;
    ctx.aggregator().flush_all();
    const size_t n = ctx.poll();
    if (arrived_.load() == thread_count() && ctx.aggregator().idle()) {
      // invoked never exceeds submitted, so reading invoked first makes
      // equality a consistent snapshot.
      const uint64_t inv = invoked_.load();
      const uint64_t sub = submitted_.load();
      if (inv == sub) break;
    }
    check_deadline("waiting for quiescence");
    if (n == 0) {
      backoff.pause();
    } else {
      backoff.reset();
    }
  }

  messenger::Endpoint& ep = ctx.messenger();
  ep.shutdown_all();
  backoff.reset();
  while (!(ep.shutdown_sent() && ep.all_incoming_closed())) {
    if (failed_.load()) return;
    if (ctx.poll() == 0) backoff.pause();
    check_deadline("closing channels");
  }
  ctx.process().flush_transmitters();
}

void System::run(const std::function<void(ThreadContext&)>& body) {
  std::exception_ptr first;
  std::mutex first_mu;
  std::vector<std::thread> threads;
  for (uint32_t t = 0; t < thread_count(); ++t) {
    threads.emplace_back([&, t] {
      try {
        ThreadContext& ctx = init_thread(t);
        body(ctx);
        finalize_thread(ctx);
      } catch (...) {
        failed_.store(true);
        std::lock_guard lock(first_mu);
        if (!first) first = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  if (first) std::rethrow_exception(first);
}

uint64_t System::malformed_records() const {
  uint64_t n = 0;
  for (const auto& p : processes_) n += p->malformed_records();
  return n;
}

void System::count_invoked(ThreadContext& self, uint64_t n) {
  self.invoked_.fetch_add(n, std::memory_order_relaxed);
  invoked_.fetch_add(n, std::memory_order_acq_rel);
}

void System::freeze_registry() {
  if (!registry_.frozen()) registry_.freeze();
}

void System::dispatch(ThreadContext& self, const ThreadId& source,
                      const CallView& view, PathKind path) {
  if (view.function_id >= FunctionRegistry::kSystemBase) {
    detail::dispatch_system(*this, self, source, view, path);
    return;
  }
  const Function* fn = registry_.find(view.function_id);
  if (fn == nullptr) {
    unknown_.fetch_add(1);
    spdlog::error("worker {}: no function registered under id {}", self.flat(),
                  view.function_id);
    count_invoked(self);
    return;
  }
  Invocation inv;
  inv.system = this;
  inv.self = &self;
  inv.source = source;
  inv.function_id = view.function_id;
  inv.context = view.context;
  inv.payload = view.payload;
  inv.has_payload = view.has_payload();
  inv.path = path;
  struct Count {
    System& s;
    ThreadContext& self;
    ~Count() { s.count_invoked(self); }
  } count{*this, self};
  (*fn)(inv);
}

void System::dispatch_service(ThreadContext& service, const ThreadId& source,
                              const CallView& view) {
  detail::dispatch_service_call(*this, service, source, view);
  count_invoked(service);
}

bool System::send_record(ThreadContext& from, uint32_t dest, uint64_t fn,
                         const ContextParts& context,
                         const std::span<const std::byte>* payload,
                         std::span<Synchronizer* const> syncs) {
  freeze_registry();
  const bool service = (dest & kServiceDest) != 0;
  const uint32_t dest_process =
      service ? dest & ~kServiceDest : dest / config_.threads_per_process;
  if (service ? dest_process >= process_count() : dest >= thread_count()) {
    throw Error(Errc::kInvalidArgument, "unknown destination " + std::to_string(dest));
  }
  const size_t record = serialized_size(context.size(), payload != nullptr,
                                        payload ? payload->size() : 0);
  const size_t total = 16 + record;
  if (total > config_.recv_size) {
    throw Error(Errc::kTooLarge, "record of " + std::to_string(total) +
                                     " bytes exceeds the receive buffer size");
  }
  mem::RegisteredMemory mem = from.scratch(total);
  std::byte* p = mem.data();
  const uint32_t src = from.flat();
  const uint64_t reserved = 0;
  std::memcpy(p, &dest, 4);
  std::memcpy(p + 4, &src, 4);
  std::memcpy(p + 8, &reserved, 8);
  serialize_ready(mem.bytes().subspan(16), fn, context, payload);

  count_submitted(1);
  const transmit::Ticket t =
      from.process().transmitter_to(dest_process).send(mem, syncs);
  if (!t.ok()) {
    count_submitted(-1);
    if (t.status == verbs::PostStatus::kReceiverNotReady) return false;
    throw Error(Errc::kTransport, std::string("send failed: ") + verbs::to_string(t.status));
  }
  return true;
}

void System::send_record_blocking(ThreadContext& from, uint32_t dest, uint64_t fn,
                                  const ContextParts& context,
                                  const std::span<const std::byte>* payload) {
  Backoff backoff;
  while (!send_record(from, dest, fn, context, payload, {})) backoff.pause();
}

}  // namespace rivet::fabric
