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

#include <spdlog/spdlog.h>

#include "rivet/aggregator/aggregator.hpp"
#include "rivet/common/spin.hpp"
#include "rivet/fabric/invoker.hpp"
#include "rivet/fabric/system.hpp"
#include "rivet/messenger/channel.hpp"

namespace rivet::fabric {

namespace {

ThreadId make_id(System& system, Process& process, Role role, uint32_t flat) {
  if (role == Role::kWorker) return system.thread_id(flat);
  ThreadId id;
  id.process = process.index();
  id.machine = process.machine();
  id.local_process = process.index() % system.config().processes_per_machine;
  id.flat = kServiceDest | process.index();
  return id;
}

}  // namespace

ThreadContext::ThreadContext(System& system, Process& process, Role role,
                             uint32_t flat)
    : system_(system),
      process_(process),
      role_(role),
      id_(make_id(system, process, role, flat)) {
  const SystemConfig& c = system.config();
  rng_.seed(c.seed * 0x9E3779B97F4A7C15ull + flat * 2 + static_cast<uint32_t>(role));
  mem::RingConfig rc;
  rc.unit_size = c.unit_size;
  rc.initial_units = c.ring_initial;
  rc.growth = c.ring_growth;
  rc.max_units = c.ring_max;
  ring_ = std::make_unique<mem::CircularAllocator>(process.arena(), rc);
  segments_ = std::make_unique<mem::LinearCircularAllocator>(*ring_);
  general_ = std::make_unique<mem::GeneralAllocator>(process.arena(), c.general_cap);
  send_path_ = std::make_unique<SendPath>(*this);
  send_invoker_ = std::make_unique<Invoker>(*this, *send_path_);
  if (role == Role::kWorker) {
    endpoint_ = std::make_unique<messenger::Endpoint>(*this);
    aggregator_ = std::make_unique<aggregator::Aggregator>(*this);
    write_path_ = std::make_unique<MessengerPath>(*this);
    agg_path_ = std::make_unique<AggregatorPath>(*this);
    write_invoker_ = std::make_unique<Invoker>(*this, *write_path_);
    agg_invoker_ = std::make_unique<Invoker>(*this, *agg_path_);
  }
}

ThreadContext::~ThreadContext() { stop_helper(); }

mem::CircularAllocator& ThreadContext::ring() { return *ring_; }
mem::LinearCircularAllocator& ThreadContext::segments() { return *segments_; }
mem::GeneralAllocator& ThreadContext::general() { return *general_; }

mem::RegisteredMemory ThreadContext::scratch(uint64_t length) {
  for (;;) {
    if (auto seg = segments_->allocate(length)) return *seg;
    process_.flush_transmitters();
  }
}

transmit::Transmitter& ThreadContext::transmitter_to(uint32_t dest_flat) {
  return process_.transmitter_to(dest_flat / system_.config().threads_per_process);
}

messenger::Endpoint& ThreadContext::messenger() {
  if (!endpoint_) throw Error(Errc::kContractViolation, "channels exist on workers only");
  return *endpoint_;
}

aggregator::Aggregator& ThreadContext::aggregator() {
  if (!aggregator_) throw Error(Errc::kContractViolation, "aggregators exist on workers only");
  return *aggregator_;
}

Invoker& ThreadContext::via_send() { return *send_invoker_; }
Invoker& ThreadContext::via_write() {
  if (!write_invoker_) throw Error(Errc::kContractViolation, "channels exist on workers only");
  return *write_invoker_;
}
Invoker& ThreadContext::via_aggregator() {
  if (!agg_invoker_) throw Error(Errc::kContractViolation, "aggregators exist on workers only");
  return *agg_invoker_;
}

Invoker& ThreadContext::invoker(PathKind path) {
  switch (path) {
    case PathKind::kSend: return via_send();
    case PathKind::kWrite: return via_write();
    case PathKind::kAggregated: return via_aggregator();
  }
  return via_send();
}

size_t ThreadContext::poll(size_t budget) {
  if (polling_.exchange(true, std::memory_order_acquire)) return 0;
  struct Release {
    std::atomic<bool>& flag;
    ~Release() { flag.store(false, std::memory_order_release); }
  } release{polling_};

  size_t n = 0;
  while (n < budget) {
    auto job = jobs_.pop();
    if (!job) break;
    (*job)(*this);
    ++n;
  }
  while (n < budget) {
    auto call = inbound_.pop();
    if (!call) break;
    CallView view;
    if (probe_call(call->record, &view) != Probe::kReady) {
      spdlog::error("worker {}: dropping malformed inbound record", id_.flat);
      continue;
    }
    system_.dispatch(*this, call->source, view, PathKind::kSend);
    ++n;
  }
  if (endpoint_ && n < budget) n += endpoint_->poll(budget - n);
  if (aggregator_) aggregator_->tick();
  return n;
}

void ThreadContext::defer(Job job) { jobs_.push(std::move(job)); }

void ThreadContext::progress() {
  auto lock = guard();
  if (aggregator_) aggregator_->flush_all();
  poll();
  process_.flush_transmitters();
}

bool ThreadContext::wait(const Synchronizer& sync, std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  Backoff backoff;
  while (!sync.done()) {
    if (std::chrono::steady_clock::now() > deadline) return false;
    {
      auto lock = guard();
      if (aggregator_) aggregator_->flush_all();
      if (poll() > 0) backoff.reset();
      process_.flush_transmitters();
    }
    if (sync.done()) break;
    backoff.pause();
  }
  return true;
}

std::unique_lock<std::recursive_mutex> ThreadContext::guard() {
  if (!helper_mode_.load(std::memory_order_acquire)) return {};
  return std::unique_lock<std::recursive_mutex>(exclusive_);
}

void ThreadContext::start_helper() {
  if (helper_.joinable()) return;
  ring_->share_owner();
  general_->share_owner();
  helper_stop_.store(false);
  helper_mode_.store(true, std::memory_order_release);
  helper_ = std::thread([this] {
    Backoff backoff;
    while (!helper_stop_.load(std::memory_order_acquire)) {
      size_t n;
      {
        std::lock_guard lock(exclusive_);
        n = poll();
      }
      if (n == 0) {
        backoff.pause();
      } else {
        backoff.reset();
      }
    }
  });
}

void ThreadContext::stop_helper() {
  if (!helper_.joinable()) return;
  helper_stop_.store(true, std::memory_order_release);
  helper_.join();
  helper_mode_.store(false, std::memory_order_release);
}

uint64_t ThreadContext::bump_write_back(uint32_t machine, uint32_t region,
                                        uint64_t offset) {
  return ++write_back_counts_[{machine, region, offset}];
}

}  // namespace rivet::fabric
