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

#include <cstring>

#include <spdlog/spdlog.h>

#include "rivet/common/spin.hpp"
#include "rivet/fabric/system.hpp"

namespace rivet::fabric {

Process::Process(System& system, uint32_t index)
    : system_(system),
      index_(index),
      machine_(index / system.config().processes_per_machine),
      zone_((index % system.config().processes_per_machine) % system.config().zones()),
      recv_cq_(std::make_shared<verbs::CompletionQueue>()) {
  arena_ = system.arenas_.at({machine_, zone_}).get();
  out_qp_.resize(system.process_count(), nullptr);
}

Process::~Process() { stop(); }

void Process::wire_up() {
  for (verbs::QueuePair* qp : out_qp_) {
    tx_.push_back(std::make_unique<transmit::Transmitter>(*qp));
  }
  const SystemConfig& c = system_.config();
  for (size_t slot = 0; slot < in_qp_.size(); ++slot) {
    for (uint32_t i = 0; i < c.recv_depth; ++i) {
      recv_buffers_.push_back(arena_->allocate(c.recv_size));
      repost(recv_buffers_.size() - 1);
    }
  }
  service_ctx_ = std::make_unique<ThreadContext>(system_, *this, Role::kService, index_);
}

void Process::repost(size_t slot) {
  const SystemConfig& c = system_.config();
  verbs::QueuePair* qp = in_qp_[slot / c.recv_depth];
  const verbs::PostStatus st = qp->post_recv(recv_buffers_[slot].segment(), slot);
  if (st != verbs::PostStatus::kOk) {
    spdlog::error("process {}: cannot repost receive buffer: {}", index_,
                  verbs::to_string(st));
  }
}

void Process::start() {
  service_thread_ = std::thread([this] { service_loop(); });
}

void Process::stop() {
  stop_.store(true, std::memory_order_release);
  if (service_thread_.joinable()) service_thread_.join();
  if (helper_thread_.joinable()) helper_thread_.join();
}

void Process::flush_transmitters() {
  for (auto& tx : tx_) tx->flush();
}

void Process::service_loop() {
  verbs::CompletionEntry entries[32];
  Backoff backoff;
  while (!stop_.load(std::memory_order_acquire)) {
    const size_t n = recv_cq_->poll(std::span<verbs::CompletionEntry>(entries));
    if (n == 0) {
      backoff.pause();
      continue;
    }
    backoff.reset();
    for (size_t i = 0; i < n; ++i) handle_recv(entries[i]);
  }
}

void Process::handle_recv(const verbs::CompletionEntry& entry) {
  const size_t slot = entry.user_tag;
  if (slot >= recv_buffers_.size()) {
    malformed_.fetch_add(1);
    return;
  }
  const mem::RegisteredMemory& buf = recv_buffers_[slot];
  const std::byte* data = buf.data();
  const uint64_t len = entry.byte_len;
  auto drop = [&](const char* why) {
    malformed_.fetch_add(1);
    spdlog::warn("process {}: dropping received record: {}", index_, why);
    repost(slot);
  };
  if (entry.status != verbs::CompletionStatus::kOk) return drop("receive fault");
  if (len < 16 + kMinCallSize || len > buf.length()) return drop("bad length");

  uint32_t dest = 0, src = 0;
  std::memcpy(&dest, data, 4);
  std::memcpy(&src, data + 4, 4);
  std::span<const std::byte> record(data + 16, len - 16);
  CallView view;
  if (probe_call(record, &view) != Probe::kReady) return drop("record not ready");
  if (view.total_length != record.size()) return drop("record length mismatch");

  ThreadId source;
  if (src & kServiceDest) {
    source = system_.process(src & ~kServiceDest).service().id();
  } else if (src < system_.thread_count()) {
    source = system_.thread_id(src);
  } else {
    return drop("unknown source");
  }

  if (dest & kServiceDest) {
    if ((dest & ~kServiceDest) != index_) return drop("service call for another process");
    system_.dispatch_service(*service_ctx_, source, view);
    service_calls_.fetch_add(1);
  } else {
    if (dest >= system_.thread_count() ||
        dest / system_.config().threads_per_process != index_) {
      return drop("worker of another process");
    }
    InboundCall call{source, std::vector<std::byte>(record.begin(), record.end())};
    system_.context(dest).enqueue_inbound(std::move(call));
    routed_.fetch_add(1);
  }
  repost(slot);
}

void Process::run_on_helper(Job job) {
  std::call_once(helper_once_, [this] {
    helper_ctx_ = std::make_unique<ThreadContext>(system_, *this, Role::kHelper, index_);
    helper_thread_ = std::thread([this] {
      Backoff backoff;
      for (;;) {
        if (auto next = helper_jobs_.pop()) {
          (*next)(*helper_ctx_);
          backoff.reset();
          continue;
        }
        if (stop_.load(std::memory_order_acquire)) break;
        backoff.pause();
      }
    });
  });
  helper_jobs_.push(std::move(job));
}

}  // namespace rivet::fabric
