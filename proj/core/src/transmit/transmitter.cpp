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

#include "rivet/transmit/transmitter.hpp"

#include <thread>
#include <vector>

#include "rivet/common/error.hpp"

namespace rivet::transmit {

// Travels through the completion queue as the user tag of a signaled op.
struct Transmitter::SignalRecord {
  uint64_t flush_read;     // flush number read before posting
  uint64_t posted_before;  // unsignaled ops posted before this op
  bool advance;            // completing this op may advance the flush number
};

struct Transmitter::Pending {
  uint64_t tag;
  std::vector<Synchronizer*> syncs;
  Pending* next = nullptr;
};

Transmitter::Transmitter(verbs::QueuePair& qp)
    : qp_(qp), u_max_(qp.config().u_max) {}

Transmitter::~Transmitter() {
  verbs::CompletionEntry buf[64];
  size_t n;
  while ((n = qp_.send_cq().poll(std::span<verbs::CompletionEntry>(buf))) > 0) {
    for (size_t i = 0; i < n; ++i) {
      delete reinterpret_cast<SignalRecord*>(buf[i].user_tag);
    }
  }
  Pending* list = pending_.exchange(nullptr);
  while (list != nullptr) {
    Pending* next = list->next;
    delete list;
    list = next;
  }
}

Ticket Transmitter::transmit(verbs::WorkRequest wr,
                             const mem::RegisteredMemory& memory,
                             std::span<Synchronizer* const> syncs) {
  Ticket ticket;
  const uint64_t k = ops_.fetch_add(1, std::memory_order_acq_rel) + 1;
  step(Step::kAfterIncrement);

  const uint64_t f = flush_.load(std::memory_order_acquire);
  const bool duty = k / u_max_ > f;
  bool signaled = duty;
  bool credit = false;
  if (!signaled) {
    const uint64_t taken = granted_.fetch_add(1, std::memory_order_acq_rel);
    const uint64_t retired = returned_.load(std::memory_order_acquire);
    if (static_cast<int64_t>(taken - retired) < static_cast<int64_t>(u_max_)) {
      credit = true;
    } else {
      granted_.fetch_sub(1, std::memory_order_acq_rel);
      signaled = true;
    }
  }

  SignalRecord* record = nullptr;
  if (signaled) {
    record = new SignalRecord{f, posted_.load(std::memory_order_acquire), duty};
    wr.user_tag = reinterpret_cast<uint64_t>(record);
    signaled_.fetch_add(1, std::memory_order_relaxed);
  }
  wr.signaled = signaled;
  const verbs::PostStatus status = qp_.post(wr);
  step(Step::kAfterPost);

  ticket.op_number = k;
  ticket.signaled = signaled;
  ticket.status = status;
  if (status != verbs::PostStatus::kOk) {
    if (credit) granted_.fetch_sub(1, std::memory_order_acq_rel);
    if (record != nullptr) {
      signaled_.fetch_sub(1, std::memory_order_relaxed);
      delete record;
    }
    return ticket;
  }
  if (credit) posted_.fetch_add(1, std::memory_order_acq_rel);

  // Reusable once the flush number passes observed + 1: the second advance
  // after this point comes from an op posted after this one.
  const uint64_t tag = flush_.load(std::memory_order_acquire) + 1;
  if (memory.tag() != nullptr) memory.tag()->mark(qp_.id(), &flush_, tag);
  raise_max_tag(tag);
  ticket.tag_flush = tag;
  if (!syncs.empty()) {
    push_pending(new Pending{tag, {syncs.begin(), syncs.end()}});
  }
  step(Step::kAfterTag);

  if (signaled) poll();
  return ticket;
}

Ticket Transmitter::write(const mem::RegisteredMemory& src,
                          const mem::RemoteLocator& dst, Synchronizer* sync) {
  if (src.length() > dst.length) {
    Ticket t;
    t.status = verbs::PostStatus::kInvalidRequest;
    return t;
  }
  verbs::WorkRequest wr;
  wr.op = verbs::Opcode::kWrite;
  wr.local = src.segment();
  wr.remote = dst.target();
  return transmit(wr, src, sync);
}

Ticket Transmitter::read(const mem::RegisteredMemory& dst,
                         const mem::RemoteLocator& src, Synchronizer* sync) {
  verbs::WorkRequest wr;
  wr.op = verbs::Opcode::kRead;
  wr.local = dst.segment(0, src.length < dst.length() ? src.length : dst.length());
  wr.remote = src.target();
  return transmit(wr, dst, sync);
}

Ticket Transmitter::send(const mem::RegisteredMemory& src, Synchronizer* sync) {
  verbs::WorkRequest wr;
  wr.op = verbs::Opcode::kSend;
  wr.local = src.segment();
  return transmit(wr, src, sync);
}

Ticket Transmitter::send(const mem::RegisteredMemory& src,
                         std::span<Synchronizer* const> syncs) {
  verbs::WorkRequest wr;
  wr.op = verbs::Opcode::kSend;
  wr.local = src.segment();
  return transmit(wr, src, syncs);
}

size_t Transmitter::poll() {
  verbs::CompletionEntry buf[32];
  const size_t n = qp_.send_cq().poll(std::span<verbs::CompletionEntry>(buf));
  if (n == 0) return 0;
  step(Step::kInPoll);
  for (size_t i = 0; i < n; ++i) {
    auto* record = reinterpret_cast<SignalRecord*>(buf[i].user_tag);
    if (record == nullptr) continue;
    if (buf[i].status != verbs::CompletionStatus::kOk) {
      faults_.fetch_add(1, std::memory_order_relaxed);
    }
    uint64_t cur = returned_.load(std::memory_order_relaxed);
    while (cur < record->posted_before &&
           !returned_.compare_exchange_weak(cur, record->posted_before,
                                            std::memory_order_acq_rel)) {
    }
    if (record->advance) {
      uint64_t expected = record->flush_read;
      if (flush_.compare_exchange_strong(expected, expected + 1,
                                         std::memory_order_acq_rel)) {
        advances_.fetch_add(1, std::memory_order_relaxed);
      }
    }
    delete record;
  }
  release_pending();
  return n;
}

void Transmitter::raise_max_tag(uint64_t tag) {
  uint64_t cur = max_tag_.load(std::memory_order_relaxed);
  while (cur < tag &&
         !max_tag_.compare_exchange_weak(cur, tag, std::memory_order_acq_rel)) {
  }
}

void Transmitter::push_pending(Pending* node) {
  Pending* head = pending_.load(std::memory_order_relaxed);
  do {
    node->next = head;
  } while (!pending_.compare_exchange_weak(head, node, std::memory_order_release,
                                           std::memory_order_relaxed));
}

void Transmitter::release_pending() {
  if (pending_.load(std::memory_order_acquire) == nullptr) return;
  Pending* list = pending_.exchange(nullptr, std::memory_order_acq_rel);
  const uint64_t f = flush_.load(std::memory_order_acquire);
  while (list != nullptr) {
    Pending* next = list->next;
    if (f > list->tag) {
      for (Synchronizer* s : list->syncs) s->notify();
      delete list;
    } else {
      push_pending(list);
    }
    list = next;
  }
}

bool Transmitter::flush_round(uint64_t observed) {
  // Keep k' <= floor(k / u_max) after the advance.
  uint64_t k = ops_.load(std::memory_order_acquire);
  while (k / u_max_ < observed + 1 &&
         !ops_.compare_exchange_weak(k, (observed + 1) * u_max_,
                                     std::memory_order_acq_rel)) {
  }
  auto* record =
      new SignalRecord{observed, posted_.load(std::memory_order_acquire), true};
  verbs::WorkRequest wr;
  wr.op = verbs::Opcode::kWrite;
  wr.signaled = true;
  wr.user_tag = reinterpret_cast<uint64_t>(record);
  const verbs::PostStatus status = qp_.post(wr);
  if (status != verbs::PostStatus::kOk) {
    delete record;
    throw Error(Errc::kTransport, std::string("flush failed: ") +
                                      verbs::to_string(status));
  }
  signaled_.fetch_add(1, std::memory_order_relaxed);
  while (flush_.load(std::memory_order_acquire) <= observed) {
    if (poll() == 0) std::this_thread::yield();
  }
  return true;
}

void Transmitter::flush() {
  const uint64_t target = max_tag_.load(std::memory_order_acquire);
  if (target == 0) {
    poll();
    return;
  }
  uint64_t f;
  while ((f = flush_.load(std::memory_order_acquire)) <= target) {
    poll();
    if (flush_.load(std::memory_order_acquire) != f) continue;
    flush_round(f);
  }
  release_pending();
}

}  // namespace rivet::transmit
