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

#include "rivet/messenger/channel.hpp"

#include <atomic>
#include <cstring>

#include <spdlog/spdlog.h>

#include "../fabric/system_calls.hpp"
#include "rivet/common/spin.hpp"
#include "rivet/fabric/invoker.hpp"
#include "rivet/fabric/system.hpp"

namespace rivet::messenger {
namespace {

uint64_t load_word(const std::byte* p) {
  return std::atomic_ref<uint64_t>(*reinterpret_cast<uint64_t*>(const_cast<std::byte*>(p)))
      .load(std::memory_order_acquire);
}

void store_word(std::byte* p, uint64_t v) {
  std::atomic_ref<uint64_t>(*reinterpret_cast<uint64_t*>(p))
      .store(v, std::memory_order_release);
}

}  // namespace

// ---------------------------------------------------------------- sender

SenderChannel::SenderChannel(fabric::ThreadContext& self, uint32_t dest)
    : self_(self), dest_(dest) {
  const fabric::SystemConfig& c = self.system().config();
  chunk_size_ = c.chunk_size;
  capacity_ = c.chunk_size - kHeaderBytes;
  c_ = c.c;
  c_max_ = c.c_max;
  consumed_word_ = self.process().arena().allocate(8);
  store_word(consumed_word_.data(), 0);
  ring_ = request_chunks(c_, true);
  lap_end_.assign(ring_.size(), 0);
}

SenderChannel::~SenderChannel() {
  if (consumed_word_.valid()) self_.process().arena().release(consumed_word_);
}

std::vector<mem::RemoteLocator> SenderChannel::request_chunks(uint32_t count,
                                                              bool initial) {
  fabric::System& system = self_.system();
  const uint64_t resp_len = fabric::sys::chunk_response_size(count);
  mem::RegisteredMemory resp = self_.general().allocate(resp_len);
  std::memset(resp.data(), 0, resp_len);
  const mem::RemoteLocator resp_loc = resp.locator();
  const mem::RemoteLocator wb = consumed_word_.locator();

  fabric::sys::ChunkAllocArgs args{};
  args.sender = self_.flat();
  args.receiver = dest_;
  args.count = count;
  args.initial = initial ? 1 : 0;
  args.resp_machine = resp_loc.machine;
  args.resp_region = resp_loc.region;
  args.resp_offset = resp_loc.offset;
  args.wb_machine = wb.machine;
  args.wb_region = wb.region;
  args.wb_offset = wb.offset;
  const uint32_t service = fabric::kServiceDest | system.thread_id(dest_).process;
  system.send_record_blocking(self_, service, fabric::sys::kChunkAlloc,
                              fabric::ContextParts{fabric::bytes_of(args), {}});

  // Both end words: a split write may land either half first.
  Backoff backoff;
  while (load_word(resp.data()) == 0 || load_word(resp.data() + resp_len - 8) == 0) {
    self_.process().flush_transmitters();
    backoff.pause();
  }
  const verbs::MachineId machine = system.thread_id(dest_).machine;
  std::vector<mem::RemoteLocator> out;
  for (uint32_t i = 0; i < count; ++i) {
    uint64_t region = 0, offset = 0;
    std::memcpy(&region, resp.data() + 8 + 16 * i, 8);
    std::memcpy(&offset, resp.data() + 16 + 16 * i, 8);
    out.push_back({machine, static_cast<verbs::RegionId>(region), offset, chunk_size_});
  }
  self_.general().free(resp);
  return out;
}

uint64_t SenderChannel::pushed_consumed() const {
  return std::max(load_word(consumed_word_.data()), pulled_);
}

bool SenderChannel::slot_free(size_t slot) const {
  return pushed_consumed() >= lap_end_[slot];
}

bool SenderChannel::would_accept(uint64_t length) {
  if (shut_down_ || length > capacity_) return false;
  if (fill_ + length <= capacity_) return true;
  const size_t next = (cur_ + 1) % ring_.size();
  if (slot_free(next) || ring_.size() < c_max_) return true;
  maybe_pull();
  return slot_free(next);
}

void SenderChannel::maybe_pull() {
  const uint64_t threshold = self_.system().config().consumed_pull_threshold;
  if (threshold == 0 || produced() - pushed_consumed() < threshold) return;
  // The receiver keeps its live consumed offset in the first chunk's header.
  mem::RegisteredMemory word = self_.scratch(8);
  Synchronizer done;
  done.add();
  auto& tx = self_.transmitter_to(dest_);
  const transmit::Ticket t = tx.read(word, ring_[0].slice(kConsumerOffset, 8), &done);
  if (!t.ok()) return;
  while (!done.done()) tx.flush();
  uint64_t v = 0;
  std::memcpy(&v, word.data(), 8);
  pulled_ = std::max(pulled_, v);
  ++stats_.pulls;
}

void SenderChannel::grow(uint32_t count) {
  std::vector<mem::RemoteLocator> fresh = request_chunks(count, false);
  const auto at = static_cast<std::ptrdiff_t>(cur_ + 1);
  ring_.insert(ring_.begin() + at, fresh.begin(), fresh.end());
  lap_end_.insert(lap_end_.begin() + at, fresh.size(), 0);
  ++stats_.grows;
}

void SenderChannel::close_current(uint32_t grow_count, uint32_t splice) {
  const uint64_t first = lap_first_;
  const uint64_t last = produced();
  mem::RegisteredMemory words = self_.scratch(24);
  std::memcpy(words.data(), &first, 8);
  std::memcpy(words.data() + 8, &last, 8);
  const uint64_t control = make_control(first, grow_count, splice);
  std::memcpy(words.data() + 16, &control, 8);
  auto& tx = self_.transmitter_to(dest_);
  const mem::RemoteLocator& chunk = ring_[cur_];
  // Bounds first, then the control word in its own write: once the control
  // word is visible the bounds are too.
  transmit::Ticket t = tx.write(words.slice(0, 16), chunk.slice(kProducerFirst, 16));
  if (t.ok()) t = tx.write(words.slice(16, 8), chunk.slice(kProducerControl, 8));
  if (!t.ok()) {
    throw Error(Errc::kTransport,
                std::string("chunk close failed: ") + verbs::to_string(t.status));
  }
  lap_end_[cur_] = last;
  ++stats_.chunks_closed;
}

bool SenderChannel::advance() {
  size_t next = (cur_ + 1) % ring_.size();
  uint32_t grown = 0;
  if (!slot_free(next)) {
    maybe_pull();
    if (!slot_free(next)) {
      if (ring_.size() >= c_max_) return false;
      grown = std::min<uint32_t>(c_, c_max_ - static_cast<uint32_t>(ring_.size()));
      grow(grown);
      next = cur_ + 1;
    }
  }
  close_current(grown, grown ? static_cast<uint32_t>(cur_ + 1) : 0);
  lap_first_ = produced();
  cur_ = next;
  fill_ = 0;
  return true;
}

bool SenderChannel::send(const mem::RegisteredMemory& bytes,
                         std::span<Synchronizer* const> syncs) {
  const uint64_t len = bytes.length();
  if (shut_down_ || len > capacity_ || len == 0) {
    ++stats_.rejected;
    return false;
  }
  if (fill_ + len > capacity_ && !advance()) {
    ++stats_.rejected;
    return false;
  }
  const mem::RemoteLocator target = ring_[cur_].slice(kHeaderBytes + fill_, len);
  verbs::WorkRequest wr;
  wr.op = verbs::Opcode::kWrite;
  wr.local = bytes.segment();
  wr.remote = target.target();
  const transmit::Ticket t = self_.transmitter_to(dest_).transmit(wr, bytes, syncs);
  if (!t.ok()) {
    throw Error(Errc::kTransport,
                std::string("channel write failed: ") + verbs::to_string(t.status));
  }
  fill_ += len;
  ++stats_.records;
  stats_.bytes += len;
  return true;
}

bool SenderChannel::shutdown() {
  if (shut_down_) return true;
  const uint64_t size = fabric::serialized_size(0, false, 0);
  if (!would_accept(size)) return false;
  mem::RegisteredMemory rec = self_.scratch(size);
  fabric::serialize_ready(rec.bytes(), fabric::sys::kChannelShutdown, {}, nullptr);
  if (!send(rec)) return false;
  shut_down_ = true;
  return true;
}

// -------------------------------------------------------------- receiver

ReceiverChannel::ReceiverChannel(fabric::ThreadContext& self, ChunkGrant grant)
    : self_(self),
      source_(grant.sender),
      capacity_(self.system().config().chunk_size - kHeaderBytes),
      ring_(std::move(grant.chunks)),
      write_back_(grant.write_back) {}

void ReceiverChannel::add_spare(std::vector<mem::RegisteredMemory> chunks) {
  for (auto& c : chunks) spare_.push_back(c);
}

size_t ReceiverChannel::poll(size_t budget) {
  if (closed_ || faulted_) return 0;
  fabric::System& system = self_.system();
  const fabric::ThreadId source = system.thread_id(source_);
  size_t ran = 0;
  while (ran < budget) {
    std::byte* chunk = ring_[cur_].data();
    std::byte* data = chunk + kHeaderBytes;
    if (pos_ + fabric::kMinCallSize <= capacity_) {
      fabric::CallView view;
      const std::span<const std::byte> area(data + pos_, capacity_ - pos_);
      const fabric::Probe pr = fabric::probe_call(area, &view);
      if (pr == fabric::Probe::kReady) {
        if (view.function_id == fabric::sys::kChannelShutdown) {
          closed_ = true;
        } else {
          system.dispatch(self_, source, view, fabric::PathKind::kWrite);
        }
        std::memset(data + pos_, 0, view.total_length);
        pos_ += view.total_length;
        store_word(ring_[0].data() + kConsumerOffset, consumed());
        ++stats_.records;
        ++ran;
        if (closed_) break;
        continue;
      }
      if (pr == fabric::Probe::kMalformed) {
        faulted_ = true;
        ++stats_.faults;
        spdlog::error("worker {}: malformed record from {} at offset {}", self_.flat(),
                      source_, consumed());
        break;
      }
    }
    const uint64_t control = load_word(chunk + kProducerControl);
    if (!control_closed(control) || control_lap(control) != (lap_first_ & kLapMask)) break;
    uint64_t last = 0;
    std::memcpy(&last, chunk + kProducerLast, 8);
    if (last != lap_first_ + pos_) {
      faulted_ = true;
      ++stats_.faults;
      spdlog::error("worker {}: chunk from {} closed at {} but consumed {}", self_.flat(),
                    source_, last, consumed());
      break;
    }
    finish_chunk(last, control);
  }
  return ran;
}

void ReceiverChannel::finish_chunk(uint64_t last, uint64_t control) {
  std::byte* chunk = ring_[cur_].data();
  store_word(chunk + kProducerControl, 0);
  push_consumed(last);
  ++stats_.chunks_done;
  const uint32_t grow = control_grow(control);
  if (grow > 0) {
    Backoff backoff;
    while (spare_.size() < grow) {
      self_.messenger().drain_grants();
      if (spare_.size() < grow) backoff.pause();
    }
    const auto at = static_cast<std::ptrdiff_t>(control_splice(control));
    std::vector<mem::RegisteredMemory> fresh(spare_.begin(), spare_.begin() + grow);
    spare_.erase(spare_.begin(), spare_.begin() + grow);
    ring_.insert(ring_.begin() + at, fresh.begin(), fresh.end());
    ++stats_.splices;
  }
  cur_ = (cur_ + 1) % ring_.size();
  lap_first_ = last;
  pos_ = 0;
}

void ReceiverChannel::push_consumed(uint64_t last) {
  mem::RegisteredMemory word = self_.scratch(8);
  std::memcpy(word.data(), &last, 8);
  const transmit::Ticket t = self_.transmitter_to(source_).write(word, write_back_);
  if (!t.ok()) {
    spdlog::error("worker {}: consumed push to {} failed: {}", self_.flat(), source_,
                  verbs::to_string(t.status));
  }
}

// -------------------------------------------------------------- endpoint

Endpoint::Endpoint(fabric::ThreadContext& self) : self_(self) {}
Endpoint::~Endpoint() = default;

SenderChannel& Endpoint::sender(uint32_t dest) {
  auto it = senders_.find(dest);
  if (it != senders_.end()) return *it->second;
  auto ch = std::make_unique<SenderChannel>(self_, dest);
  SenderChannel& ref = *ch;
  senders_.emplace(dest, std::move(ch));
  sender_order_.push_back(&ref);
  return ref;
}

SenderChannel* Endpoint::find_sender(uint32_t dest) {
  auto it = senders_.find(dest);
  return it == senders_.end() ? nullptr : it->second.get();
}

ReceiverChannel* Endpoint::receiver(uint32_t source) {
  auto it = receivers_.find(source);
  return it == receivers_.end() ? nullptr : it->second.get();
}

void Endpoint::drain_grants() {
  while (auto g = grants_.pop()) {
    if (g->initial) {
      auto ch = std::make_unique<ReceiverChannel>(self_, std::move(*g));
      ReceiverChannel* raw = ch.get();
      const uint32_t src = raw->source();
      if (!receivers_.emplace(src, std::move(ch)).second) {
        spdlog::error("worker {}: duplicate channel setup from {}", self_.flat(), src);
        continue;
      }
      receiver_order_.push_back(raw);
    } else if (ReceiverChannel* ch = receiver(g->sender)) {
      ch->add_spare(std::move(g->chunks));
    } else {
      spdlog::error("worker {}: chunk grant for unknown channel from {}", self_.flat(),
                    g->sender);
    }
  }
}

size_t Endpoint::poll(size_t budget) {
  drain_grants();
  if (shutting_down_) {
    for (SenderChannel* s : sender_order_) s->shutdown();
  }
  size_t ran = 0;
  const size_t n = receiver_order_.size();
  for (size_t i = 0; i < n && ran < budget; ++i) {
    ReceiverChannel* ch = receiver_order_[(next_receiver_ + i) % n];
    ran += ch->poll(budget - ran);
  }
  if (n > 0) next_receiver_ = (next_receiver_ + 1) % n;
  return ran;
}

void Endpoint::shutdown_all() {
  shutting_down_ = true;
  for (SenderChannel* s : sender_order_) s->shutdown();
}

bool Endpoint::shutdown_sent() const {
  for (const SenderChannel* s : sender_order_) {
    if (!s->is_shut_down()) return false;
  }
  return true;
}

bool Endpoint::all_incoming_closed() const {
  for (const ReceiverChannel* r : receiver_order_) {
    if (!r->closed() && !r->faulted()) return false;
  }
  return true;
}

SenderStats Endpoint::sender_totals() const {
  SenderStats t;
  for (const SenderChannel* s : sender_order_) {
    const SenderStats& x = s->stats();
    t.records += x.records;
    t.bytes += x.bytes;
    t.chunks_closed += x.chunks_closed;
    t.grows += x.grows;
    t.rejected += x.rejected;
    t.pulls += x.pulls;
  }
  return t;
}

ReceiverStats Endpoint::receiver_totals() const {
  ReceiverStats t;
  for (const ReceiverChannel* r : receiver_order_) {
    const ReceiverStats& x = r->stats();
    t.records += x.records;
    t.chunks_done += x.chunks_done;
    t.splices += x.splices;
    t.faults += x.faults;
  }
  return t;
}

}  // namespace rivet::messenger
