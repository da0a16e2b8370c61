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

#include <cstdint>
#include <deque>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "rivet/common/mpsc_queue.hpp"
#include "rivet/common/synchronizer.hpp"
#include "rivet/regmem/registered_memory.hpp"

namespace rivet::fabric {
class ThreadContext;
}

namespace rivet::messenger {

// Chunk header, 64 bytes at the start of every chunk.
inline constexpr uint64_t kHeaderBytes = 64;
inline constexpr uint64_t kSetupProducerId = 0;
inline constexpr uint64_t kSetupWriteBack = 8;    // machine u32, region u32
inline constexpr uint64_t kSetupWriteBackOffset = 16;
inline constexpr uint64_t kProducerFirst = 24;
inline constexpr uint64_t kProducerLast = 32;
inline constexpr uint64_t kProducerControl = 40;
inline constexpr uint64_t kConsumerOffset = 48;

// Producer control word.
inline constexpr uint64_t kClosedBit = 1ull << 63;
inline constexpr uint64_t kLapMask = (1ull << 40) - 1;

constexpr uint64_t make_control(uint64_t first, uint32_t grow, uint32_t splice) {
  return kClosedBit | (first & kLapMask) | (uint64_t{grow & 0xff} << 40) |
         (uint64_t{splice & 0xff} << 48);
}
constexpr bool control_closed(uint64_t w) { return (w & kClosedBit) != 0; }
constexpr uint64_t control_lap(uint64_t w) { return w & kLapMask; }
constexpr uint32_t control_grow(uint64_t w) { return (w >> 40) & 0xff; }
constexpr uint32_t control_splice(uint64_t w) { return (w >> 48) & 0xff; }

// Chunks granted to a receiver by its process's service thread.
struct ChunkGrant {
  uint32_t sender = 0;
  bool initial = false;
  mem::RemoteLocator write_back;  // sender's consumed word, initial only
  std::vector<mem::RegisteredMemory> chunks;
};

struct SenderStats {
  uint64_t records = 0;    // transfers accepted
  uint64_t bytes = 0;
  uint64_t chunks_closed = 0;
  uint64_t grows = 0;
  uint64_t rejected = 0;   // full-channel refusals
  uint64_t pulls = 0;      // consumed-offset reads
};

// Producer side of a one-sided channel into one destination thread. Single
// owner. Chunks form a ring; a chunk is reused only after the receiver has
// pushed a consumed offset covering its previous lap.
class SenderChannel {
 public:
  SenderChannel(fabric::ThreadContext& self, uint32_t dest);
  ~SenderChannel();
  SenderChannel(const SenderChannel&) = delete;
  SenderChannel& operator=(const SenderChannel&) = delete;

  uint32_t dest() const { return dest_; }
  uint64_t capacity() const { return capacity_; }

  // True iff send() of `length` bytes would be accepted now.
  bool would_accept(uint64_t length);
  // Writes one or more whole records. False, with no state change, when the
  // ring is full and cannot grow.
  bool send(const mem::RegisteredMemory& bytes,
            std::span<Synchronizer* const> syncs = {});
  // Sends the shutdown record; false when the channel is full.
  bool shutdown();
  bool is_shut_down() const { return shut_down_; }

  uint64_t produced() const { return lap_first_ + fill_; }
  uint64_t pushed_consumed() const;
  size_t ring_size() const { return ring_.size(); }
  const SenderStats& stats() const { return stats_; }

 private:
  bool slot_free(size_t slot) const;
  bool advance();
  void grow(uint32_t count);
  void close_current(uint32_t grow, uint32_t splice);
  void maybe_pull();
  std::vector<mem::RemoteLocator> request_chunks(uint32_t count, bool initial);

  fabric::ThreadContext& self_;
  uint32_t dest_;
  uint64_t chunk_size_;
  uint64_t capacity_;
  uint32_t c_;
  uint32_t c_max_;

  std::vector<mem::RemoteLocator> ring_;
  std::vector<uint64_t> lap_end_;
  size_t cur_ = 0;
  uint64_t lap_first_ = 0;
  uint64_t fill_ = 0;
  uint64_t pulled_ = 0;
  mem::RegisteredMemory consumed_word_;
  bool shut_down_ = false;
  SenderStats stats_;
};

struct ReceiverStats {
  uint64_t records = 0;
  uint64_t chunks_done = 0;
  uint64_t splices = 0;
  uint64_t faults = 0;
};

// Consumer side of one channel. Single owner (the destination thread).
class ReceiverChannel {
 public:
  ReceiverChannel(fabric::ThreadContext& self, ChunkGrant grant);

  uint32_t source() const { return source_; }
  // Runs up to `budget` ready records in order.
  size_t poll(size_t budget);
  void add_spare(std::vector<mem::RegisteredMemory> chunks);

  bool closed() const { return closed_; }
  bool faulted() const { return faulted_; }
  uint64_t consumed() const { return lap_first_ + pos_; }
  size_t ring_size() const { return ring_.size(); }
  const ReceiverStats& stats() const { return stats_; }

 private:
  void finish_chunk(uint64_t last, uint64_t control);
  void push_consumed(uint64_t last);

  fabric::ThreadContext& self_;
  uint32_t source_;
  uint64_t capacity_;
  std::vector<mem::RegisteredMemory> ring_;
  std::deque<mem::RegisteredMemory> spare_;
  mem::RemoteLocator write_back_;
  size_t cur_ = 0;
  uint64_t lap_first_ = 0;
  uint64_t pos_ = 0;
  bool closed_ = false;
  bool faulted_ = false;
  ReceiverStats stats_;
};

// All channels of one worker thread.
class Endpoint {
 public:
  explicit Endpoint(fabric::ThreadContext& self);
  ~Endpoint();

  // Channel to `dest`, created (with its initial chunks) on first use.
  SenderChannel& sender(uint32_t dest);
  SenderChannel* find_sender(uint32_t dest);
  ReceiverChannel* receiver(uint32_t source);

  // Drains new chunk grants, then runs ready records across incoming
  // channels.
  size_t poll(size_t budget);

  // Queues shutdown records on every outgoing channel; retried by poll().
  void shutdown_all();
  bool shutdown_sent() const;
  // Every channel opened towards this thread has delivered its shutdown.
  bool all_incoming_closed() const;

  size_t sender_count() const { return senders_.size(); }
  size_t receiver_count() const { return receivers_.size(); }
  SenderStats sender_totals() const;
  ReceiverStats receiver_totals() const;

  MpscQueue<ChunkGrant>& grants() { return grants_; }
  // Waits until grants of `source` are available; used while splicing.
  void drain_grants();

 private:
  fabric::ThreadContext& self_;
  std::unordered_map<uint32_t, std::unique_ptr<SenderChannel>> senders_;
  std::vector<SenderChannel*> sender_order_;
  std::unordered_map<uint32_t, std::unique_ptr<ReceiverChannel>> receivers_;
  std::vector<ReceiverChannel*> receiver_order_;
  size_t next_receiver_ = 0;
  bool shutting_down_ = false;
  MpscQueue<ChunkGrant> grants_;
};

}  // namespace rivet::messenger
