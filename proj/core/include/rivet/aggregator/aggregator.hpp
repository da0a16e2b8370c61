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

#include <chrono>
#include <cstdint>
#include <deque>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "rivet/common/synchronizer.hpp"
#include "rivet/fabric/config.hpp"
#include "rivet/fabric/serialized_call.hpp"
#include "rivet/regmem/registered_memory.hpp"

namespace rivet::fabric {
class ThreadContext;
}

namespace rivet::aggregator {

struct Stats {
  uint64_t records = 0;        // calls accepted
  uint64_t record_bytes = 0;
  uint64_t transfers = 0;      // channel writes carrying aggregated bytes
  uint64_t flushes = 0;        // explicit flush() calls that moved data
  uint64_t exceeding = 0;      // blocks parked behind a full channel
  uint64_t exceeding_peak_bytes = 0;
  uint64_t rejected = 0;
};

// Per-thread batching front end over the one-sided channels.
//
// kTrad stages records per destination in a block of agg_flush_bytes and
// ships the block as one channel write when the next record would overflow
// it (or on flush). kOvfl writes each record straight into the channel when
// it fits and otherwise parks it, serialized once, in an exceeding block.
// Parked data for a destination always goes out before newer records.
class Aggregator {
 public:
  explicit Aggregator(fabric::ThreadContext& self);
  ~Aggregator();
  Aggregator(const Aggregator&) = delete;
  Aggregator& operator=(const Aggregator&) = delete;

  fabric::AggMode mode() const { return mode_; }

  // False, with nothing staged, when the exceeding cap is reached.
  bool call(uint32_t dest, uint64_t fn, const fabric::ContextParts& context,
            const std::span<const std::byte>* payload,
            std::span<Synchronizer* const> syncs);

  void flush(uint32_t dest);
  void flush_all();
  // Drains parked blocks and applies the idle-flush timer.
  void tick();
  // Nothing staged or parked.
  bool idle() const;

  const Stats& stats() const { return stats_; }
  uint64_t exceeding_bytes() const { return exceeding_bytes_; }

 private:
  struct Block {
    mem::RegisteredMemory memory;
    std::unique_ptr<mem::RecycleTag> tag;
    uint64_t used = 0;
    std::vector<Synchronizer*> syncs;
  };
  struct Dest {
    std::unique_ptr<Block> staging;
    std::deque<std::unique_ptr<Block>> exceeding;
    std::chrono::steady_clock::time_point staged_at;
  };

  Dest& dest(uint32_t id);
  std::unique_ptr<Block> new_block(uint64_t length);
  void retire(std::unique_ptr<Block> block);
  // Ships parked blocks in order; true when none remain.
  bool drain(uint32_t id, Dest& d);
  // Ships (or parks) the staging block.
  void ship_staging(uint32_t id, Dest& d);
  bool transfer(uint32_t id, Block& block);
  bool call_trad(uint32_t dest, uint64_t fn, const fabric::ContextParts& context,
                 const std::span<const std::byte>* payload,
                 std::span<Synchronizer* const> syncs, uint64_t size);
  bool call_ovfl(uint32_t dest, uint64_t fn, const fabric::ContextParts& context,
                 const std::span<const std::byte>* payload,
                 std::span<Synchronizer* const> syncs, uint64_t size);
  bool park(Dest& d, uint64_t fn, const fabric::ContextParts& context,
            const std::span<const std::byte>* payload,
            std::span<Synchronizer* const> syncs, uint64_t size);

  fabric::ThreadContext& self_;
  fabric::AggMode mode_;
  uint64_t threshold_;
  uint64_t exceed_cap_;
  std::chrono::microseconds idle_flush_;
  std::unordered_map<uint32_t, Dest> dests_;
  std::vector<uint32_t> dest_order_;
  std::deque<std::unique_ptr<Block>> in_flight_;
  std::vector<std::unique_ptr<Block>> pool_;
  uint64_t exceeding_bytes_ = 0;
  Stats stats_;
};

}  // namespace rivet::aggregator
