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

#include "rivet/aggregator/aggregator.hpp"

#include <algorithm>

#include "rivet/common/error.hpp"
#include "rivet/fabric/system.hpp"
#include "rivet/messenger/channel.hpp"

namespace rivet::aggregator {

Aggregator::Aggregator(fabric::ThreadContext& self)
    : self_(self),
      mode_(self.system().config().agg_mode),
      threshold_(self.system().config().agg_flush_bytes),
      exceed_cap_(self.system().config().agg_exceed_cap),
      idle_flush_(self.system().config().agg_idle_flush_us) {}

Aggregator::~Aggregator() {
  auto release = [this](std::unique_ptr<Block>& b) {
    if (b && b->memory.valid()) self_.general().free(b->memory);
  };
  for (auto& [id, d] : dests_) {
    release(d.staging);
    for (auto& b : d.exceeding) release(b);
  }
  for (auto& b : in_flight_) release(b);
  for (auto& b : pool_) release(b);
}

Aggregator::Dest& Aggregator::dest(uint32_t id) {
  auto [it, inserted] = dests_.try_emplace(id);
  if (inserted) dest_order_.push_back(id);
  return it->second;
}

std::unique_ptr<Aggregator::Block> Aggregator::new_block(uint64_t length) {
  // Recycle blocks whose last transfer has completed.
  while (!in_flight_.empty() && in_flight_.front()->tag->reusable()) {
    std::unique_ptr<Block> done = std::move(in_flight_.front());
    in_flight_.pop_front();
    if (done->memory.length() == threshold_) {
      done->tag->clear();
      pool_.push_back(std::move(done));
    } else {
      self_.general().free(done->memory);
    }
  }
  if (length == threshold_ && !pool_.empty()) {
    auto b = std::move(pool_.back());
    pool_.pop_back();
    b->used = 0;
    b->syncs.clear();
    return b;
  }
  auto b = std::make_unique<Block>();
  b->tag = std::make_unique<mem::RecycleTag>();
  for (;;) {
    if (auto m = self_.general().try_allocate(length)) {
      b->memory = *m;
      break;
    }
    // Out of staging memory: wait for in-flight blocks to drain.
    if (in_flight_.empty() && pool_.empty()) {
      throw Error(Errc::kOutOfMemory, "aggregator staging memory exhausted");
    }
    if (!pool_.empty()) {
      self_.general().free(pool_.back()->memory);
      pool_.pop_back();
      continue;
    }
    self_.process().flush_transmitters();
    while (!in_flight_.empty() && in_flight_.front()->tag->reusable()) {
      self_.general().free(in_flight_.front()->memory);
      in_flight_.pop_front();
    }
  }
  b->memory.set_tag(b->tag.get());
  return b;
}

void Aggregator::retire(std::unique_ptr<Block> block) {
  in_flight_.push_back(std::move(block));
}

bool Aggregator::transfer(uint32_t id, Block& block) {
  messenger::SenderChannel& ch = self_.messenger().sender(id);
  if (!ch.would_accept(block.used)) return false;
  if (!ch.send(block.memory.slice(0, block.used), block.syncs)) return false;
  ++stats_.transfers;
  return true;
}

bool Aggregator::drain(uint32_t id, Dest& d) {
  while (!d.exceeding.empty()) {
    Block& b = *d.exceeding.front();
    if (!transfer(id, b)) return false;
    exceeding_bytes_ -= b.used;
    retire(std::move(d.exceeding.front()));
    d.exceeding.pop_front();
  }
  return true;
}

void Aggregator::ship_staging(uint32_t id, Dest& d) {
  if (!d.staging || d.staging->used == 0) return;
  if (d.exceeding.empty() && transfer(id, *d.staging)) {
    retire(std::move(d.staging));
    return;
  }
  exceeding_bytes_ += d.staging->used;
  stats_.exceeding_peak_bytes = std::max(stats_.exceeding_peak_bytes, exceeding_bytes_);
  ++stats_.exceeding;
  d.exceeding.push_back(std::move(d.staging));
}

bool Aggregator::call(uint32_t id, uint64_t fn, const fabric::ContextParts& context,
                      const std::span<const std::byte>* payload,
                      std::span<Synchronizer* const> syncs) {
  const uint64_t size = fabric::serialized_size(context.size(), payload != nullptr,
                                                payload ? payload->size() : 0);
  const uint64_t capacity = self_.system().config().chunk_size - messenger::kHeaderBytes;
  if (size > capacity) {
    throw Error(Errc::kTooLarge, "record of " + std::to_string(size) +
                                     " bytes exceeds the chunk capacity");
  }
  const bool ok = mode_ == fabric::AggMode::kTrad
                      ? call_trad(id, fn, context, payload, syncs, size)
                      : call_ovfl(id, fn, context, payload, syncs, size);
  if (ok) {
    ++stats_.records;
    stats_.record_bytes += size;
  } else {
    ++stats_.rejected;
  }
  return ok;
}

bool Aggregator::call_trad(uint32_t id, uint64_t fn, const fabric::ContextParts& context,
                           const std::span<const std::byte>* payload,
                           std::span<Synchronizer* const> syncs, uint64_t size) {
  Dest& d = dest(id);
  drain(id, d);
  if (size > threshold_) {
    // Too big to stage: ship what is staged, then this record on its own.
    ship_staging(id, d);
    if (!park(d, fn, context, payload, syncs, size)) return false;
    drain(id, d);
    return true;
  }
  if (d.staging && d.staging->used + size > threshold_) ship_staging(id, d);
  if (!d.exceeding.empty() && exceeding_bytes_ + threshold_ > exceed_cap_) return false;
  if (!d.staging) {
    d.staging = new_block(threshold_);
    d.staged_at = std::chrono::steady_clock::now();
  }
  Block& b = *d.staging;
  fabric::serialize_ready(b.memory.bytes().subspan(b.used, size), fn, context, payload);
  b.used += size;
  b.syncs.insert(b.syncs.end(), syncs.begin(), syncs.end());
  if (b.used >= threshold_) ship_staging(id, d);
  return true;
}

bool Aggregator::call_ovfl(uint32_t id, uint64_t fn, const fabric::ContextParts& context,
                           const std::span<const std::byte>* payload,
                           std::span<Synchronizer* const> syncs, uint64_t size) {
  Dest& d = dest(id);
  if (drain(id, d)) {
    messenger::SenderChannel& ch = self_.messenger().sender(id);
    if (ch.would_accept(size)) {
      mem::RegisteredMemory rec = self_.scratch(size);
      fabric::serialize_ready(rec.bytes(), fn, context, payload);
      if (ch.send(rec, syncs)) {
        ++stats_.transfers;
        return true;
      }
    }
  }
  return park(d, fn, context, payload, syncs, size);
}

bool Aggregator::park(Dest& d, uint64_t fn, const fabric::ContextParts& context,
                      const std::span<const std::byte>* payload,
                      std::span<Synchronizer* const> syncs, uint64_t size) {
  if (exceeding_bytes_ + size > exceed_cap_) return false;
  auto b = new_block(size);
  fabric::serialize_ready(b->memory.bytes().subspan(0, size), fn, context, payload);
  b->used = size;
  b->syncs.assign(syncs.begin(), syncs.end());
  exceeding_bytes_ += size;
  stats_.exceeding_peak_bytes = std::max(stats_.exceeding_peak_bytes, exceeding_bytes_);
  ++stats_.exceeding;
  d.exceeding.push_back(std::move(b));
  return true;
}

void Aggregator::flush(uint32_t id) {
  auto it = dests_.find(id);
  if (it == dests_.end()) return;
  Dest& d = it->second;
  const bool had = (d.staging && d.staging->used > 0) || !d.exceeding.empty();
  drain(id, d);
  ship_staging(id, d);
  drain(id, d);
  if (had) ++stats_.flushes;
}

void Aggregator::flush_all() {
  for (size_t i = 0; i < dest_order_.size(); ++i) flush(dest_order_[i]);
}

void Aggregator::tick() {
  if (exceeding_bytes_ > 0) {
    for (size_t i = 0; i < dest_order_.size(); ++i) {
      const uint32_t id = dest_order_[i];
      drain(id, dests_[id]);
    }
  }
  if (idle_flush_.count() == 0 || mode_ != fabric::AggMode::kTrad) return;
  const auto now = std::chrono::steady_clock::now();
  for (size_t i = 0; i < dest_order_.size(); ++i) {
    const uint32_t id = dest_order_[i];
    Dest& d = dests_[id];
    if (d.staging && d.staging->used > 0 && now - d.staged_at >= idle_flush_) {
      flush(id);
    }
  }
}

bool Aggregator::idle() const {
  if (exceeding_bytes_ > 0) return false;
  for (const auto& [id, d] : dests_) {
    if (d.staging && d.staging->used > 0) return false;
    if (!d.exceeding.empty()) return false;
  }
  return true;
}

}  // namespace rivet::aggregator
