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

#include "rivet/regmem/circular_allocator.hpp"

#include <algorithm>
#include <string>

#include "rivet/common/error.hpp"

namespace rivet::mem {

CircularAllocator::CircularAllocator(ZoneArena& arena, const RingConfig& config)
    : arena_(arena), config_(config) {
  if (config_.initial_units == 0 || config_.max_units < config_.initial_units) {
    throw Error(Errc::kInvalidArgument, "ring needs 1 <= initial_units <= max_units");
  }
  for (uint32_t i = 0; i < config_.initial_units; ++i) ring_.push_back(make_unit());
}

std::unique_ptr<CircularAllocator::Unit> CircularAllocator::make_unit() {
  auto unit = std::make_unique<Unit>();
  unit->tag = std::make_unique<RecycleTag>();
  unit->memory = arena_.allocate(config_.unit_size);
  unit->memory.set_tag(unit->tag.get());
  return unit;
}

std::optional<RegisteredMemory> CircularAllocator::allocate() {
  owner_.check("circular allocator");
  Unit& next = *ring_[cursor_];
  if (next.tag->reusable()) {
    next.tag->clear();
    cursor_ = (cursor_ + 1) % ring_.size();
    return next.memory;
  }
  size_t grow = 0;
  const size_t room = config_.max_units - ring_.size();
  switch (config_.growth) {
    case Growth::kNone: grow = 0; break;
    case Growth::kLinear: grow = config_.initial_units; break;
    case Growth::kExponential: grow = ring_.size(); break;
  }
  grow = std::min(grow, room);
  if (grow == 0) {
    ++would_block_;
    return std::nullopt;
  }
  // New units go in front of the blocked one so the existing cyclic order is
  // untouched.
  std::vector<std::unique_ptr<Unit>> fresh;
  for (size_t i = 0; i < grow; ++i) fresh.push_back(make_unit());
  ring_.insert(ring_.begin() + static_cast<std::ptrdiff_t>(cursor_),
               std::make_move_iterator(fresh.begin()),
               std::make_move_iterator(fresh.end()));
  Unit& unit = *ring_[cursor_];
  cursor_ = (cursor_ + 1) % ring_.size();
  return unit.memory;
}

std::optional<RegisteredMemory> LinearCircularAllocator::allocate(uint64_t length) {
  if (length > ring_.unit_size()) {
    throw Error(Errc::kTooLarge, "segment of " + std::to_string(length) +
                                     " bytes exceeds unit size " +
                                     std::to_string(ring_.unit_size()));
  }
  if (!current_.valid() || used_ + length > current_.length()) {
    auto unit = ring_.allocate();
    if (!unit) return std::nullopt;
    current_ = *unit;
    used_ = 0;
  }
  RegisteredMemory segment = current_.slice(used_, length);
  used_ += length;
  return segment;
}

}  // namespace rivet::mem
