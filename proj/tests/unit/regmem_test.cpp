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

#include <gtest/gtest.h>

#include <atomic>
#include <set>

#include "rivet/common/error.hpp"
#include "rivet/regmem/circular_allocator.hpp"
#include "rivet/regmem/general_allocator.hpp"
#include "rivet/regmem/zone_arena.hpp"
#include "rivet/verbs/device.hpp"

namespace rivet::mem {
namespace {

struct Fixture {
  verbs::Network net;
  verbs::Machine& machine = net.machine(net.add_machine());
};

TEST(ZoneArena, BlocksAreDisjoint) {
  Fixture f;
  ZoneArena arena(f.machine, 0);
  const RegisteredMemory a = arena.allocate(4096);
  const RegisteredMemory b = arena.allocate(4096);
  const bool same_region = a.region() == b.region();
  if (same_region) {
    EXPECT_TRUE(a.offset() + a.length() <= b.offset() || b.offset() + b.length() <= a.offset());
  }
  EXPECT_EQ(a.offset() % ZoneArena::kAlignment, 0u);
  EXPECT_EQ(b.offset() % ZoneArena::kAlignment, 0u);
}

TEST(ZoneArena, RejectsBlockLargerThanSlab) {
  Fixture f;
  ZoneArena arena(f.machine, 0, {1u << 20, 0});
  EXPECT_THROW(arena.allocate((1u << 20) + 1), Error);
}

TEST(ZoneArena, ThousandSmallBlocksShareOneSlab) {
  Fixture f;
  ZoneArena arena(f.machine, 0, {1u << 20, 0});
  for (int i = 0; i < 1024; ++i) arena.allocate(1024);
  EXPECT_EQ(arena.slab_count(), 1u);
  EXPECT_EQ(f.machine.registration_count(), 1u);
}

TEST(ZoneArena, ReleasedBlockIsReused) {
  Fixture f;
  ZoneArena arena(f.machine, 0);
  const RegisteredMemory a = arena.allocate(512);
  arena.release(a);
  const RegisteredMemory b = arena.allocate(512);
  EXPECT_EQ(a.region(), b.region());
  EXPECT_EQ(a.offset(), b.offset());
}

TEST(CircularAllocator, HandsOutUnitsInRingOrder) {
  Fixture f;
  ZoneArena arena(f.machine, 0);
  CircularAllocator ring(arena, {4096, 4, Growth::kNone, 4});
  std::vector<uint64_t> offsets;
  std::vector<const verbs::MemoryRegion*> regions;
  for (int i = 0; i < 5; ++i) {
    auto m = ring.allocate();
    ASSERT_TRUE(m.has_value());
    offsets.push_back(m->offset());
    regions.push_back(m->region());
  }
  for (int i = 0; i < 4; ++i) {
    EXPECT_EQ(offsets[i], ring.unit(i).offset());
    EXPECT_EQ(regions[i], ring.unit(i).region());
  }
  EXPECT_EQ(offsets[4], offsets[0]);
  EXPECT_EQ(regions[4], regions[0]);
}

TEST(CircularAllocator, TaggedUnitsWaitForTheFlushNumber) {
  Fixture f;
  ZoneArena arena(f.machine, 0);
  CircularAllocator ring(arena, {4096, 4, Growth::kNone, 4});
  std::atomic<uint64_t> flush{5};
  for (int i = 0; i < 4; ++i) {
    auto m = ring.allocate();
    ASSERT_TRUE(m.has_value());
    ASSERT_NE(m->tag(), nullptr);
    m->tag()->mark(1, &flush, 5);
  }
  EXPECT_FALSE(ring.allocate().has_value());
  EXPECT_EQ(ring.would_block_count(), 1u);
  flush.store(6);
  auto m = ring.allocate();
  ASSERT_TRUE(m.has_value());
  EXPECT_EQ(m->offset(), ring.unit(0).offset());
  EXPECT_EQ(m->region(), ring.unit(0).region());
}

TEST(CircularAllocator, GrowsWhenAllowed) {
  Fixture f;
  ZoneArena arena(f.machine, 0);
  CircularAllocator ring(arena, {4096, 2, Growth::kExponential, 8});
  std::atomic<uint64_t> flush{0};
  for (int i = 0; i < 8; ++i) {
    auto m = ring.allocate();
    ASSERT_TRUE(m.has_value()) << i;
    m->tag()->mark(1, &flush, 0);
  }
  EXPECT_EQ(ring.size(), 8u);
  EXPECT_FALSE(ring.allocate().has_value());
}

TEST(RecycleTag, NeedsEveryQueuePairToPass) {
  std::atomic<uint64_t> a{3}, b{1};
  RecycleTag tag;
  EXPECT_TRUE(tag.reusable());
  tag.mark(1, &a, 2);
  tag.mark(2, &b, 1);
  EXPECT_FALSE(tag.reusable());
  b.store(2);
  EXPECT_TRUE(tag.reusable());
  tag.mark(1, &a, 3);
  EXPECT_FALSE(tag.reusable());
  EXPECT_EQ(tag.entries().size(), 2u);
}

TEST(LinearCircularAllocator, PacksThenSpills) {
  Fixture f;
  ZoneArena arena(f.machine, 0);
  CircularAllocator ring(arena, {4096, 4, Growth::kNone, 4});
  LinearCircularAllocator lin(ring);
  const uint64_t base = ring.unit(0).offset();
  for (uint64_t want : {0u, 1000u, 2000u}) {
    auto m = lin.allocate(1000);
    ASSERT_TRUE(m.has_value());
    EXPECT_EQ(m->region(), ring.unit(0).region());
    EXPECT_EQ(m->offset() - base, want);
  }
  auto spill = lin.allocate(2000);
  ASSERT_TRUE(spill.has_value());
  EXPECT_EQ(spill->offset(), ring.unit(1).offset());
  EXPECT_EQ(spill->region(), ring.unit(1).region());
  EXPECT_THROW(lin.allocate(5000), Error);
}

TEST(GeneralAllocator, ReusesFreedBlock) {
  Fixture f;
  ZoneArena arena(f.machine, 0);
  GeneralAllocator gen(arena, 1u << 20);
  const RegisteredMemory a = gen.allocate(100);
  gen.free(a);
  const RegisteredMemory b = gen.allocate(100);
  EXPECT_EQ(a.region(), b.region());
  EXPECT_EQ(a.offset(), b.offset());
  EXPECT_EQ(gen.bytes_in_use(), 104u);
}

TEST(GeneralAllocator, CoalescesNeighbours) {
  Fixture f;
  ZoneArena arena(f.machine, 0);
  GeneralAllocator gen(arena, 1u << 20);
  const RegisteredMemory a = gen.allocate(100);
  const RegisteredMemory b = gen.allocate(200);
  const RegisteredMemory c = gen.allocate(64);  // keeps the tail of the chunk apart
  gen.free(a);
  gen.free(b);
  const RegisteredMemory d = gen.allocate(300);
  EXPECT_EQ(d.region(), a.region());
  EXPECT_EQ(d.offset(), a.offset());
  gen.free(c);
  gen.free(d);
  EXPECT_EQ(gen.bytes_in_use(), 0u);
}

TEST(GeneralAllocator, EnforcesCap) {
  Fixture f;
  ZoneArena arena(f.machine, 0);
  GeneralAllocator gen(arena, 4096);
  EXPECT_THROW(gen.allocate(8192), Error);
  EXPECT_FALSE(gen.try_allocate(8192).has_value());
  EXPECT_THROW(gen.allocate(0), Error);
}

}  // namespace
}  // namespace rivet::mem
