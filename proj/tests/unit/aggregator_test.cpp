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
#include <random>
#include <thread>

#include "rivet/aggregator/aggregator.hpp"
#include "rivet/fabric/invoker.hpp"
#include "rivet/fabric/system.hpp"

namespace rivet::aggregator {
namespace {

constexpr uint64_t kSeq = 31;

struct Ctx {
  uint64_t seq;
  uint64_t pad[4];
};
static_assert(fabric::serialized_size(sizeof(Ctx), false, 0) == 64);

fabric::SystemConfig agg_config(fabric::AggMode mode) {
  fabric::SystemConfig c;
  c.machines = 2;
  c.agg_mode = mode;
  c.agg_flush_bytes = 4096;
  c.finalize_timeout_ms = 60000;
  return c;
}

struct Order {
  std::atomic<uint64_t> next{1};
  std::atomic<uint64_t> bad{0};

  void add(fabric::System& sys) {
    sys.registry().add(kSeq, [this](fabric::Invocation& inv) {
      const uint64_t s = inv.context_as<Ctx>().seq;
      if (s != next.load()) ++bad;
      next.store(s + 1);
    });
  }
  uint64_t received() const { return next.load() - 1; }
};

TEST(Aggregator, TradFullBlockIsOneTransfer) {
  fabric::System sys(agg_config(fabric::AggMode::kTrad));
  Order order;
  order.add(sys);
  Stats stats;
  sys.run([&](fabric::ThreadContext& ctx) {
    if (ctx.flat() == 0) {
      fabric::Invoker& inv = ctx.via_aggregator();
      for (uint64_t s = 1; s <= 64; ++s) {
        const Ctx c{s, {}};
        ASSERT_TRUE(inv.call(1, kSeq, fabric::bytes_of(c)));
      }
      // A block filled to the threshold ships without waiting for a flush.
      EXPECT_EQ(ctx.aggregator().stats().transfers, 1u);
      inv.flush();
      stats = ctx.aggregator().stats();
      return;
    }
    while (order.received() < 64) {
      if (ctx.poll() == 0) std::this_thread::yield();
    }
  });
  EXPECT_EQ(stats.records, 64u);
  EXPECT_EQ(stats.record_bytes, 64u * 64);
  EXPECT_EQ(stats.transfers, 1u);
  EXPECT_EQ(order.bad.load(), 0u);
}

TEST(Aggregator, OvflWritesEachRecordWhenReceiverKeepsUp) {
  fabric::System sys(agg_config(fabric::AggMode::kOvfl));
  Order order;
  order.add(sys);
  Stats stats;
  sys.run([&](fabric::ThreadContext& ctx) {
    if (ctx.flat() == 0) {
      fabric::Invoker& inv = ctx.via_aggregator();
      for (uint64_t s = 1; s <= 500; ++s) {
        const Ctx c{s, {}};
        inv.retry([&] { return inv.call(1, kSeq, fabric::bytes_of(c)); });
      }
      inv.flush();
      stats = ctx.aggregator().stats();
      return;
    }
    while (order.received() < 500) {
      if (ctx.poll() == 0) std::this_thread::yield();
    }
  });
  EXPECT_EQ(stats.records, 500u);
  EXPECT_EQ(stats.transfers, 500u);
  EXPECT_EQ(stats.exceeding, 0u);
  EXPECT_EQ(order.bad.load(), 0u);
}

TEST(Aggregator, OvflRefusesPastExceedingCap) {
  fabric::SystemConfig cfg = agg_config(fabric::AggMode::kOvfl);
  cfg.agg_exceed_cap = 1u << 20;
  fabric::System sys(cfg);
  Order order;
  order.add(sys);
  std::atomic<bool> release{false};
  std::atomic<uint64_t> accepted{0};
  uint64_t parked_peak = 0;
  sys.run([&](fabric::ThreadContext& ctx) {
    if (ctx.flat() == 0) {
      Aggregator& agg = ctx.aggregator();
      fabric::Invoker& inv = ctx.via_aggregator();
      uint64_t s = 1;
      for (;; ++s) {
        const Ctx c{s, {}};
        if (!inv.call(1, kSeq, fabric::bytes_of(c))) break;
      }
      parked_peak = agg.exceeding_bytes();
      EXPECT_GT(agg.stats().rejected, 0u);
      accepted = s - 1;
      release = true;
      while (order.received() < accepted) {
        ctx.poll();
        std::this_thread::yield();
      }
      EXPECT_TRUE(agg.idle());
      return;
    }
    while (!release) std::this_thread::yield();
    while (order.received() < accepted) {
      if (ctx.poll() == 0) std::this_thread::yield();
    }
  });
  EXPECT_GT(parked_peak, 0u);
  EXPECT_LE(parked_peak, 1u << 20);
  EXPECT_EQ(order.received(), accepted.load());
  EXPECT_EQ(order.bad.load(), 0u);
}

TEST(Aggregator, FlushWithNothingStagedMovesNothing) {
  for (fabric::AggMode mode : {fabric::AggMode::kTrad, fabric::AggMode::kOvfl}) {
    fabric::System sys(agg_config(mode));
    Stats stats;
    bool idle = false;
    sys.run([&](fabric::ThreadContext& ctx) {
      if (ctx.flat() != 0) return;
      Aggregator& agg = ctx.aggregator();
      agg.flush_all();
      agg.flush(1);
      stats = agg.stats();
      idle = agg.idle();
    });
    EXPECT_EQ(stats.transfers, 0u);
    EXPECT_EQ(stats.flushes, 0u);
    EXPECT_TRUE(idle);
  }
}

TEST(Aggregator, RandomFlushesKeepOrder) {
  for (fabric::AggMode mode : {fabric::AggMode::kTrad, fabric::AggMode::kOvfl}) {
    constexpr uint64_t kCount = 20000;
    fabric::System sys(agg_config(mode));
    Order order;
    order.add(sys);
    sys.run([&](fabric::ThreadContext& ctx) {
      if (ctx.flat() == 0) {
        std::mt19937_64 rng(5);
        fabric::Invoker& inv = ctx.via_aggregator();
        for (uint64_t s = 1; s <= kCount; ++s) {
          const Ctx c{s, {}};
          inv.retry([&] { return inv.call(1, kSeq, fabric::bytes_of(c)); });
          if (rng() % 37 == 0) inv.flush();
        }
        inv.flush();
        return;
      }
      std::mt19937_64 rng(9);
      while (order.received() < kCount) {
        if (rng() % 512 == 0) std::this_thread::sleep_for(std::chrono::microseconds(200));
        if (ctx.poll() == 0) std::this_thread::yield();
      }
    });
    EXPECT_EQ(order.received(), kCount);
    EXPECT_EQ(order.bad.load(), 0u);
  }
}

}  // namespace
}  // namespace rivet::aggregator
