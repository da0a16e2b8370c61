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
#include <cstring>
#include <mutex>
#include <thread>
#include <vector>

#include "rivet/aggregator/aggregator.hpp"
#include "rivet/fabric/invoker.hpp"
#include "rivet/fabric/system.hpp"
#include "rivet/messenger/channel.hpp"

namespace rivet::fabric {
namespace {

constexpr uint64_t kRecord = 10;

SystemConfig small(uint32_t m, uint32_t p, uint32_t t) {
  SystemConfig c;
  c.machines = m;
  c.processes_per_machine = p;
  c.threads_per_process = t;
  c.chunk_size = 8192;
  c.finalize_timeout_ms = 60000;
  return c;
}

struct Log {
  std::mutex mu;
  std::vector<std::vector<uint64_t>> seen;  // [dest] -> values from every source
};

TEST(Fabric, CallOverEachPathRunsOnDestination) {
  for (PathKind path : {PathKind::kSend, PathKind::kWrite, PathKind::kAggregated}) {
    System sys(small(1, 2, 2));
    const uint32_t n = sys.thread_count();
    std::vector<std::atomic<uint64_t>> sum(n);
    sys.registry().add(kRecord, [&](Invocation& inv) {
      sum[inv.self->flat()] += inv.context_as<uint64_t>();
    });
    sys.run([&](ThreadContext& ctx) {
      Invoker& inv = ctx.invoker(path);
      for (uint32_t d = 0; d < n; ++d) {
        for (uint64_t i = 1; i <= 100; ++i) {
          inv.retry([&] { return inv.call(d, kRecord, bytes_of(i)); });
        }
      }
      inv.flush();
    });
    for (uint32_t d = 0; d < n; ++d) EXPECT_EQ(sum[d].load(), n * 5050u) << to_string(path);
    EXPECT_EQ(sys.submitted(), sys.invoked());
  }
}

TEST(Fabric, PerPairOrderIsFifo) {
  System sys(small(2, 1, 2));
  const uint32_t n = sys.thread_count();
  std::vector<std::vector<uint64_t>> last(n, std::vector<uint64_t>(n, 0));
  std::atomic<int> violations{0};
  sys.registry().add(kRecord, [&](Invocation& inv) {
    const uint64_t v = inv.context_as<uint64_t>();
    uint64_t& prev = last[inv.self->flat()][inv.source.flat];
    if (v != prev + 1) ++violations;
    prev = v;
  });
  sys.run([&](ThreadContext& ctx) {
    for (uint64_t i = 1; i <= 2000; ++i) {
      for (uint32_t d = 0; d < n; ++d) {
        Invoker& inv = ctx.via_write();
        inv.retry([&] { return inv.call(d, kRecord, bytes_of(i)); });
      }
    }
  });
  EXPECT_EQ(violations.load(), 0);
  for (uint32_t d = 0; d < n; ++d) {
    for (uint32_t s = 0; s < n; ++s) EXPECT_EQ(last[d][s], 2000u);
  }
}

TEST(Fabric, ConsumeSynchronizerBalances) {
  System sys(small(1, 2, 2));
  std::atomic<uint64_t> runs{0};
  sys.registry().add(kRecord, [&](Invocation&) { ++runs; });
  sys.run([&](ThreadContext& ctx) {
    Synchronizer sync(NotifyMode::kOnRemoteConsume);
    for (uint32_t d = 0; d < ctx.system().thread_count(); ++d) {
      ctx.via_send().retry([&] { return ctx.via_send().call(d, kRecord, {}, &sync); });
    }
    ASSERT_TRUE(ctx.wait(sync));
    EXPECT_EQ(sync.increments(), ctx.system().thread_count());
    EXPECT_EQ(sync.decrements(), sync.increments());
  });
  EXPECT_EQ(runs.load(), 16u);
}

TEST(Fabric, InitThreadRejectsReuseAndOverflow) {
  System sys(small(1, 1, 2));
  sys.init_thread(0);
  EXPECT_THROW(sys.init_thread(0), Error);
  EXPECT_THROW(sys.init_thread(2), Error);
}

TEST(Fabric, RegistryFreezesOnFirstCall) {
  System sys(small(1, 1, 1));
  sys.registry().add(kRecord, [](Invocation&) {});
  EXPECT_THROW(sys.registry().add(kRecord, [](Invocation&) {}), Error);
  ThreadContext& ctx = sys.init_thread(0);
  ASSERT_TRUE(ctx.via_send().call(0, kRecord, {}));
  EXPECT_THROW(sys.registry().add(kRecord + 1, [](Invocation&) {}), Error);
  sys.finalize_thread(ctx);
}

TEST(Fabric, WritePathRejectsContextBeyondChunk) {
  System sys(small(2, 1, 1));
  sys.registry().add(kRecord, [](Invocation&) {});
  ThreadContext& ctx = sys.init_thread(0);
  const std::vector<std::byte> big(8192);
  try {
    ctx.via_write().call(1, kRecord, big);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kTooLarge);
  }
  std::thread other([&] { sys.finalize_thread(sys.init_thread(1)); });
  sys.finalize_thread(ctx);
  other.join();
}

TEST(Fabric, CallReturnWritesResultBeforeNotifying) {
  constexpr uint64_t kAnswer = kRecord + 1;
  for (PathKind path : {PathKind::kSend, PathKind::kWrite, PathKind::kAggregated}) {
    System sys(small(2, 1, 1));
    sys.registry().add(kAnswer, [](Invocation& inv) {
      const uint64_t v = 42;
      const auto b = bytes_of(v);
      inv.result->assign(b.begin(), b.end());
    });
    uint64_t seen = 0, failures = 1;
    sys.run([&](ThreadContext& ctx) {
      if (ctx.flat() != 0) return;
      mem::RegisteredMemory origin = ctx.process().arena().allocate(8);
      std::memset(origin.data(), 0, 8);
      Synchronizer sync(NotifyMode::kOnRemoteConsume);
      Invoker& inv = ctx.invoker(path);
      inv.retry([&] { return inv.call_return(1, kAnswer, {}, origin.locator(), &sync); });
      ASSERT_TRUE(ctx.wait(sync));
      std::memcpy(&seen, origin.data(), 8);
      failures = sync.failures();
    });
    EXPECT_EQ(seen, 42u) << to_string(path);
    EXPECT_EQ(failures, 0u) << to_string(path);
  }
}

TEST(Fabric, CallReturnToBadOriginReportsFailure) {
  constexpr uint64_t kAnswer = kRecord + 1;
  System sys(small(2, 1, 1));
  sys.registry().add(kAnswer, [](Invocation& inv) { inv.result->assign(8, std::byte{1}); });
  uint64_t failures = 0, decrements = 0;
  sys.run([&](ThreadContext& ctx) {
    if (ctx.flat() != 0) return;
    Synchronizer sync(NotifyMode::kOnRemoteConsume);
    const mem::RemoteLocator bogus{ctx.process().machine(), 0xFFFF, 0, 8};
    Invoker& inv = ctx.via_send();
    inv.retry([&] { return inv.call_return(1, kAnswer, {}, bogus, &sync); });
    ASSERT_TRUE(ctx.wait(sync));
    failures = sync.failures();
    decrements = sync.decrements();
  });
  EXPECT_EQ(failures, 1u);
  EXPECT_EQ(decrements, 1u);
}

TEST(Fabric, BroadcastSourceIsTheRoot) {
  System sys(small(2, 2, 2));
  const uint32_t n = sys.thread_count();
  std::vector<std::atomic<int>> hits(n);
  std::atomic<int> wrong_source{0};
  sys.registry().add(kRecord, [&](Invocation& inv) {
    ++hits[inv.self->flat()];
    if (inv.source.flat != 3) ++wrong_source;
  });
  sys.run([&](ThreadContext& ctx) {
    if (ctx.flat() != 3) return;
    Synchronizer sync(NotifyMode::kOnRemoteConsume);
    Invoker& inv = ctx.via_write();
    inv.retry([&] { return inv.broadcast(kRecord, {}, &sync); });
    ASSERT_TRUE(ctx.wait(sync));
    EXPECT_EQ(sync.increments(), n);
  });
  for (uint32_t t = 0; t < n; ++t) EXPECT_EQ(hits[t].load(), 1) << t;
  EXPECT_EQ(wrong_source.load(), 0);
}

TEST(Fabric, BroadcastOnOneThreadRunsOnce) {
  System sys(small(1, 1, 1));
  std::atomic<int> hits{0};
  sys.registry().add(kRecord, [&](Invocation&) { ++hits; });
  uint64_t increments = 0, decrements = 0;
  sys.run([&](ThreadContext& ctx) {
    Synchronizer sync(NotifyMode::kOnRemoteConsume);
    Invoker& inv = ctx.via_send();
    inv.retry([&] { return inv.broadcast(kRecord, {}, &sync); });
    ASSERT_TRUE(ctx.wait(sync));
    increments = sync.increments();
    decrements = sync.decrements();
  });
  EXPECT_EQ(hits.load(), 1);
  EXPECT_EQ(increments, 1u);
  EXPECT_EQ(decrements, 1u);
  EXPECT_EQ(sys.submitted(), sys.invoked());
}

TEST(Fabric, StreamBackendDeliversOnEveryPath) {
  for (PathKind path : {PathKind::kSend, PathKind::kWrite, PathKind::kAggregated}) {
    SystemConfig cfg = small(2, 1, 1);
    cfg.backend = verbs::Backend::kStream;
    System sys(cfg);
    std::atomic<uint64_t> sum{0};
    sys.registry().add(kRecord, [&](Invocation& inv) { sum += inv.context_as<uint64_t>(); });
    sys.run([&](ThreadContext& ctx) {
      if (ctx.flat() != 0) return;
      Invoker& inv = ctx.invoker(path);
      for (uint64_t i = 1; i <= 200; ++i) {
        inv.retry([&] { return inv.call(1, kRecord, bytes_of(i)); });
      }
      inv.flush();
    });
    EXPECT_EQ(sum.load(), 20100u) << to_string(path);
  }
}

}  // namespace
}  // namespace rivet::fabric
