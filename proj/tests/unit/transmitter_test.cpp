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
#include <thread>
#include <vector>

#include "rivet/common/synchronizer.hpp"
#include "rivet/regmem/registered_memory.hpp"
#include "rivet/transmit/transmitter.hpp"
#include "rivet/verbs/device.hpp"

namespace rivet::transmit {
namespace {

struct Loop {
  explicit Loop(uint32_t u_max, verbs::Execution exec = verbs::Execution::kImmediate)
      : net([exec] {
          verbs::NetworkConfig c;
          c.execution = exec;
          return c;
        }()) {
    const verbs::MachineId a = net.add_machine();
    verbs::ConnectOptions co;
    co.qp.u_max = u_max;
    qp = net.connect(a, a, co).first;
    src = &net.machine(a).register_memory(0, 4096);
    dst = &net.machine(a).register_memory(0, 4096);
    to = {a, dst->id(), 0, 4096};
  }

  mem::RegisteredMemory buffer(uint64_t off, mem::RecycleTag* tag) const {
    return mem::RegisteredMemory(src, off, 64, tag);
  }

  verbs::Network net;
  verbs::QueuePair* qp = nullptr;
  verbs::MemoryRegion* src = nullptr;
  verbs::MemoryRegion* dst = nullptr;
  mem::RemoteLocator to;
};

TEST(Transmitter, LoneOpCompletesOnFlush) {
  Loop l(8);
  Transmitter tx(*l.qp);
  Synchronizer sync;
  sync.add();
  ASSERT_TRUE(tx.write(l.buffer(0, nullptr), l.to.slice(0, 64), &sync).ok());
  EXPECT_FALSE(sync.done());
  tx.flush();
  EXPECT_TRUE(sync.done());
  EXPECT_EQ(sync.decrements(), 1u);
}

TEST(Transmitter, FlushRecyclesUnsignaledBuffers) {
  Loop l(8);
  Transmitter tx(*l.qp);
  mem::RecycleTag tags[3];
  for (int i = 0; i < 3; ++i) {
    const Ticket t = tx.write(l.buffer(64 * i, &tags[i]), l.to.slice(64 * i, 64));
    ASSERT_TRUE(t.ok());
    EXPECT_FALSE(t.signaled);
    EXPECT_FALSE(tags[i].reusable());
  }
  const uint64_t before = tx.flush_number();
  tx.flush();
  EXPECT_GT(tx.flush_number(), before);
  for (auto& t : tags) EXPECT_TRUE(t.reusable());
}

TEST(Transmitter, FlushOnIdleTransmitterIsNoOp) {
  Loop l(8);
  Transmitter tx(*l.qp);
  tx.flush();
  EXPECT_EQ(tx.flush_number(), 0u);
  EXPECT_EQ(tx.signaled_count(), 0u);
  EXPECT_EQ(l.qp->stats().writes, 0u);
}

TEST(Transmitter, SignalsEveryUmaxthOperation) {
  for (uint32_t u_max : {1u, 4u, 8u, 64u}) {
    Loop l(u_max);
    Transmitter tx(*l.qp);
    for (int i = 1; i <= 1000; ++i) {
      const Ticket t = tx.write(l.buffer(0, nullptr), l.to.slice(0, 64));
      ASSERT_TRUE(t.ok());
      EXPECT_EQ(t.signaled, i % u_max == 0) << "u_max " << u_max << " op " << i;
    }
    EXPECT_EQ(tx.signaled_count(), 1000u / u_max);
    EXPECT_EQ(l.qp->stats().overflow_faults, 0u);
  }
}

TEST(Transmitter, ConcurrentFlushesAdvanceOncePerEpoch) {
  Loop l(16, verbs::Execution::kDeferred);
  Transmitter tx(*l.qp);
  for (int round = 0; round < 200; ++round) {
    mem::RecycleTag tag;
    ASSERT_TRUE(tx.write(l.buffer(0, &tag), l.to.slice(0, 64)).ok());
    const uint64_t before = tx.flush_number();
    std::thread a([&] { tx.flush(); });
    std::thread b([&] { tx.flush(); });
    a.join();
    b.join();
    EXPECT_TRUE(tag.reusable());
    // One write tagged at before+1 needs at most two advances to pass.
    EXPECT_LE(tx.flush_number(), before + 2);
  }
  EXPECT_EQ(tx.completion_faults(), 0u);
}

TEST(Transmitter, SharedAcrossThreadsWithoutOverflow) {
  Loop l(4, verbs::Execution::kDeferred);
  Transmitter tx(*l.qp);
  std::atomic<uint64_t> failures{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 2000; ++i) {
        if (!tx.write(l.buffer(64 * t, nullptr), l.to.slice(64 * t, 64)).ok()) ++failures;
      }
    });
  }
  for (auto& th : threads) th.join();
  tx.flush();
  EXPECT_EQ(failures.load(), 0u);
  EXPECT_EQ(l.qp->stats().overflow_faults, 0u);
  EXPECT_EQ(l.qp->stats().bytes_written, 4u * 2000 * 64);
}

TEST(Transmitter, StepHookSeesEveryStep) {
  Loop l(2);
  Transmitter tx(*l.qp);
  std::vector<Step> steps;
  tx.set_step_hook([&](Step s) { steps.push_back(s); });
  ASSERT_TRUE(tx.write(l.buffer(0, nullptr), l.to.slice(0, 64)).ok());
  ASSERT_GE(steps.size(), 3u);
  EXPECT_EQ(steps[0], Step::kAfterIncrement);
  EXPECT_EQ(steps[1], Step::kAfterPost);
  EXPECT_EQ(steps[2], Step::kAfterTag);
}

TEST(Transmitter, OversizedWriteIsRefused) {
  Loop l(8);
  Transmitter tx(*l.qp);
  const Ticket t = tx.write(l.buffer(0, nullptr), l.to.slice(0, 32));
  EXPECT_FALSE(t.ok());
  EXPECT_EQ(tx.op_count(), 0u);
}

}  // namespace
}  // namespace rivet::transmit
