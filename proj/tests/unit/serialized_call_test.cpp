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

#include <cstring>
#include <thread>
#include <vector>

#include "rivet/common/error.hpp"
#include "rivet/common/mpsc_queue.hpp"
#include "rivet/fabric/config.hpp"
#include "rivet/fabric/ids.hpp"
#include "rivet/fabric/serialized_call.hpp"

namespace rivet::fabric {
namespace {

std::span<const std::byte> raw(const void* p, size_t n) {
  return {static_cast<const std::byte*>(p), n};
}

TEST(SerializedCall, SmallContextPadsToTwentyFour) {
  const uint32_t ctx = 0xDEADBEEF;
  EXPECT_EQ(serialized_size(4, false, 0), 24u);
  alignas(8) std::byte buf[24] = {};
  serialize_ready(buf, 7, {raw(&ctx, 4), {}}, nullptr);
  EXPECT_EQ(static_cast<uint8_t>(buf[23]), kReadyMarker);

  CallView view;
  ASSERT_EQ(probe_call(buf, &view), Probe::kReady);
  EXPECT_EQ(view.total_length, 24u);
  EXPECT_EQ(view.function_id, 7u);
  ASSERT_EQ(view.context.size(), 4u);
  EXPECT_EQ(std::memcmp(view.context.data(), &ctx, 4), 0);
  EXPECT_FALSE(view.has_payload());
}

TEST(SerializedCall, EmptyContextIsStillTwentyFour) {
  EXPECT_EQ(serialized_size(0, false, 0), 24u);
  alignas(8) std::byte buf[24] = {};
  serialize_ready(buf, 1, {}, nullptr);
  CallView view;
  ASSERT_EQ(probe_call(buf, &view), Probe::kReady);
  EXPECT_TRUE(view.context.empty());
}

TEST(SerializedCall, PayloadAndSplitContext) {
  const char head[] = "abc";
  const char tail[] = "defgh";
  const std::vector<std::byte> payload(13, std::byte{0x5A});
  const size_t size = serialized_size(3 + 5, true, payload.size());
  EXPECT_EQ(size, 48u);
  alignas(8) std::byte buf[48] = {};
  const std::span<const std::byte> p(payload);
  serialize_ready(buf, 99, {raw(head, 3), raw(tail, 5)}, &p);
  CallView view;
  ASSERT_EQ(probe_call(buf, &view), Probe::kReady);
  EXPECT_TRUE(view.has_payload());
  ASSERT_EQ(view.context.size(), 8u);
  EXPECT_EQ(std::memcmp(view.context.data(), "abcdefgh", 8), 0);
  ASSERT_EQ(view.payload.size(), 13u);
  EXPECT_EQ(view.payload[12], std::byte{0x5A});
}

TEST(SerializedCall, WrongBufferSizeThrows) {
  alignas(8) std::byte buf[32] = {};
  try {
    serialize_call(std::span(buf).first(16), 7, {}, nullptr);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kTooLarge);
  }
  EXPECT_THROW(serialize_call(buf, 7, {}, nullptr), Error);
}

TEST(SerializedCall, ProbeNeedsBothEnds) {
  alignas(8) std::byte buf[24] = {};
  CallView view;
  EXPECT_EQ(probe_call(buf, &view), Probe::kAbsent);
  serialize_call(buf, 3, {}, nullptr);
  EXPECT_EQ(probe_call(buf, &view), Probe::kAbsent);
  mark_ready(buf);
  EXPECT_EQ(probe_call(buf, &view), Probe::kReady);
}

TEST(SerializedCall, ImpossibleLengthIsMalformed) {
  alignas(8) std::byte buf[32] = {};
  const uint32_t bad = 12;  // below the minimum record
  std::memcpy(buf, &bad, 4);
  CallView view;
  EXPECT_EQ(probe_call(buf, &view), Probe::kMalformed);
}

TEST(Config, ParsesKeysAndComments) {
  const SystemConfig c = parse_config(
      "# placement\n"
      "machines = 2\n"
      "threads_per_process=4   # trailing\n"
      "u_max = 8\n");
  EXPECT_EQ(c.machines, 2u);
  EXPECT_EQ(c.threads_per_process, 4u);
  EXPECT_EQ(c.u_max, 8u);
  EXPECT_EQ(c.thread_count(), 8u);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_config("no_such_key = 1\n"), Error);
  EXPECT_THROW(parse_config("machines = two\n"), Error);
  SystemConfig c;
  EXPECT_THROW(apply_option(c, "machines", "-1"), Error);
  apply_option(c, "agg_mode", "ovfl");
  EXPECT_EQ(c.agg_mode, AggMode::kOvfl);
}

TEST(Config, ValidateCatchesInconsistentSettings) {
  SystemConfig c;
  EXPECT_NO_THROW(validate(c));
  SystemConfig zero = c;
  zero.threads_per_process = 0;
  EXPECT_THROW(validate(zero), Error);
  SystemConfig ring = c;
  ring.c = 8;
  ring.c_max = 4;
  EXPECT_THROW(validate(ring), Error);
  SystemConfig agg = c;
  agg.agg_flush_bytes = agg.chunk_size * 2;
  EXPECT_THROW(validate(agg), Error);
}

TEST(ThreadIds, FlatIdsAreDense) {
  SystemConfig c;
  c.machines = 2;
  c.processes_per_machine = 2;
  c.threads_per_process = 2;
  uint32_t expect = 0;
  for (uint32_t m = 0; m < 2; ++m) {
    for (uint32_t p = 0; p < 2; ++p) {
      for (uint32_t t = 0; t < 2; ++t, ++expect) {
        EXPECT_EQ(flat_id(c, m, p, t), expect);
        const ThreadId id = thread_id(c, expect);
        EXPECT_EQ(id.machine, m);
        EXPECT_EQ(id.local_process, p);
        EXPECT_EQ(id.process, m * 2 + p);
        EXPECT_EQ(id.thread, t);
      }
    }
  }
}

TEST(MpscQueue, KeepsPerProducerOrder) {
  MpscQueue<std::pair<int, int>> q;
  EXPECT_TRUE(q.empty());
  constexpr int kPerProducer = 20000;
  std::vector<std::thread> producers;
  for (int p = 0; p < 3; ++p) {
    producers.emplace_back([&q, p] {
      for (int i = 0; i < kPerProducer; ++i) q.push({p, i});
    });
  }
  std::vector<int> next(3, 0);
  int seen = 0;
  while (seen < 3 * kPerProducer) {
    auto v = q.pop();
    if (!v) {
      std::this_thread::yield();
      continue;
    }
    ASSERT_EQ(v->second, next[v->first]);
    ++next[v->first];
    ++seen;
  }
  for (auto& t : producers) t.join();
  EXPECT_FALSE(q.pop().has_value());
}

}  // namespace
}  // namespace rivet::fabric
