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

#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "checks.hpp"
#include "rivet/aggregator/aggregator.hpp"
#include "rivet/bench/bench.hpp"
#include "rivet/fabric/invoker.hpp"
#include "rivet/fabric/system.hpp"

namespace acceptance {
namespace {

using namespace rivet;

constexpr uint64_t kProbe = 0x2000;
constexpr uint64_t kPayload = 48;
constexpr uint32_t kReps = 3;
constexpr uint32_t kAll = 0xFFFF'FFFFu;

enum Prim : uint32_t {
  kCall,
  kBuffer,
  kBufferWrite,
  kBufferRead,
  kReturn,
  kBroadcast,
  kBroadcastBuffer,
  kPrimCount
};
const char* const kPrimNames[kPrimCount] = {"call",        "call_buffer", "call_buffer_write",
                                            "call_buffer_read", "call_return", "broadcast",
                                            "broadcast_buffer"};

struct Probe {
  uint32_t prim;
  uint32_t src;
  uint32_t dst;  // kAll for broadcasts
  uint32_t rep;
};

std::array<std::byte, kPayload> pattern(const Probe& p) {
  std::array<std::byte, kPayload> out;
  uint64_t x = (uint64_t{p.prim} << 48) ^ (uint64_t{p.src} << 32) ^ (uint64_t{p.dst} << 8) ^ p.rep;
  for (auto& b : out) {
    x = x * 6364136223846793005ull + 1442695040888963407ull;
    b = static_cast<std::byte>(x >> 56);
  }
  return out;
}

bool matches(std::span<const std::byte> got, const Probe& p) {
  const auto want = pattern(p);
  return got.size() == want.size() && std::memcmp(got.data(), want.data(), want.size()) == 0;
}

struct Bench {
  uint32_t n;
  std::vector<std::atomic<uint32_t>> seen;  // [prim][src][dst]
  std::atomic<uint64_t> bad{0};
  std::array<std::atomic<uint64_t>, kPrimCount> bad_by_prim{};
  std::atomic<uint64_t> bad_source{0}, bad_dest{0}, bad_payload{0};

  explicit Bench(uint32_t threads)
      : n(threads), seen(static_cast<size_t>(kPrimCount) * threads * threads) {}

  std::atomic<uint32_t>& at(uint32_t prim, uint32_t src, uint32_t dst) {
    return seen[(static_cast<size_t>(prim) * n + src) * n + dst];
  }
};

struct PerThread {
  std::array<uint64_t, kPrimCount> increments{};
  std::array<uint64_t, kPrimCount> decrements{};
  std::array<uint64_t, kPrimCount> failures{};
  uint64_t bad_returns = 0;
  bool waited = true;
};

fabric::SystemConfig placement_for(uint32_t n) {
  fabric::SystemConfig c;
  c.machines = 2;
  c.processes_per_machine = n >= 8 ? 2 : 1;
  c.threads_per_process = n / (2 * c.processes_per_machine);
  c.chunk_size = 16u << 10;
  c.finalize_timeout_ms = 120000;
  return c;
}

// Empty string when every check passed, otherwise the first problem.
std::string exercise(uint32_t n, fabric::PathKind path) {
  fabric::System sys(placement_for(n));
  Bench bench(n);
  sys.registry().add(kProbe, [&bench](fabric::Invocation& inv) {
    const Probe p = inv.context_as<Probe>();
    const uint32_t self = inv.self->flat();
    const bool expects_payload = p.prim == kBuffer || p.prim == kBufferWrite ||
                                 p.prim == kBufferRead || p.prim == kBroadcastBuffer;
    bool ok = p.prim < kPrimCount && p.src == inv.source.flat &&
              (p.dst == kAll || p.dst == self) && inv.has_payload == expects_payload;
    if (ok && expects_payload) ok = matches(inv.payload, p);
    if (ok && p.prim == kReturn) {
      if (inv.result == nullptr) {
        ok = false;
      } else {
        const auto bytes = pattern(p);
        inv.result->assign(bytes.begin(), bytes.end());
      }
    }
    if (!ok) {
      ++bench.bad;
      if (p.prim < kPrimCount) ++bench.bad_by_prim[p.prim];
      if (p.src != inv.source.flat) ++bench.bad_source;
      if (p.dst != kAll && p.dst != self) ++bench.bad_dest;
      if (inv.has_payload != expects_payload || (expects_payload && !matches(inv.payload, p))) {
        ++bench.bad_payload;
      }
      return;
    }
    bench.at(p.prim, p.src, self).fetch_add(1);
  });

  // Memory that must exist before the run: read sources and return targets
  // on the caller's process, written buffers on the callee's.
  auto slot = [n](uint32_t a, uint32_t b, uint32_t r) { return (size_t{a} * n + b) * kReps + r; };
  std::vector<mem::RegisteredMemory> read_src(size_t{n} * n * kReps);
  std::vector<mem::RegisteredMemory> origin(size_t{n} * n * kReps);
  std::vector<mem::RegisteredMemory> written(size_t{n} * n * kReps);
  for (uint32_t s = 0; s < n; ++s) {
    for (uint32_t d = 0; d < n; ++d) {
      for (uint32_t r = 0; r < kReps; ++r) {
        const size_t i = slot(s, d, r);
        read_src[i] = sys.process_of(s).arena().allocate(kPayload);
        const auto bytes = pattern({kBufferRead, s, d, r});
        std::memcpy(read_src[i].data(), bytes.data(), kPayload);
        origin[i] = sys.process_of(s).arena().allocate(kPayload);
        written[i] = sys.process_of(d).arena().allocate(kPayload);
      }
    }
  }

  std::vector<PerThread> per(n);
  sys.run([&](fabric::ThreadContext& ctx) {
    const uint32_t me = ctx.flat();
    fabric::Invoker& inv = ctx.invoker(path);
    std::vector<std::unique_ptr<Synchronizer>> syncs;
    for (uint32_t p = 0; p < kPrimCount; ++p) {
      syncs.push_back(std::make_unique<Synchronizer>(NotifyMode::kOnRemoteConsume));
    }
    for (uint32_t r = 0; r < kReps; ++r) {
      for (uint32_t d = 0; d < n; ++d) {
        const size_t i = slot(me, d, r);
        Probe p{kCall, me, d, r};
        inv.retry([&] { return inv.call(d, kProbe, fabric::bytes_of(p), syncs[kCall].get()); });

        p.prim = kBuffer;
        const auto buf = pattern(p);
        inv.retry([&] {
          return inv.call_buffer(d, kProbe, fabric::bytes_of(p), buf, syncs[kBuffer].get());
        });

        p.prim = kBufferWrite;
        inv.retry([&] {
          mem::RegisteredMemory src = ctx.scratch(kPayload);
          const auto bytes = pattern(p);
          std::memcpy(src.data(), bytes.data(), kPayload);
          return inv.call_buffer_write(d, kProbe, fabric::bytes_of(p), src,
                                       written[i].locator(), syncs[kBufferWrite].get());
        });

        p.prim = kBufferRead;
        inv.retry([&] {
          return inv.call_buffer_read(d, kProbe, fabric::bytes_of(p), read_src[i],
                                      syncs[kBufferRead].get(), r % 2 == 1);
        });

        p.prim = kReturn;
        inv.retry([&] {
          return inv.call_return(d, kProbe, fabric::bytes_of(p), origin[i].locator(),
                                 syncs[kReturn].get());
        });
      }
      Probe b{kBroadcast, me, kAll, r};
      inv.retry([&] {
        return inv.broadcast(kProbe, fabric::bytes_of(b), syncs[kBroadcast].get());
      });
      b.prim = kBroadcastBuffer;
      const auto bytes = pattern(b);
      inv.retry([&] {
        return inv.broadcast_buffer(kProbe, fabric::bytes_of(b), bytes,
                                    syncs[kBroadcastBuffer].get());
      });
    }
    inv.flush();
    PerThread& mine = per[me];
    for (uint32_t p = 0; p < kPrimCount; ++p) {
      if (!ctx.wait(*syncs[p])) mine.waited = false;
      mine.increments[p] = syncs[p]->increments();
      mine.decrements[p] = syncs[p]->decrements();
      mine.failures[p] = syncs[p]->failures();
    }
    for (uint32_t d = 0; d < n; ++d) {
      for (uint32_t r = 0; r < kReps; ++r) {
        const auto got = origin[slot(me, d, r)].bytes().first(kPayload);
        if (!matches(got, {kReturn, me, d, r})) ++mine.bad_returns;
      }
    }
  });

  if (bench.bad != 0) {
    std::string why = std::to_string(bench.bad.load()) + " invocations failed checks (";
    for (uint32_t p = 0; p < kPrimCount; ++p) {
      if (bench.bad_by_prim[p] != 0) {
        why += std::string(kPrimNames[p]) + " " + std::to_string(bench.bad_by_prim[p].load()) + " ";
      }
    }
    return why + "source " + std::to_string(bench.bad_source.load()) + " dest " +
           std::to_string(bench.bad_dest.load()) + " payload " +
           std::to_string(bench.bad_payload.load()) + ")";
  }
  for (uint32_t p = 0; p < kPrimCount; ++p) {
    for (uint32_t s = 0; s < n; ++s) {
      for (uint32_t d = 0; d < n; ++d) {
        if (bench.at(p, s, d).load() != kReps) {
          return std::string(kPrimNames[p]) + " " + std::to_string(s) + "->" +
                 std::to_string(d) + " ran " + std::to_string(bench.at(p, s, d).load()) +
                 " times";
        }
      }
    }
  }
  for (uint32_t s = 0; s < n; ++s) {
    const PerThread& t = per[s];
    if (!t.waited) return "thread " + std::to_string(s) + " timed out";
    if (t.bad_returns != 0) return "thread " + std::to_string(s) + " got bad return values";
    for (uint32_t p = 0; p < kPrimCount; ++p) {
      const uint64_t want = uint64_t{kReps} * n;
      if (t.increments[p] != want || t.decrements[p] != want || t.failures[p] != 0) {
        return std::string(kPrimNames[p]) + " synchronizer of thread " + std::to_string(s) +
               ": +" + std::to_string(t.increments[p]) + " -" +
               std::to_string(t.decrements[p]) + " failed " + std::to_string(t.failures[p]);
      }
    }
  }
  for (uint32_t s = 0; s < n; ++s) {
    for (uint32_t d = 0; d < n; ++d) {
      for (uint32_t r = 0; r < kReps; ++r) {
        if (!matches(written[slot(s, d, r)].bytes().first(kPayload), {kBufferWrite, s, d, r})) {
          return "written buffer " + std::to_string(s) + "->" + std::to_string(d) + " differs";
        }
      }
    }
  }
  if (sys.submitted() != sys.invoked()) return "submitted and invoked counts differ";
  return "";
}

}  // namespace

Outcome primitive_semantics() {
  Outcome out{true, ""};
  for (fabric::PathKind path : {fabric::PathKind::kSend, fabric::PathKind::kWrite,
                                fabric::PathKind::kAggregated}) {
    for (uint32_t n : {2u, 8u, 16u}) {
      const std::string problem = exercise(n, path);
      if (!problem.empty()) {
        out.pass = false;
        out.detail += std::string(fabric::to_string(path)) + " n=" + std::to_string(n) + ": " +
                      problem + "; ";
      }
    }
  }
  if (out.pass) {
    out.detail = "7 primitives x n in {2,8,16} x send/write/aggregated paths: exactly once, "
                 "payloads intact, synchronizers balanced";
  }
  return out;
}

Outcome aggregation_transfers_and_ordering() {
  constexpr uint64_t kCalls = 100000;
  constexpr uint64_t kFlushEvery = 3000;
  fabric::SystemConfig c;
  c.machines = 2;
  c.agg_mode = fabric::AggMode::kTrad;
  c.agg_flush_bytes = 4096;
  fabric::System sys(c);
  std::atomic<uint64_t> got{0};
  sys.registry().add(kProbe, [&got](fabric::Invocation&) { got.fetch_add(1); });
  aggregator::Stats stats;
  sys.run([&](fabric::ThreadContext& ctx) {
    if (ctx.flat() == 0) {
      fabric::Invoker& inv = ctx.via_aggregator();
      const std::array<std::byte, 40> context{};
      for (uint64_t i = 1; i <= kCalls; ++i) {
        inv.retry([&] { return inv.call(1, kProbe, context); });
        if (i % kFlushEvery == 0) inv.flush();
      }
      inv.flush();
      stats = ctx.aggregator().stats();
      return;
    }
    while (got.load() < kCalls) {
      if (ctx.poll() == 0) std::this_thread::yield();
    }
  });
  const uint64_t bound = (stats.record_bytes + 4095) / 4096 + stats.flushes;
  const bool transfers_ok = got.load() == kCalls && stats.records == kCalls &&
                            stats.record_bytes == kCalls * 64 && stats.transfers <= bound;

  bench::InvokeOptions io;
  io.sizes = {8};
  io.modes = {"send", "write", "trad"};
  io.count = 20000;
  io.reps = 3;
  const auto rows = bench::run_invoke(io);
  double rate[3] = {0, 0, 0};
  for (const auto& r : rows) {
    for (int m = 0; m < 3; ++m) {
      if (r.mode == io.modes[m]) rate[m] = r.calls_per_sec;
    }
  }
  const bool ordered = rate[2] > rate[1] && rate[1] > rate[0];

  Outcome out;
  out.pass = transfers_ok && ordered;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "transfers %llu <= %llu (bytes %llu, flushes %llu); 8B calls/s trad %.0f "
                "write %.0f send %.0f",
                static_cast<unsigned long long>(stats.transfers),
                static_cast<unsigned long long>(bound),
                static_cast<unsigned long long>(stats.record_bytes),
                static_cast<unsigned long long>(stats.flushes), rate[2], rate[1], rate[0]);
  out.detail = buf;
  return out;
}

}  // namespace acceptance
