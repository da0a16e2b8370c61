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

#include <atomic>
#include <chrono>
#include <cstring>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "checks.hpp"
#include "rivet/regmem/registered_memory.hpp"
#include "rivet/transmit/transmitter.hpp"
#include "rivet/verbs/device.hpp"

namespace acceptance {
namespace {

using namespace rivet;

constexpr uint64_t kSlot = 64;
constexpr uint64_t kPoison = 0xEEEE'EEEE'EEEE'EEEEull;

void fill(std::byte* p, uint64_t word) {
  for (uint64_t i = 0; i < kSlot / 8; ++i) std::memcpy(p + 8 * i, &word, 8);
}

bool holds(const std::byte* p, uint64_t word) {
  for (uint64_t i = 0; i < kSlot / 8; ++i) {
    uint64_t v;
    std::memcpy(&v, p + 8 * i, 8);
    if (v != word) return false;
  }
  return true;
}

struct LaneResult {
  uint64_t stale = 0;     // destination did not hold the previous value on reuse
  uint64_t poisoned = 0;  // poison reached the destination
  uint64_t post_errors = 0;
};

// Each lane cycles through its own buffers; buffer j always writes
// destination slot j, so the slot tells which write ran last.
LaneResult run_lane(transmit::Transmitter& tx, verbs::MemoryRegion& src,
                    verbs::MemoryRegion& dst, uint32_t lane, uint32_t buffers,
                    uint64_t transmits) {
  LaneResult r;
  std::vector<mem::RecycleTag> tags(buffers);
  std::vector<uint64_t> last(buffers, 0);
  const uint64_t base = uint64_t{lane} * buffers * kSlot;
  for (uint64_t i = 0; i < transmits; ++i) {
    const uint32_t j = static_cast<uint32_t>(i % buffers);
    const mem::RegisteredMemory buf(&src, base + j * kSlot, kSlot, &tags[j]);
    const std::byte* slot = dst.data() + base + j * kSlot;
    for (int spin = 0; !tags[j].reusable(); ++spin) {
      if (tx.poll() == 0) {
        if (spin > 64) tx.flush();
        std::this_thread::yield();
      }
    }
    if (last[j] != 0) {
      if (!holds(slot, last[j])) ++r.stale;
      fill(buf.data(), kPoison);
      std::this_thread::yield();
      if (!holds(slot, last[j])) ++r.poisoned;
    }
    const uint64_t word = (uint64_t{lane + 1} << 40) | (i + 1);
    fill(buf.data(), word);
    last[j] = word;
    const mem::RemoteLocator to{dst.machine(), dst.id(), base + j * kSlot, kSlot};
    if (!tx.write(buf, to).ok()) ++r.post_errors;
  }
  tx.flush();
  for (uint32_t j = 0; j < buffers; ++j) {
    if (last[j] != 0 && !holds(dst.data() + base + j * kSlot, last[j])) ++r.stale;
  }
  return r;
}

}  // namespace

Outcome shared_transmitter_safety() {
  constexpr uint32_t kLanes = 4;
  constexpr uint32_t kBuffers = 16;
  constexpr uint64_t kTransmits = 25000;
  const auto t0 = std::chrono::steady_clock::now();
  Outcome out{true, ""};
  for (uint32_t u_max : {4u, 8u, 64u}) {
    verbs::NetworkConfig nc;
    nc.execution = verbs::Execution::kDeferred;
    nc.seed = u_max;
    verbs::Network net(nc);
    const verbs::MachineId a = net.add_machine();
    const verbs::MachineId b = net.add_machine();
    verbs::ConnectOptions co;
    co.qp.u_max = u_max;
    verbs::QueuePair* qp = net.connect(a, b, co).first;
    verbs::MemoryRegion& src = net.machine(a).register_memory(0, kLanes * kBuffers * kSlot);
    verbs::MemoryRegion& dst = net.machine(b).register_memory(0, kLanes * kBuffers * kSlot);
    transmit::Transmitter tx(*qp);

    std::vector<LaneResult> results(kLanes);
    std::vector<std::thread> threads;
    for (uint32_t lane = 0; lane < kLanes; ++lane) {
      threads.emplace_back([&, lane] {
        results[lane] = run_lane(tx, src, dst, lane, kBuffers, kTransmits);
      });
    }
    for (auto& t : threads) t.join();

    LaneResult sum;
    for (const auto& r : results) {
      sum.stale += r.stale;
      sum.poisoned += r.poisoned;
      sum.post_errors += r.post_errors;
    }
    const verbs::QpStats st = qp->stats();
    const bool ok = sum.stale == 0 && sum.poisoned == 0 && sum.post_errors == 0 &&
                    st.overflow_faults == 0 && tx.completion_faults() == 0 &&
                    st.bytes_written == kLanes * kTransmits * kSlot;
    out.pass = out.pass && ok;
    out.detail += "u_max=" + std::to_string(u_max) + ": overflow=" +
                  std::to_string(st.overflow_faults) + " stale=" + std::to_string(sum.stale) +
                  " poisoned=" + std::to_string(sum.poisoned) +
                  " signaled=" + std::to_string(tx.signaled_count()) +
                  " bytes=" + std::to_string(st.bytes_written) + "; ";
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (s >= 30.0) out.pass = false;
  out.detail += "total " + std::to_string(s) + "s (limit 30s)";
  return out;
}

Outcome signaling_ratio() {
  constexpr uint64_t kTransmits = 10000;
  verbs::Network net;
  const verbs::MachineId a = net.add_machine();
  verbs::ConnectOptions co;
  co.qp.u_max = 8;
  verbs::QueuePair* qp = net.connect(a, a, co).first;
  verbs::MemoryRegion& src = net.machine(a).register_memory(0, 64);
  verbs::MemoryRegion& dst = net.machine(a).register_memory(0, 64);
  transmit::Transmitter tx(*qp);
  const mem::RegisteredMemory from(&src, 0, 64);
  const mem::RemoteLocator to{a, dst.id(), 0, 64};
  uint64_t errors = 0;
  for (uint64_t i = 0; i < kTransmits; ++i) {
    if (!tx.write(from, to).ok()) ++errors;
  }
  const uint64_t signaled = tx.signaled_count();
  const uint64_t device_signaled = qp->stats().signaled;
  const uint64_t expected = (kTransmits + 7) / 8;
  tx.flush();
  Outcome out;
  out.pass = errors == 0 && signaled == expected && device_signaled == expected;
  out.detail = "signaled " + std::to_string(signaled) + " (device " +
               std::to_string(device_signaled) + ") of " + std::to_string(kTransmits) +
               ", expected " + std::to_string(expected);
  return out;
}

}  // namespace acceptance
