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

#include <benchmark/benchmark.h>

#include "rivet/regmem/registered_memory.hpp"
#include "rivet/transmit/transmitter.hpp"
#include "rivet/verbs/device.hpp"

namespace {

using namespace rivet;

struct Loopback {
  explicit Loopback(uint32_t u_max) {
    const verbs::MachineId a = net.add_machine();
    verbs::ConnectOptions co;
    co.qp.u_max = u_max;
    qp = net.connect(a, a, co).first;
    src = &net.machine(a).register_memory(0, 1u << 16);
    dst = &net.machine(a).register_memory(0, 1u << 16);
  }

  verbs::Network net;
  verbs::QueuePair* qp = nullptr;
  verbs::MemoryRegion* src = nullptr;
  verbs::MemoryRegion* dst = nullptr;
};

void BM_TransmitterWrite(benchmark::State& state) {
  const uint64_t size = static_cast<uint64_t>(state.range(0));
  Loopback lb(static_cast<uint32_t>(state.range(1)));
  transmit::Transmitter tx(*lb.qp);
  const mem::RegisteredMemory from(lb.src, 0, size, nullptr);
  const mem::RemoteLocator to{lb.dst->machine(), lb.dst->id(), 0, size};
  for (auto _ : state) {
    benchmark::DoNotOptimize(tx.write(from, to));
  }
  tx.flush();
  state.SetItemsProcessed(state.iterations());
  state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(size));
}
BENCHMARK(BM_TransmitterWrite)->ArgsProduct({{8, 64, 4096}, {8, 64}});

void BM_RawSignaledEvery(benchmark::State& state) {
  const uint32_t u_max = static_cast<uint32_t>(state.range(0));
  Loopback lb(u_max);
  verbs::WorkRequest wr;
  wr.op = verbs::Opcode::kWrite;
  wr.local = {lb.src->id(), 0, 64};
  wr.remote = verbs::RemoteTarget{lb.dst->id(), 0};
  uint64_t n = 0;
  for (auto _ : state) {
    wr.signaled = ++n % u_max == 0;
    lb.qp->post(wr);
    if (wr.signaled) benchmark::DoNotOptimize(lb.qp->send_cq().poll(4));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_RawSignaledEvery)->Arg(8)->Arg(64);

}  // namespace
