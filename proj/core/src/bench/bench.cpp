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

#include "rivet/bench/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <iomanip>
#include <memory>
#include <thread>

#include "rivet/aggregator/aggregator.hpp"
#include "rivet/common/error.hpp"
#include "rivet/fabric/invoker.hpp"
#include "rivet/fabric/system.hpp"
#include "rivet/hex/hex.hpp"
#include "rivet/transmit/transmitter.hpp"

namespace rivet::bench {
namespace {

using Clock = std::chrono::steady_clock;

constexpr uint64_t kSink = 1;

uint64_t parse_u64(std::string_view text, std::string_view what) {
  uint64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw Error(Errc::kConfig, "bad " + std::string(what) + ": '" + std::string(text) + "'");
  }
  return v;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Loopback {
  explicit Loopback(const TransportOptions& o) {
    verbs::NetworkConfig nc;
    net = std::make_unique<verbs::Network>(nc);
    const verbs::MachineId m = net->add_machine();
    verbs::ConnectOptions co;
    co.qp.u_max = o.u_max;
    co.backend = o.backend;
    qp = net->connect(m, m, co).first;
    machine = &net->machine(m);
  }

  std::unique_ptr<verbs::Network> net;
  verbs::Machine* machine = nullptr;
  verbs::QueuePair* qp = nullptr;
};

void check_post(verbs::PostStatus st) {
  if (st != verbs::PostStatus::kOk) {
    throw Error(Errc::kTransport, std::string("post failed: ") + verbs::to_string(st));
  }
}

// Hand-placed signaling: every u_max-th write is signaled and waited for.
double raw_stream(Loopback& lb, uint64_t size, uint64_t count, uint64_t* signaled) {
  verbs::MemoryRegion& src = lb.machine->register_memory(0, size);
  verbs::MemoryRegion& dst = lb.machine->register_memory(0, size);
  const uint64_t u_max = lb.qp->config().u_max;
  verbs::CompletionEntry entry;
  const auto t0 = Clock::now();
  for (uint64_t i = 0; i < count; ++i) {
    verbs::WorkRequest wr;
    wr.op = verbs::Opcode::kWrite;
    wr.local = {src.id(), 0, size};
    wr.remote = verbs::RemoteTarget{dst.id(), 0};
    wr.signaled = (i + 1) % u_max == 0 || i + 1 == count;
    check_post(lb.qp->post(wr));
    if (wr.signaled) {
      ++*signaled;
      while (lb.qp->send_cq().poll(std::span<verbs::CompletionEntry>(&entry, 1)) == 0) {
        std::this_thread::yield();
      }
    }
  }
  const double s = seconds_since(t0);
  lb.machine->deregister_memory(src.id());
  lb.machine->deregister_memory(dst.id());
  return s;
}

double auto_stream(Loopback& lb, uint64_t size, uint64_t count, uint64_t* signaled) {
  verbs::MemoryRegion& src = lb.machine->register_memory(0, size);
  verbs::MemoryRegion& dst = lb.machine->register_memory(0, size);
  transmit::Transmitter tx(*lb.qp);
  const mem::RegisteredMemory from(&src, 0, size);
  const mem::RemoteLocator to{lb.machine->id(), dst.id(), 0, size};
  const auto t0 = Clock::now();
  for (uint64_t i = 0; i < count; ++i) check_post(tx.write(from, to).status);
  tx.flush();
  const double s = seconds_since(t0);
  *signaled += tx.signaled_count();
  lb.machine->deregister_memory(src.id());
  lb.machine->deregister_memory(dst.id());
  return s;
}

fabric::SystemConfig two_machines(const fabric::SystemConfig& base) {
  fabric::SystemConfig c = base;
  c.machines = 2;
  c.processes_per_machine = 1;
  c.threads_per_process = 1;
  c.zones_per_machine = 0;
  return c;
}

struct InvokeResult {
  double seconds = 0;
  uint64_t transfers = 0;
};

InvokeResult invoke_once(const InvokeOptions& o, const std::string& mode, uint64_t size) {
  fabric::SystemConfig c = two_machines(o.base);
  fabric::PathKind path = fabric::PathKind::kSend;
  if (mode == "write") {
    path = fabric::PathKind::kWrite;
  } else if (mode == "trad" || mode == "ovfl") {
    path = fabric::PathKind::kAggregated;
    c.agg_mode = mode == "trad" ? fabric::AggMode::kTrad : fabric::AggMode::kOvfl;
  }
  fabric::System sys(c);
  std::atomic<uint64_t> got{0};
  sys.registry().add(kSink, [&got](fabric::Invocation&) {
    got.fetch_add(1, std::memory_order_relaxed);
  });
  std::atomic<int64_t> start_ns{0};
  std::atomic<int64_t> end_ns{0};
  InvokeResult result;
  const std::vector<std::byte> context(size, std::byte{0x5A});
  sys.run([&](fabric::ThreadContext& ctx) {
    if (ctx.flat() == 0) {
      fabric::Invoker& inv = ctx.invoker(path);
      start_ns.store(Clock::now().time_since_epoch().count());
      for (uint64_t i = 0; i < o.count; ++i) {
        inv.retry([&] { return inv.call(1, kSink, context); });
      }
      inv.flush();
      if (path == fabric::PathKind::kAggregated) {
        result.transfers = ctx.aggregator().stats().transfers;
      }
      return;
    }
    while (got.load(std::memory_order_relaxed) < o.count) {
      if (ctx.poll() == 0) std::this_thread::yield();
    }
    end_ns.store(Clock::now().time_since_epoch().count());
  });
  result.seconds = static_cast<double>(end_ns.load() - start_ns.load()) * 1e-9;
  return result;
}

double raw_invoke_once(const InvokeOptions& o, uint64_t size) {
  verbs::Network net;
  const verbs::MachineId a = net.add_machine();
  const verbs::MachineId b = net.add_machine();
  verbs::ConnectOptions co;
  co.qp.u_max = o.base.u_max;
  verbs::QueuePair* qp = net.connect(a, b, co).first;
  verbs::MemoryRegion& src = net.machine(a).register_memory(0, size);
  verbs::MemoryRegion& dst = net.machine(b).register_memory(0, size);
  transmit::Transmitter tx(*qp);
  const mem::RegisteredMemory from(&src, 0, size);
  const mem::RemoteLocator to{b, dst.id(), 0, size};
  const auto t0 = Clock::now();
  for (uint64_t i = 0; i < o.count; ++i) check_post(tx.write(from, to).status);
  tx.flush();
  return seconds_since(t0);
}

}  // namespace

std::vector<uint64_t> parse_sizes(std::string_view text) {
  std::vector<uint64_t> out;
  if (const size_t dots = text.find(".."); dots != std::string_view::npos) {
    const uint64_t lo = parse_u64(text.substr(0, dots), "size");
    const uint64_t hi = parse_u64(text.substr(dots + 2), "size");
    if (lo == 0 || lo > hi) throw Error(Errc::kConfig, "bad size range");
    for (uint64_t s = lo; s <= hi; s *= 2) out.push_back(s);
    return out;
  }
  size_t pos = 0;
  while (pos <= text.size()) {
    const size_t comma = text.find(',', pos);
    const std::string_view item =
        text.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    const uint64_t v = parse_u64(item, "size");
    if (v == 0) throw Error(Errc::kConfig, "sizes must be positive");
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string Placement::str() const {
  return std::to_string(machines) + "x" + std::to_string(processes) + "x" +
         std::to_string(threads);
}

Placement parse_placement(std::string_view text) {
  uint32_t parts[3];
  size_t pos = 0;
  for (int i = 0; i < 3; ++i) {
    const size_t x = i < 2 ? text.find('x', pos) : text.size();
    if (x == std::string_view::npos) {
      throw Error(Errc::kConfig, "placement must look like MxPxT: '" + std::string(text) + "'");
    }
    const uint64_t v = parse_u64(text.substr(pos, x - pos), "placement");
    if (v == 0 || v > 4096) throw Error(Errc::kConfig, "placement counts must be in 1..4096");
    parts[i] = static_cast<uint32_t>(v);
    pos = x + 1;
  }
  return Placement{parts[0], parts[1], parts[2]};
}

std::vector<TransportRow> run_transport(const TransportOptions& o) {
  if (o.sizes.empty() || o.count == 0 || o.reps == 0) {
    throw Error(Errc::kConfig, "transport bench needs sizes, a count and repetitions");
  }
  std::vector<TransportRow> rows;
  for (uint64_t size : o.sizes) {
    for (const bool automatic : {false, true}) {
      TransportRow row;
      row.mode = automatic ? "raw+auto" : "raw";
      row.size = size;
      Loopback lb(o);
      const uint64_t before = lb.qp->stats().bytes_written;
      double total = 0;
      for (uint32_t r = 0; r < o.reps; ++r) {
        total += automatic ? auto_stream(lb, size, o.count, &row.signaled)
                           : raw_stream(lb, size, o.count, &row.signaled);
      }
      row.bytes = lb.qp->stats().bytes_written - before;
      const double mean = total / o.reps;
      row.msgs_per_sec = static_cast<double>(o.count) / mean;
      row.mb_per_sec = row.msgs_per_sec * static_cast<double>(size) / 1e6;
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<InvokeRow> run_invoke(const InvokeOptions& o) {
  if (o.sizes.empty() || o.count == 0 || o.reps == 0) {
    throw Error(Errc::kConfig, "invoke bench needs sizes, a count and repetitions");
  }
  for (const auto& m : o.modes) {
    if (std::find(kInvokeModes.begin(), kInvokeModes.end(), m) == kInvokeModes.end()) {
      throw Error(Errc::kConfig, "unknown invoke mode '" + m + "'");
    }
  }
  std::vector<InvokeRow> rows;
  for (uint64_t size : o.sizes) {
    for (const auto& mode : o.modes) {
      InvokeRow row;
      row.mode = mode;
      row.size = size;
      double total = 0;
      for (uint32_t r = 0; r < o.reps; ++r) {
        if (mode == "max-raw") {
          total += raw_invoke_once(o, size);
        } else {
          const InvokeResult res = invoke_once(o, mode, size);
          total += res.seconds;
          row.transfers += res.transfers;
        }
      }
      const double mean = total / o.reps;
      row.calls_per_sec = static_cast<double>(o.count) / mean;
      row.mb_per_sec = row.calls_per_sec * static_cast<double>(size) / 1e6;
      rows.push_back(row);
    }
  }
  return rows;
}

MctsRow run_mcts(const MctsOptions& o) {
  if (o.reps == 0) throw Error(Errc::kConfig, "mcts bench needs repetitions");
  if (o.hex_n == 0 || o.hex_n > hex::Board::kMaxSide) {
    throw Error(Errc::kConfig, "hex side out of range");
  }
  fabric::SystemConfig c = o.base;
  c.machines = o.placement.machines;
  c.processes_per_machine = o.placement.processes;
  c.threads_per_process = o.placement.threads;
  fabric::validate(c);
  hex::HexGame game(o.hex_n);
  mcts::SearchConfig sc = o.search;
  sc.phases = o.phases;
  MctsRow row;
  row.config = o.placement.str();
  row.conserved = true;
  double rate = 0;
  for (uint32_t rep = 0; rep < o.reps; ++rep) {
    fabric::System sys(c);
    mcts::Search search(sys, game, sc);
    const mcts::Report r = search.run();
    const mcts::Conservation check = search.check();
    row.visits = r.root_visits;
    row.completions = r.completions;
    rate += r.rollouts_per_sec;
    if (!check.ok && row.conserved) {
      row.conserved = false;
      row.failure = check.failure;
    }
  }
  row.rollouts_per_sec = rate / o.reps;
  return row;
}

void write_csv(std::ostream& out, const std::vector<TransportRow>& rows) {
  out << "mode,size,msgs_per_sec,MB_per_sec\n" << std::fixed << std::setprecision(2);
  for (const auto& r : rows) {
    out << r.mode << ',' << r.size << ',' << r.msgs_per_sec << ',' << r.mb_per_sec << '\n';
  }
}

void write_csv(std::ostream& out, const std::vector<InvokeRow>& rows) {
  out << "size,mode,MB_per_sec,calls_per_sec\n" << std::fixed << std::setprecision(2);
  for (const auto& r : rows) {
    out << r.size << ',' << r.mode << ',' << r.mb_per_sec << ',' << r.calls_per_sec << '\n';
  }
}

void write_csv(std::ostream& out, const std::vector<MctsRow>& rows) {
  out << "config,visits,completions,rollouts_per_sec\n" << std::fixed << std::setprecision(2);
  for (const auto& r : rows) {
    out << r.config << ',' << r.visits << ',' << r.completions << ',' << r.rollouts_per_sec
        << '\n';
  }
}

}  // namespace rivet::bench
