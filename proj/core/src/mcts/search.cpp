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

#include "rivet/mcts/search.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <deque>
#include <optional>
#include <random>
#include <thread>

#include "rivet/common/error.hpp"
#include "rivet/common/mpsc_queue.hpp"
#include "rivet/fabric/invoker.hpp"
#include "rivet/fabric/system.hpp"

namespace rivet::mcts {
namespace {

constexpr uint64_t kFnBase = 0x4D43'5453'0000'0000ull;
constexpr uint64_t kSelect = kFnBase + 1;
constexpr uint64_t kCreate = kFnBase + 2;
constexpr uint64_t kChildReady = kFnBase + 3;
constexpr uint64_t kBackprop = kFnBase + 4;
constexpr uint64_t kPhaseEnd = kFnBase + 5;

uint64_t mix(uint64_t x) {
  x += 0x9E37'79B9'7F4A'7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58'476D'1CE4'E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D0'49BB'1331'11EBull;
  return x ^ (x >> 31);
}

struct Header {
  uint64_t tag;
  uint32_t issuer;
  uint32_t phase;
  uint32_t node;  // target node on the receiving owner
  uint32_t hops;
  uint32_t wins;  // for the first player, backpropagation only
  uint32_t sims;
};

struct Hop {
  uint32_t owner;
  uint32_t node;
  uint32_t slot;
  uint32_t pad;
};

struct ChildReady {
  uint32_t node;
  uint32_t slot;
  uint32_t child_owner;
  uint32_t child_node;
};

}  // namespace

double ucb_score(const MoveStats& move, uint64_t parent_visits, double c) {
  const double n = static_cast<double>(move.visits);
  return move.wins / n + c * std::sqrt(std::log(static_cast<double>(parent_visits)) / n);
}

uint32_t ucb_select(std::span<const MoveStats> moves, uint64_t parent_visits, double c) {
  uint32_t best = 0;
  double best_score = ucb_score(moves[0], parent_visits, c);
  for (uint32_t i = 1; i < moves.size(); ++i) {
    const double s = ucb_score(moves[i], parent_visits, c);
    if (s > best_score) {
      best_score = s;
      best = i;
    }
  }
  return best;
}

// A rollout in motion: where it is headed and the path it took from the root.
struct Search::Trip {
  Header h{};
  std::vector<Hop> hops;

  std::vector<std::byte> encode() const {
    Header out = h;
    out.hops = static_cast<uint32_t>(hops.size());
    std::vector<std::byte> buf(sizeof(Header) + hops.size() * sizeof(Hop));
    std::memcpy(buf.data(), &out, sizeof(Header));
    if (!hops.empty()) {
      std::memcpy(buf.data() + sizeof(Header), hops.data(), hops.size() * sizeof(Hop));
    }
    return buf;
  }

  static Trip decode(std::span<const std::byte> bytes) {
    if (bytes.size() < sizeof(Header)) {
      throw Error(Errc::kInvalidArgument, "rollout record too short");
    }
    Trip t;
    std::memcpy(&t.h, bytes.data(), sizeof(Header));
    if (bytes.size() != sizeof(Header) + t.h.hops * sizeof(Hop)) {
      throw Error(Errc::kInvalidArgument, "rollout record has the wrong length");
    }
    t.hops.resize(t.h.hops);
    if (t.h.hops > 0) {
      std::memcpy(t.hops.data(), bytes.data() + sizeof(Header), t.h.hops * sizeof(Hop));
    }
    return t;
  }
};

struct Search::Outgoing {
  uint32_t dest;
  uint64_t fn;
  std::vector<std::byte> context;
  std::optional<State> payload;
};

struct Slot {
  uint32_t move = 0;
  SlotState state = SlotState::kUnexpanded;
  Locator child;
  std::atomic<uint64_t> visits{0};
  std::atomic<double> wins{0};
  uint64_t backprops = 0;
  uint64_t selected_tags = 0;
  uint64_t backprop_tags = 0;
  std::vector<std::vector<std::byte>> deferred;  // encoded selections
};

struct Search::Node {
  Locator parent;
  uint32_t parent_slot = 0;
  State state;
  Player to_move = Player::kFirst;
  Player winner = Player::kNone;
  std::atomic<uint64_t> visits{0};
  uint64_t stops = 0;
  uint32_t slot_count = 0;
  std::unique_ptr<Slot[]> slots;
  std::vector<uint32_t> unexpanded;
};

struct Search::SimRequest {
  Trip trip;
  State state;
};

struct Search::Worker {
  std::deque<Node> nodes;
  MpscQueue<SimRequest> sims;
  std::deque<Outgoing> outbox;
  std::mt19937_64 rng;
  std::atomic<uint32_t> phases_done{0};
  std::atomic<uint64_t> inflight{0};
  std::atomic<uint64_t> completions{0};
  uint64_t seq = 0;
  uint32_t announced = 0;
  uint32_t end_pending = 0;
  uint64_t visits = 0;
  uint64_t sims_run = 0;
  uint64_t deferred = 0;
  uint64_t forwarded = 0;
};

Search::Search(fabric::System& system, const GameSpec& game, SearchConfig config)
    : system_(system), game_(game), config_(config) {
  const uint32_t n = system.thread_count();
  if (config_.root_owner >= n) {
    throw Error(Errc::kConfig, "root owner outside the thread range");
  }
  if (config_.sims_per_request == 0 || config_.phases == 0 || config_.inflight == 0 ||
      config_.rollouts_per_phase_per_thread == 0) {
    throw Error(Errc::kConfig, "search counts must be positive");
  }
  cap_ = config_.rollouts_per_phase_per_thread * n;
  root_process_ = system.thread_id(config_.root_owner).process;
  issued_ = std::make_unique<std::atomic<uint64_t>[]>(config_.phases);
  completed_.assign(config_.phases, 0);
  for (uint32_t i = 0; i < n; ++i) {
    workers_.push_back(std::make_unique<Worker>());
    workers_.back()->rng.seed(mix(config_.seed) ^ mix(i + 1));
  }
  add_node(*workers_[config_.root_owner], Locator{}, 0, game_.initial_state());

  auto& reg = system.registry();
  reg.add(kSelect, [this](fabric::Invocation& inv) {
    on_select(*inv.self, Trip::decode(inv.context));
  });
  reg.add(kCreate, [this](fabric::Invocation& inv) {
    on_create(*inv.self, Trip::decode(inv.context), inv.payload);
  });
  reg.add(kChildReady,
          [this](fabric::Invocation& inv) { on_child_ready(*inv.self, inv.context); });
  reg.add(kBackprop, [this](fabric::Invocation& inv) {
    on_backprop(*inv.self, Trip::decode(inv.context));
  });
  reg.add(kPhaseEnd, [this](fabric::Invocation& inv) {
    on_phase_end(*inv.self, inv.context_as<uint32_t>());
  });
}

Search::~Search() = default;

uint32_t Search::add_node(Worker& w, Locator parent, uint32_t parent_slot, State state) {
  const auto id = static_cast<uint32_t>(w.nodes.size());
  Node& node = w.nodes.emplace_back();
  node.parent = parent;
  node.parent_slot = parent_slot;
  node.to_move = game_.to_move(state);
  node.winner = game_.winner(state);
  if (node.winner == Player::kNone) {
    const std::vector<uint32_t> moves = game_.legal_moves(state);
    node.slot_count = static_cast<uint32_t>(moves.size());
    node.slots = std::make_unique<Slot[]>(moves.size());
    for (uint32_t i = 0; i < moves.size(); ++i) {
      node.slots[i].move = moves[i];
      node.unexpanded.push_back(i);
    }
  }
  node.state = std::move(state);
  return id;
}

void Search::send(fabric::ThreadContext& ctx, uint32_t dest, uint64_t fn,
                  std::vector<std::byte> context, const State* payload) {
  Worker& w = *workers_[ctx.flat()];
  if (w.outbox.empty()) {
    fabric::Invoker& inv = ctx.invoker(config_.path);
    const bool ok = payload ? inv.call_buffer(dest, fn, context, *payload)
                            : inv.call(dest, fn, context);
    if (ok) return;
  }
  Outgoing out{dest, fn, std::move(context), std::nullopt};
  if (payload) out.payload = *payload;
  w.outbox.push_back(std::move(out));
}

size_t Search::drain_outbox(fabric::ThreadContext& ctx) {
  Worker& w = *workers_[ctx.flat()];
  fabric::Invoker& inv = ctx.invoker(config_.path);
  size_t n = 0;
  while (!w.outbox.empty()) {
    Outgoing& o = w.outbox.front();
    const bool ok = o.payload ? inv.call_buffer(o.dest, o.fn, o.context, *o.payload)
                              : inv.call(o.dest, o.fn, o.context);
    if (!ok) break;
    w.outbox.pop_front();
    ++n;
  }
  return n;
}

void Search::on_select(fabric::ThreadContext& ctx, Trip trip) {
  Worker& w = *workers_[ctx.flat()];
  const uint32_t id = trip.h.node;
  Node& node = w.nodes.at(id);
  node.visits.fetch_add(1, std::memory_order_relaxed);
  ++w.visits;

  if (node.slot_count == 0) {
    // Finished game: the result is known without playouts.
    ++node.stops;
    const uint32_t k = config_.sims_per_request;
    backprop(ctx, std::move(trip), node.winner == Player::kFirst ? k : 0);
    return;
  }

  const uint64_t mixed = mix(trip.h.tag);
  if (!node.unexpanded.empty()) {
    std::uniform_int_distribution<size_t> pick(0, node.unexpanded.size() - 1);
    const size_t at = pick(w.rng);
    const uint32_t s = node.unexpanded[at];
    node.unexpanded[at] = node.unexpanded.back();
    node.unexpanded.pop_back();
    Slot& slot = node.slots[s];
    slot.state = SlotState::kPending;
    slot.visits.fetch_add(1, std::memory_order_relaxed);
    slot.selected_tags += mixed;
    std::uniform_int_distribution<uint32_t> owner(0, system_.thread_count() - 1);
    const uint32_t child_owner = owner(w.rng);
    const State child = game_.apply(node.state, slot.move);
    trip.hops.push_back(Hop{ctx.flat(), id, s, 0});
    send(ctx, child_owner, kCreate, trip.encode(), &child);
    return;
  }

  std::vector<MoveStats> stats(node.slot_count);
  for (uint32_t i = 0; i < node.slot_count; ++i) {
    stats[i].wins = node.slots[i].wins.load(std::memory_order_relaxed);
    stats[i].visits = node.slots[i].visits.load(std::memory_order_relaxed);
  }
  const uint32_t s =
      ucb_select(stats, node.visits.load(std::memory_order_relaxed), config_.ucb_c);
  Slot& slot = node.slots[s];
  slot.visits.fetch_add(1, std::memory_order_relaxed);
  slot.selected_tags += mixed;
  trip.hops.push_back(Hop{ctx.flat(), id, s, 0});
  if (slot.state == SlotState::kPending) {
    slot.deferred.push_back(trip.encode());
    ++w.deferred;
    return;
  }
  trip.h.node = slot.child.node;
  send(ctx, slot.child.owner, kSelect, trip.encode());
}

void Search::on_create(fabric::ThreadContext& ctx, Trip trip,
                       std::span<const std::byte> state) {
  Worker& w = *workers_[ctx.flat()];
  const Hop parent = trip.hops.back();
  const uint32_t id = add_node(w, Locator{parent.owner, parent.node}, parent.slot,
                               State(state.begin(), state.end()));
  Node& node = w.nodes[id];
  node.visits.fetch_add(1, std::memory_order_relaxed);
  ++node.stops;
  ++w.visits;

  ChildReady ready{parent.node, parent.slot, ctx.flat(), id};
  const auto rb = fabric::bytes_of(ready);
  send(ctx, parent.owner, kChildReady, std::vector<std::byte>(rb.begin(), rb.end()));

  // Evaluation goes to a random thread of this process.
  const uint32_t tpp = system_.config().threads_per_process;
  const uint32_t first = ctx.flat() - ctx.id().thread;
  std::uniform_int_distribution<uint32_t> pick(0, tpp - 1);
  Worker& sim = *workers_[first + pick(w.rng)];
  sim.sims.push(SimRequest{std::move(trip), node.state});
}

void Search::on_child_ready(fabric::ThreadContext& ctx, std::span<const std::byte> context) {
  Worker& w = *workers_[ctx.flat()];
  ChildReady r;
  if (context.size() != sizeof(r)) throw Error(Errc::kInvalidArgument, "bad child notice");
  std::memcpy(&r, context.data(), sizeof(r));
  Slot& slot = w.nodes.at(r.node).slots[r.slot];
  slot.child = Locator{r.child_owner, r.child_node};
  slot.state = SlotState::kReady;
  std::vector<std::vector<std::byte>> queued;
  queued.swap(slot.deferred);
  for (auto& bytes : queued) {
    Trip t = Trip::decode(bytes);
    t.h.node = r.child_node;
    send(ctx, r.child_owner, kSelect, t.encode());
    ++w.forwarded;
  }
}

size_t Search::run_sims(fabric::ThreadContext& ctx, size_t budget) {
  Worker& w = *workers_[ctx.flat()];
  size_t n = 0;
  while (n < budget) {
    auto req = w.sims.pop();
    if (!req) break;
    const uint32_t wins =
        evaluate(game_, req->state, Player::kFirst, config_.sims_per_request, w.rng);
    ++w.sims_run;
    backprop(ctx, std::move(req->trip), wins);
    ++n;
  }
  return n;
}

void Search::backprop(fabric::ThreadContext& ctx, Trip trip, uint32_t wins) {
  trip.h.wins = wins;
  trip.h.sims = config_.sims_per_request;
  if (trip.hops.empty()) {
    complete(ctx, trip);
    return;
  }
  const uint32_t owner = trip.hops.back().owner;
  send(ctx, owner, kBackprop, trip.encode());
}

void Search::on_backprop(fabric::ThreadContext& ctx, Trip trip) {
  Worker& w = *workers_[ctx.flat()];
  const Hop hop = trip.hops.back();
  trip.hops.pop_back();
  Node& node = w.nodes.at(hop.node);
  Slot& slot = node.slots[hop.slot];
  const uint32_t mine =
      node.to_move == Player::kFirst ? trip.h.wins : trip.h.sims - trip.h.wins;
  slot.wins.fetch_add(static_cast<double>(mine) / trip.h.sims, std::memory_order_relaxed);
  ++slot.backprops;
  slot.backprop_tags += mix(trip.h.tag);
  if (trip.hops.empty()) {
    complete(ctx, trip);
    return;
  }
  const uint32_t owner = trip.hops.back().owner;
  send(ctx, owner, kBackprop, trip.encode());
}

void Search::complete(fabric::ThreadContext& ctx, const Trip& trip) {
  Worker& w = *workers_[ctx.flat()];
  Worker& issuer = *workers_[trip.h.issuer];
  issuer.completions.fetch_add(1, std::memory_order_relaxed);
  issuer.inflight.fetch_sub(1, std::memory_order_release);
  if (++completed_[trip.h.phase] == cap_) {
    w.end_pending = std::max(w.end_pending, trip.h.phase + 1);
  }
}

void Search::on_phase_end(fabric::ThreadContext& ctx, uint32_t phase) {
  Worker& w = *workers_[ctx.flat()];
  if (phase + 1 > w.phases_done.load(std::memory_order_relaxed)) {
    w.phases_done.store(phase + 1, std::memory_order_release);
  }
}

size_t Search::announce(fabric::ThreadContext& ctx) {
  Worker& w = *workers_[ctx.flat()];
  size_t n = 0;
  while (w.announced < w.end_pending) {
    const uint32_t phase = w.announced;
    if (!ctx.invoker(config_.path).broadcast(kPhaseEnd, fabric::bytes_of(phase))) break;
    ++w.announced;
    ++n;
  }
  return n;
}

size_t Search::issue(fabric::ThreadContext& ctx) {
  Worker& w = *workers_[ctx.flat()];
  const uint32_t phase = w.phases_done.load(std::memory_order_acquire);
  if (phase >= config_.phases) return 0;
  std::atomic<uint64_t>& issued = issued_[phase];
  size_t n = 0;
  while (w.outbox.empty() && w.inflight.load(std::memory_order_acquire) < config_.inflight) {
    if (issued.load(std::memory_order_relaxed) >= cap_) break;
    if (issued.fetch_add(1, std::memory_order_relaxed) >= cap_) break;
    w.inflight.fetch_add(1, std::memory_order_relaxed);
    Trip trip;
    trip.h.tag = (uint64_t{ctx.flat()} << 40) | ++w.seq;
    trip.h.issuer = ctx.flat();
    trip.h.phase = phase;
    trip.h.node = 0;
    send(ctx, config_.root_owner, kSelect, trip.encode());
    ++n;
  }
  return n;
}

void Search::work(fabric::ThreadContext& ctx) {
  Worker& w = *workers_[ctx.flat()];
  const bool issuer = ctx.id().process == root_process_;
  uint64_t round = 0;
  while (w.phases_done.load(std::memory_order_acquire) < config_.phases) {
    size_t did = 0;
    {
      auto lock = ctx.guard();
      did += drain_outbox(ctx);
      if (issuer) did += issue(ctx);
      did += run_sims(ctx, 4);
      did += announce(ctx);
      did += ctx.poll();
    }
    if (did == 0 || ++round % 32 == 0) ctx.progress();
    if (did == 0) std::this_thread::yield();
  }
  for (;;) {
    {
      auto lock = ctx.guard();
      drain_outbox(ctx);
      if (w.outbox.empty()) break;
    }
    ctx.progress();
    std::this_thread::yield();
  }
}

Report Search::run() {
  const auto t0 = std::chrono::steady_clock::now();
  system_.run([this](fabric::ThreadContext& ctx) { work(ctx); });
  seconds_ = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report();
}

Report Search::report() const {
  Report r;
  r.phases = config_.phases;
  r.phase_cap = cap_;
  r.seconds = seconds_;
  for (const auto& wp : workers_) {
    const Worker& w = *wp;
    r.visits_per_thread.push_back(w.visits);
    r.completions_per_thread.push_back(w.completions.load());
    r.nodes_per_thread.push_back(w.nodes.size());
    r.sims_per_thread.push_back(w.sims_run);
    r.visits += w.visits;
    r.completions += w.completions.load();
    r.nodes += w.nodes.size();
    r.deferred += w.deferred;
    r.forwarded += w.forwarded;
  }
  if (seconds_ > 0) r.rollouts_per_sec = static_cast<double>(r.completions) / seconds_;
  const Node& root = workers_[config_.root_owner]->nodes.front();
  r.root_visits = root.visits.load();
  for (uint32_t i = 0; i < root.slot_count; ++i) {
    r.root_moves.push_back(root.slots[i].move);
    r.root_stats.push_back(
        MoveStats{root.slots[i].wins.load(), root.slots[i].visits.load()});
  }
  return r;
}

std::vector<NodeSnapshot> Search::snapshot() const {
  std::vector<NodeSnapshot> out;
  for (uint32_t t = 0; t < workers_.size(); ++t) {
    const Worker& w = *workers_[t];
    for (uint32_t id = 0; id < w.nodes.size(); ++id) {
      const Node& node = w.nodes[id];
      NodeSnapshot snap;
      snap.self = Locator{t, id};
      snap.parent = node.parent;
      snap.parent_slot = node.parent_slot;
      snap.visits = node.visits.load();
      snap.stops = node.stops;
      for (uint32_t i = 0; i < node.slot_count; ++i) {
        const Slot& s = node.slots[i];
        SlotSnapshot ss;
        ss.move = s.move;
        ss.state = s.state;
        ss.child = s.child;
        ss.visits = s.visits.load();
        ss.wins = s.wins.load();
        ss.backprops = s.backprops;
        ss.selected_tags = s.selected_tags;
        ss.backprop_tags = s.backprop_tags;
        ss.deferred = s.deferred.size();
        snap.slots.push_back(ss);
      }
      out.push_back(std::move(snap));
    }
  }
  return out;
}

Conservation Search::check() const {
  Conservation c;
  auto fail = [&c](const Locator& at, const std::string& what) {
    if (c.ok) {
      c.ok = false;
      c.failure = "node " + std::to_string(at.owner) + ":" + std::to_string(at.node) +
                  ": " + what;
    }
  };
  const uint64_t expected = cap_ * config_.phases;
  uint64_t completions = 0;
  for (const auto& w : workers_) completions += w->completions.load();
  if (completions != expected) {
    c.ok = false;
    c.failure = "completions " + std::to_string(completions) + " != " +
                std::to_string(expected);
  }
  const Node& root = workers_[config_.root_owner]->nodes.front();
  if (root.visits.load() != expected) {
    fail(Locator{config_.root_owner, 0},
         "root visits " + std::to_string(root.visits.load()) + " != " +
             std::to_string(expected));
  }
  for (uint32_t t = 0; t < workers_.size(); ++t) {
    const Worker& w = *workers_[t];
    for (uint32_t id = 0; id < w.nodes.size(); ++id) {
      ++c.nodes;
      const Node& node = w.nodes[id];
      const Locator self{t, id};
      uint64_t sum = 0;
      for (uint32_t i = 0; i < node.slot_count; ++i) {
        const Slot& s = node.slots[i];
        const uint64_t v = s.visits.load();
        const double wins = s.wins.load();
        sum += v;
        if (s.state == SlotState::kPending) fail(self, "slot still pending");
        if (!s.deferred.empty()) fail(self, "deferred selections left behind");
        if (s.backprops != v) fail(self, "backprops differ from slot visits");
        if (s.selected_tags != s.backprop_tags) fail(self, "rollout tags differ");
        if (wins < 0 || wins > static_cast<double>(v)) fail(self, "wins out of range");
        if (s.state == SlotState::kReady) {
          const Node& child = workers_.at(s.child.owner)->nodes.at(s.child.node);
          if (child.visits.load() != v) fail(self, "child visits differ from slot visits");
          if (!(child.parent == self) || child.parent_slot != i) {
            fail(self, "child points at another parent");
          }
        }
      }
      if (node.visits.load() != sum + node.stops) {
        fail(self, "visits " + std::to_string(node.visits.load()) + " != " +
                       std::to_string(sum) + " + " + std::to_string(node.stops));
      }
    }
  }
  return c;
}

uint32_t Search::best_move() const {
  const Node& root = workers_[config_.root_owner]->nodes.front();
  if (root.slot_count == 0) throw Error(Errc::kContractViolation, "root has no moves");
  uint32_t best = 0;
  for (uint32_t i = 1; i < root.slot_count; ++i) {
    if (root.slots[i].visits.load() > root.slots[best].visits.load()) best = i;
  }
  return root.slots[best].move;
}

}  // namespace rivet::mcts
