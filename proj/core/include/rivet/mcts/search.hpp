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

#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "rivet/fabric/registry.hpp"
#include "rivet/mcts/game.hpp"

namespace rivet::fabric {
class System;
class ThreadContext;
}  // namespace rivet::fabric

namespace rivet::mcts {

struct MoveStats {
  double wins = 0;
  uint64_t visits = 0;
};

double ucb_score(const MoveStats& move, uint64_t parent_visits, double c);
// Highest score, lowest index on ties. Every move needs visits >= 1.
uint32_t ucb_select(std::span<const MoveStats> moves, uint64_t parent_visits, double c);

inline constexpr uint32_t kNoOwner = 0xFFFF'FFFFu;

struct Locator {
  uint32_t owner = kNoOwner;
  uint32_t node = 0;

  bool null() const { return owner == kNoOwner; }
  bool operator==(const Locator&) const = default;
};

enum class SlotState : uint8_t { kUnexpanded, kPending, kReady };

struct SearchConfig {
  uint64_t rollouts_per_phase_per_thread = 4096;
  uint32_t sims_per_request = 16;
  double ucb_c = std::sqrt(2.0);
  uint64_t seed = 1;
  uint32_t phases = 1;
  // Rollouts each issuing thread keeps open at once.
  uint32_t inflight = 8;
  fabric::PathKind path = fabric::PathKind::kAggregated;
  uint32_t root_owner = 0;
};

struct SlotSnapshot {
  uint32_t move = 0;
  SlotState state = SlotState::kUnexpanded;
  Locator child;
  uint64_t visits = 0;
  double wins = 0;
  uint64_t backprops = 0;
  // Sums of mixed rollout tags seen at selection and at backpropagation.
  uint64_t selected_tags = 0;
  uint64_t backprop_tags = 0;
  uint64_t deferred = 0;
};

struct NodeSnapshot {
  Locator self;
  Locator parent;
  uint32_t parent_slot = 0;
  uint64_t visits = 0;
  // Rollouts that ended here (creation or a finished game).
  uint64_t stops = 0;
  std::vector<SlotSnapshot> slots;
};

struct Report {
  uint32_t phases = 0;
  uint64_t phase_cap = 0;
  uint64_t completions = 0;
  uint64_t root_visits = 0;
  uint64_t visits = 0;  // selection steps across the tree
  uint64_t nodes = 0;
  double seconds = 0;
  double rollouts_per_sec = 0;
  std::vector<uint64_t> visits_per_thread;
  std::vector<uint64_t> completions_per_thread;
  std::vector<uint64_t> nodes_per_thread;
  std::vector<uint64_t> sims_per_thread;
  uint64_t deferred = 0;
  uint64_t forwarded = 0;
  std::vector<uint32_t> root_moves;
  std::vector<MoveStats> root_stats;
};

struct Conservation {
  bool ok = true;
  uint64_t nodes = 0;
  std::string failure;
};

// Tree-parallel search over a fabric::System. Nodes live on the thread that
// created them and are only touched there; selection, expansion, node
// creation and backpropagation hop between owners as remote calls. The
// root owner's process issues rollouts; a phase ends when its cap of
// rollouts has fully backpropagated, which the root owner broadcasts.
//
// Construct before the system starts running, since it registers functions.
class Search {
 public:
  Search(fabric::System& system, const GameSpec& game, SearchConfig config);
  ~Search();
  Search(const Search&) = delete;
  Search& operator=(const Search&) = delete;

  // Worker body: runs every phase to completion.
  void work(fabric::ThreadContext& ctx);
  // Runs work() on every worker and times it.
  Report run();

  uint64_t phase_cap() const { return cap_; }

  // The rest expects a quiescent system.
  Report report() const;
  std::vector<NodeSnapshot> snapshot() const;
  Conservation check() const;
  // Root move with the most visits.
  uint32_t best_move() const;

 private:
  struct Node;
  struct Worker;
  struct Trip;
  struct Outgoing;
  struct SimRequest;

  void on_select(fabric::ThreadContext& ctx, Trip trip);
  void on_create(fabric::ThreadContext& ctx, Trip trip, std::span<const std::byte> state);
  void on_child_ready(fabric::ThreadContext& ctx, std::span<const std::byte> context);
  void on_backprop(fabric::ThreadContext& ctx, Trip trip);
  void on_phase_end(fabric::ThreadContext& ctx, uint32_t phase);

  void backprop(fabric::ThreadContext& ctx, Trip trip, uint32_t wins);
  void complete(fabric::ThreadContext& ctx, const Trip& trip);
  void send(fabric::ThreadContext& ctx, uint32_t dest, uint64_t fn,
            std::vector<std::byte> context, const State* payload = nullptr);
  size_t drain_outbox(fabric::ThreadContext& ctx);
  size_t issue(fabric::ThreadContext& ctx);
  size_t run_sims(fabric::ThreadContext& ctx, size_t budget);
  size_t announce(fabric::ThreadContext& ctx);
  uint32_t add_node(Worker& w, Locator parent, uint32_t parent_slot, State state);

  fabric::System& system_;
  const GameSpec& game_;
  SearchConfig config_;
  uint64_t cap_;
  uint32_t root_process_;
  std::vector<std::unique_ptr<Worker>> workers_;
  std::unique_ptr<std::atomic<uint64_t>[]> issued_;  // per phase
  std::vector<uint64_t> completed_;                  // per phase, root owner only
  double seconds_ = 0;
};

}  // namespace rivet::mcts
