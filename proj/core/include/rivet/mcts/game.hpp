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

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace rivet::mcts {

enum class Player : uint8_t { kNone = 0, kFirst = 1, kSecond = 2 };

inline Player opponent(Player p) {
  return p == Player::kFirst ? Player::kSecond : Player::kFirst;
}

using State = std::vector<std::byte>;
using StateView = std::span<const std::byte>;

// A two-player game the search can drive. States are opaque byte blobs so
// they can travel in call payloads unchanged.
class GameSpec {
 public:
  virtual ~GameSpec() = default;

  virtual State initial_state() const = 0;
  // Empty once the state is terminal.
  virtual std::vector<uint32_t> legal_moves(StateView state) const = 0;
  virtual State apply(StateView state, uint32_t move) const = 0;
  virtual Player to_move(StateView state) const = 0;
  virtual Player winner(StateView state) const = 0;

  // Plays uniformly random legal moves until someone wins.
  virtual Player playout(StateView state, std::mt19937_64& rng) const;
};

// Plays `k` random playouts from `state` and counts the ones `player` wins.
uint32_t evaluate(const GameSpec& game, StateView state, Player player, uint32_t k,
                  std::mt19937_64& rng);

}  // namespace rivet::mcts
