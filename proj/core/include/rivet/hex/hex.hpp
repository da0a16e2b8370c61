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

#include <cstdint>
#include <random>
#include <vector>

#include "rivet/mcts/game.hpp"

namespace rivet::hex {

using mcts::Player;

enum class Cell : uint8_t { kEmpty = 0, kFirst = 1, kSecond = 2 };

inline Cell stone(Player p) { return static_cast<Cell>(p); }

// N x N rhombus. The first player joins row 0 to row N-1, the second
// column 0 to column N-1. Cell (r, c) touches (r-1, c), (r+1, c), (r, c-1),
// (r, c+1), (r-1, c+1) and (r+1, c-1).
class Board {
 public:
  static constexpr uint32_t kMaxSide = 32;

  explicit Board(uint32_t n);

  uint32_t side() const { return n_; }
  uint32_t cell_count() const { return n_ * n_; }
  uint32_t index(uint32_t r, uint32_t c) const { return r * n_ + c; }

  Cell at(uint32_t i) const { return cells_[i]; }
  Cell at(uint32_t r, uint32_t c) const { return cells_[index(r, c)]; }
  Player to_move() const { return to_move_; }

  // Places a stone without touching the turn. For setting up positions.
  void set(uint32_t i, Cell cell) { cells_[i] = cell; }
  void set_to_move(Player p) { to_move_ = p; }

  // Colors an empty cell for the player to move and passes the turn.
  // Throws Error(kInvalidArgument) on an occupied or out of range cell.
  void play(uint32_t i);

  // Empty cells, ascending.
  std::vector<uint32_t> legal_moves() const;
  std::vector<uint32_t> neighbors(uint32_t i) const;
  bool full() const;

  Player winner() const;

  // Plays random moves until someone connects. The cells played are
  // appended to `moves` when given.
  Player random_playout(std::mt19937_64& rng, std::vector<uint32_t>* moves = nullptr) const;

  // [N][to_move][N*N cells], one byte each.
  mcts::State serialize() const;
  // Throws Error(kInvalidArgument) on a malformed blob.
  static Board deserialize(mcts::StateView blob);

  bool operator==(const Board& other) const = default;

 private:
  uint32_t n_;
  Player to_move_ = Player::kFirst;
  std::vector<Cell> cells_;
};

class HexGame final : public mcts::GameSpec {
 public:
  explicit HexGame(uint32_t n) : n_(n) {}

  uint32_t side() const { return n_; }

  mcts::State initial_state() const override;
  std::vector<uint32_t> legal_moves(mcts::StateView state) const override;
  mcts::State apply(mcts::StateView state, uint32_t move) const override;
  Player to_move(mcts::StateView state) const override;
  Player winner(mcts::StateView state) const override;
  Player playout(mcts::StateView state, std::mt19937_64& rng) const override;

 private:
  uint32_t n_;
};

}  // namespace rivet::hex
