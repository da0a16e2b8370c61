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

#include "rivet/hex/hex.hpp"

#include <numeric>
#include <string>

#include "rivet/common/error.hpp"

namespace rivet::hex {
namespace {

class UnionFind {
 public:
  explicit UnionFind(uint32_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), 0u);
  }

  uint32_t find(uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(uint32_t a, uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
  }

  bool same(uint32_t a, uint32_t b) { return find(a) == find(b); }

 private:
  std::vector<uint32_t> parent_;
  std::vector<uint8_t> rank_;
};

constexpr int kDr[6] = {-1, 1, 0, 0, -1, 1};
constexpr int kDc[6] = {0, 0, -1, 1, 1, -1};

// Cells plus four virtual edge nodes.
struct Connectivity {
  explicit Connectivity(uint32_t n)
      : n(n), top(n * n), bottom(n * n + 1), left(n * n + 2), right(n * n + 3),
        uf(n * n + 4) {}

  void place(const std::vector<Cell>& cells, uint32_t i) {
    const Cell color = cells[i];
    const int r = static_cast<int>(i / n);
    const int c = static_cast<int>(i % n);
    const int side = static_cast<int>(n);
    for (int k = 0; k < 6; ++k) {
      const int rr = r + kDr[k];
      const int cc = c + kDc[k];
      if (rr < 0 || cc < 0 || rr >= side || cc >= side) continue;
      const uint32_t j = static_cast<uint32_t>(rr * side + cc);
      if (cells[j] == color) uf.unite(i, j);
    }
    if (color == Cell::kFirst) {
      if (r == 0) uf.unite(i, top);
      if (r == side - 1) uf.unite(i, bottom);
    } else {
      if (c == 0) uf.unite(i, left);
      if (c == side - 1) uf.unite(i, right);
    }
  }

  Player winner() {
    if (uf.same(top, bottom)) return Player::kFirst;
    if (uf.same(left, right)) return Player::kSecond;
    return Player::kNone;
  }

  uint32_t n, top, bottom, left, right;
  UnionFind uf;
};

}  // namespace

Board::Board(uint32_t n) : n_(n), cells_(static_cast<size_t>(n) * n, Cell::kEmpty) {
  if (n == 0 || n > kMaxSide) {
    throw Error(Errc::kInvalidArgument, "hex side must be in 1.." + std::to_string(kMaxSide));
  }
}

void Board::play(uint32_t i) {
  if (i >= cells_.size() || cells_[i] != Cell::kEmpty) {
    throw Error(Errc::kInvalidArgument, "illegal hex move " + std::to_string(i));
  }
  cells_[i] = stone(to_move_);
  to_move_ = mcts::opponent(to_move_);
}

std::vector<uint32_t> Board::legal_moves() const {
  std::vector<uint32_t> out;
  for (uint32_t i = 0; i < cells_.size(); ++i) {
    if (cells_[i] == Cell::kEmpty) out.push_back(i);
  }
  return out;
}

std::vector<uint32_t> Board::neighbors(uint32_t i) const {
  std::vector<uint32_t> out;
  const int r = static_cast<int>(i / n_);
  const int c = static_cast<int>(i % n_);
  const int side = static_cast<int>(n_);
  for (int k = 0; k < 6; ++k) {
    const int rr = r + kDr[k];
    const int cc = c + kDc[k];
    if (rr < 0 || cc < 0 || rr >= side || cc >= side) continue;
    out.push_back(static_cast<uint32_t>(rr * side + cc));
  }
  return out;
}

bool Board::full() const {
  for (Cell c : cells_) {
    if (c == Cell::kEmpty) return false;
  }
  return true;
}

Player Board::winner() const {
  Connectivity conn(n_);
  for (uint32_t i = 0; i < cells_.size(); ++i) {
    if (cells_[i] != Cell::kEmpty) conn.place(cells_, i);
  }
  return conn.winner();
}

Player Board::random_playout(std::mt19937_64& rng, std::vector<uint32_t>* moves) const {
  std::vector<Cell> cells = cells_;
  Connectivity conn(n_);
  std::vector<uint32_t> empty;
  for (uint32_t i = 0; i < cells.size(); ++i) {
    if (cells[i] == Cell::kEmpty) {
      empty.push_back(i);
    } else {
      conn.place(cells, i);
    }
  }
  Player w = conn.winner();
  Player turn = to_move_;
  // Drawing the next cell from the shrinking tail is an incremental shuffle.
  for (size_t k = 0; w == Player::kNone && k < empty.size(); ++k) {
    std::uniform_int_distribution<size_t> pick(k, empty.size() - 1);
    std::swap(empty[k], empty[pick(rng)]);
    const uint32_t cell = empty[k];
    cells[cell] = stone(turn);
    conn.place(cells, cell);
    if (moves) moves->push_back(cell);
    turn = mcts::opponent(turn);
    w = conn.winner();
  }
  return w;
}

mcts::State Board::serialize() const {
  mcts::State out(2 + cells_.size());
  out[0] = static_cast<std::byte>(n_);
  out[1] = static_cast<std::byte>(to_move_);
  for (size_t i = 0; i < cells_.size(); ++i) out[2 + i] = static_cast<std::byte>(cells_[i]);
  return out;
}

Board Board::deserialize(mcts::StateView blob) {
  if (blob.size() < 2) throw Error(Errc::kInvalidArgument, "hex state too short");
  const uint32_t n = static_cast<uint32_t>(blob[0]);
  if (n == 0 || n > kMaxSide || blob.size() != 2 + static_cast<size_t>(n) * n) {
    throw Error(Errc::kInvalidArgument, "hex state has the wrong length");
  }
  Board b(n);
  const auto turn = static_cast<uint8_t>(blob[1]);
  if (turn != 1 && turn != 2) throw Error(Errc::kInvalidArgument, "bad hex turn byte");
  b.to_move_ = static_cast<Player>(turn);
  for (size_t i = 0; i < b.cells_.size(); ++i) {
    const auto v = static_cast<uint8_t>(blob[2 + i]);
    if (v > 2) throw Error(Errc::kInvalidArgument, "bad hex cell byte");
    b.cells_[i] = static_cast<Cell>(v);
  }
  return b;
}

mcts::State HexGame::initial_state() const { return Board(n_).serialize(); }

std::vector<uint32_t> HexGame::legal_moves(mcts::StateView state) const {
  const Board b = Board::deserialize(state);
  if (b.winner() != Player::kNone) return {};
  return b.legal_moves();
}

mcts::State HexGame::apply(mcts::StateView state, uint32_t move) const {
  Board b = Board::deserialize(state);
  b.play(move);
  return b.serialize();
}

Player HexGame::to_move(mcts::StateView state) const {
  return Board::deserialize(state).to_move();
}

Player HexGame::winner(mcts::StateView state) const {
  return Board::deserialize(state).winner();
}

Player HexGame::playout(mcts::StateView state, std::mt19937_64& rng) const {
  return Board::deserialize(state).random_playout(rng);
}

}  // namespace rivet::hex
