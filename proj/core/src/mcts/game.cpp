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

#include "rivet/mcts/game.hpp"

namespace rivet::mcts {

Player GameSpec::playout(StateView state, std::mt19937_64& rng) const {
  State s(state.begin(), state.end());
  for (;;) {
    const Player w = winner(s);
    if (w != Player::kNone) return w;
    const std::vector<uint32_t> moves = legal_moves(s);
    if (moves.empty()) return Player::kNone;
    std::uniform_int_distribution<size_t> pick(0, moves.size() - 1);
    s = apply(s, moves[pick(rng)]);
  }
}

uint32_t evaluate(const GameSpec& game, StateView state, Player player, uint32_t k,
                  std::mt19937_64& rng) {
  uint32_t wins = 0;
  for (uint32_t i = 0; i < k; ++i) {
    if (game.playout(state, rng) == player) ++wins;
  }
  return wins;
}

}  // namespace rivet::mcts
