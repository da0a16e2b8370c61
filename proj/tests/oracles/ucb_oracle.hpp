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

#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

inline double ucb_term(double wins, double visits, double parent, double c) {
  return wins / visits + c * std::sqrt(std::log(parent) / visits);
}

// Index of the largest term, lowest index on ties.
inline size_t ucb_argmax(const std::vector<double>& wins, const std::vector<double>& visits,
                         double parent, double c) {
  size_t best = 0;
  double best_term = ucb_term(wins[0], visits[0], parent, c);
  for (size_t i = 1; i < wins.size(); ++i) {
    const double t = ucb_term(wins[i], visits[i], parent, c);
    if (t > best_term) {
      best_term = t;
      best = i;
    }
  }
  return best;
}

}  // namespace oracle
