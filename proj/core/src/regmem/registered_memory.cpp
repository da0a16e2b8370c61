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

#include "rivet/regmem/registered_memory.hpp"

namespace rivet::mem {

void RecycleTag::mark(verbs::QpId qp_id,
                      const std::atomic<uint64_t>* flush_counter,
                      uint64_t flush) {
  for (Entry& e : entries_) {
    if (e.flush_counter == flush_counter) {
      if (flush > e.flush) e.flush = flush;
      return;
    }
  }
  entries_.push_back({qp_id, flush_counter, flush});
}

bool RecycleTag::reusable() const {
  for (const Entry& e : entries_) {
    if (e.flush_counter->load(std::memory_order_acquire) <= e.flush) return false;
  }
  return true;
}

}  // namespace rivet::mem
