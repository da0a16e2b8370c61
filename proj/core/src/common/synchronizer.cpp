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

#include "rivet/common/synchronizer.hpp"

#include <atomic>
#include <thread>

namespace rivet {

uint64_t Synchronizer::write_back_total() const {
  if (write_back_.local == nullptr) return 0;
  uint64_t total = 0;
  for (uint32_t i = 0; i < write_back_.count; ++i) {
    total += std::atomic_ref<uint64_t>(const_cast<uint64_t&>(write_back_.local[i]))
                 .load(std::memory_order_acquire);
  }
  return total;
}

int64_t Synchronizer::pending() const {
  return counter_.load(std::memory_order_acquire) -
         static_cast<int64_t>(write_back_total());
}

uint64_t Synchronizer::decrements() const {
  return decrements_.load() + write_back_total();
}

bool Synchronizer::wait(const std::function<void()>& progress,
                        std::chrono::milliseconds timeout) const {
  auto deadline = std::chrono::steady_clock::now() + timeout;
  uint32_t spins = 0;
  while (!done()) {
    if (progress) progress();
    std::this_thread::yield();
    if ((++spins & 0xff) == 0 && std::chrono::steady_clock::now() > deadline) {
      return done();
    }
  }
  return true;
}

}  // namespace rivet
