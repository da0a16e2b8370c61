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

#include <chrono>
#include <cstdint>
#include <thread>

namespace rivet {

// Yield-first backoff for polling loops. After a run of fruitless yields it
// starts sleeping briefly so idle pollers stop competing for the CPU.
class Backoff {
 public:
  void pause() {
    if (++misses_ < kYieldLimit) {
      std::this_thread::yield();
    } else {
      std::this_thread::sleep_for(std::chrono::microseconds(50));
    }
  }
  void reset() { misses_ = 0; }

 private:
  static constexpr uint32_t kYieldLimit = 2048;
  uint32_t misses_ = 0;
};

inline void cpu_relax() { std::this_thread::yield(); }

}  // namespace rivet
