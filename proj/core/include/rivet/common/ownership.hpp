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
#include <thread>

namespace rivet {

// Single-owner contract checks. Enabled by default in builds without NDEBUG;
// tests may toggle them at runtime.
bool ownership_checks_enabled();
void set_ownership_checks(bool enabled);

class OwnerCheck {
 public:
  // Binds to the first calling thread; throws Error(kContractViolation) when a
  // different thread calls while checks are enabled.
  void check(const char* what) const;
  void rebind() { owner_.store(std::thread::id{}); }
  // Owner and helper take turns under an external lock; stop checking.
  void share() { shared_.store(true); }

 private:
  mutable std::atomic<std::thread::id> owner_{};
  std::atomic<bool> shared_{false};
};

}  // namespace rivet
