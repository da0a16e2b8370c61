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

#include "rivet/common/ownership.hpp"

#include <string>

#include "rivet/common/error.hpp"

namespace rivet {
namespace {

#ifdef NDEBUG
std::atomic<bool> g_checks{false};
#else
std::atomic<bool> g_checks{true};
#endif

}  // namespace

bool ownership_checks_enabled() { return g_checks.load(std::memory_order_relaxed); }
void set_ownership_checks(bool enabled) { g_checks.store(enabled); }

void OwnerCheck::check(const char* what) const {
  if (!ownership_checks_enabled() || shared_.load(std::memory_order_relaxed)) return;
  const std::thread::id self = std::this_thread::get_id();
  std::thread::id expected{};
  if (owner_.compare_exchange_strong(expected, self)) return;
  if (expected != self) {
    throw Error(Errc::kContractViolation,
                std::string(what) + " used from a thread other than its owner");
  }
}

}  // namespace rivet
