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
#include <cstdint>
#include <cstring>
#include <functional>
#include <span>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include "rivet/common/error.hpp"
#include "rivet/fabric/ids.hpp"

namespace rivet::fabric {

class System;
class ThreadContext;

// How a record travels. Aggregated records arrive through the channels and
// are reported as kWrite at the destination.
enum class PathKind : uint8_t { kSend, kWrite, kAggregated };

const char* to_string(PathKind path);

// What a registered function sees when it runs.
struct Invocation {
  System* system = nullptr;
  ThreadContext* self = nullptr;  // executing worker
  ThreadId source;
  uint64_t function_id = 0;
  std::span<const std::byte> context;
  std::span<const std::byte> payload;
  bool has_payload = false;
  PathKind path = PathKind::kSend;
  // Set for call_return; the function fills it with the reply bytes.
  std::vector<std::byte>* result = nullptr;

  template <class T>
  T context_as() const {
    static_assert(std::is_trivially_copyable_v<T>);
    if (context.size() < sizeof(T)) {
      throw Error(Errc::kInvalidArgument, "context shorter than requested type");
    }
    T v;
    std::memcpy(&v, context.data(), sizeof(T));
    return v;
  }
};

using Function = std::function<void(Invocation&)>;

// Maps 64-bit ids to functions. Every process shares one table, so ids agree
// across the system. Ids at or above kSystemBase are reserved.
class FunctionRegistry {
 public:
  static constexpr uint64_t kSystemBase = 0xFFFF'0000'0000'0000ull;

  // Throws Error(kDuplicate) for a taken id, kInvalidArgument for a reserved
  // id and kContractViolation once frozen.
  void add(uint64_t id, Function fn);
  const Function* find(uint64_t id) const;
  size_t size() const { return table_.size(); }

  void freeze() { frozen_.store(true, std::memory_order_release); }
  bool frozen() const { return frozen_.load(std::memory_order_acquire); }

 private:
  std::unordered_map<uint64_t, Function> table_;
  std::atomic<bool> frozen_{false};
};

}  // namespace rivet::fabric
