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

#include "rivet/fabric/registry.hpp"

namespace rivet::fabric {

const char* to_string(PathKind path) {
  switch (path) {
    case PathKind::kSend: return "send";
    case PathKind::kWrite: return "write";
    case PathKind::kAggregated: return "aggregated";
  }
  return "?";
}

void FunctionRegistry::add(uint64_t id, Function fn) {
  if (id >= kSystemBase) {
    throw Error(Errc::kInvalidArgument, "function id is in the reserved range");
  }
  if (frozen_) {
    throw Error(Errc::kContractViolation,
                "functions must be registered before communication starts");
  }
  if (!fn) throw Error(Errc::kInvalidArgument, "empty function");
  if (!table_.emplace(id, std::move(fn)).second) {
    throw Error(Errc::kDuplicate, "function id " + std::to_string(id) + " already registered");
  }
}

const Function* FunctionRegistry::find(uint64_t id) const {
  auto it = table_.find(id);
  return it == table_.end() ? nullptr : &it->second;
}

}  // namespace rivet::fabric
