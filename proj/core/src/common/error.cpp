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

#include "rivet/common/error.hpp"

namespace rivet {

const char* to_string(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "invalid argument";
    case Errc::kUnknownMachine: return "unknown machine";
    case Errc::kUnknownZone: return "unknown zone";
    case Errc::kCapacity: return "capacity exhausted";
    case Errc::kTooLarge: return "too large";
    case Errc::kOutOfMemory: return "out of memory";
    case Errc::kDuplicate: return "duplicate";
    case Errc::kAlreadyInitialized: return "already initialized";
    case Errc::kNotInitialized: return "not initialized";
    case Errc::kTimeout: return "timeout";
    case Errc::kContractViolation: return "contract violation";
    case Errc::kConfig: return "config error";
    case Errc::kTransport: return "transport error";
  }
  return "unknown";
}

}  // namespace rivet
