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

#include <cstdint>
#include <optional>

namespace rivet::verbs {

using MachineId = uint32_t;
using RegionId = uint32_t;
using QpId = uint32_t;

enum class Opcode : uint8_t { kSend, kRecv, kWrite, kRead };

enum class CompletionStatus : uint8_t { kOk, kFault };

enum class PostStatus : uint8_t {
  kOk,
  kOverflow,           // more than u_max unsignaled ops would be outstanding
  kLocalAccessFault,   // local segment outside a registered region
  kRemoteAccessFault,  // remote target outside a registered region
  kReceiverNotReady,   // SEND with no RECV posted at the peer
  kInvalidRequest,
  kCompletionQueueFull,
};

const char* to_string(Opcode op);
const char* to_string(PostStatus status);

struct LocalSegment {
  RegionId region = 0;
  uint64_t offset = 0;
  uint64_t length = 0;
};

struct RemoteTarget {
  RegionId region = 0;
  uint64_t offset = 0;
};

struct WorkRequest {
  Opcode op = Opcode::kWrite;
  LocalSegment local;
  std::optional<RemoteTarget> remote;
  bool signaled = false;
  uint64_t user_tag = 0;
};

struct CompletionEntry {
  QpId qp_id = 0;
  uint64_t user_tag = 0;
  CompletionStatus status = CompletionStatus::kOk;
  Opcode op = Opcode::kWrite;
  uint32_t byte_len = 0;
};

struct QpConfig {
  uint32_t u_max = 64;
};

struct QpStats {
  uint64_t sends = 0;
  uint64_t recvs_posted = 0;
  uint64_t recvs_consumed = 0;
  uint64_t writes = 0;
  uint64_t reads = 0;
  uint64_t signaled = 0;
  uint64_t unsignaled = 0;
  uint64_t bytes_sent = 0;
  uint64_t bytes_written = 0;
  uint64_t bytes_read = 0;
  uint64_t overflow_faults = 0;
  uint64_t access_faults = 0;
  uint64_t split_writes = 0;

  QpStats& operator+=(const QpStats& o);
};

}  // namespace rivet::verbs
