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

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rivet/verbs/types.hpp"

// Framed byte-stream encoding used by the stream backend. All integers are
// little-endian.
namespace rivet::verbs::wire {

inline constexpr uint32_t kMagic = 0x53524D41;
inline constexpr size_t kHeaderSize = 4 + 1 + 4 + 4 + 8 + 4;

enum class MsgType : uint8_t {
  kSend = 1,
  kWrite = 2,
  kReadReq = 3,
  kReadResp = 4,
  kConnect = 5,
  kConnectAck = 6,
};

struct FrameHeader {
  MsgType type = MsgType::kSend;
  uint32_t qp_id = 0;
  uint32_t region_id = 0;
  uint64_t offset = 0;
  uint32_t length = 0;

  bool operator==(const FrameHeader&) const = default;
};

// Number of payload bytes following the header. READ_REQ carries none; its
// length field is the requested byte count.
uint32_t payload_size(const FrameHeader& header);

void encode_header(const FrameHeader& header,
                   std::span<std::byte, kHeaderSize> out);

enum class DecodeError : uint8_t { kNone, kBadMagic, kBadType };

// Decodes exactly kHeaderSize bytes.
std::optional<FrameHeader> decode_header(
    std::span<const std::byte, kHeaderSize> in, DecodeError* error = nullptr);

std::vector<std::byte> encode_frame(const FrameHeader& header,
                                    std::span<const std::byte> payload);

// CONNECT / CONNECT_ACK payload.
struct ConnectInfo {
  uint32_t machine_id = 0;
  uint32_t qp_id = 0;
  uint32_t u_max = 0;

  bool operator==(const ConnectInfo&) const = default;
};
inline constexpr size_t kConnectInfoSize = 12;

std::array<std::byte, kConnectInfoSize> encode_connect(const ConnectInfo& info);
std::optional<ConnectInfo> decode_connect(std::span<const std::byte> in);

}  // namespace rivet::verbs::wire
