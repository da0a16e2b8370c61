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

#include "rivet/verbs/wire.hpp"

#include <cstring>

namespace rivet::verbs::wire {
namespace {

template <class T>
void put_le(std::byte* out, T value) {
  for (size_t i = 0; i < sizeof(T); ++i) {
    out[i] = static_cast<std::byte>((static_cast<uint64_t>(value) >> (8 * i)) & 0xff);
  }
}

template <class T>
T get_le(const std::byte* in) {
  uint64_t v = 0;
  for (size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<uint64_t>(std::to_integer<uint8_t>(in[i])) << (8 * i);
  }
  return static_cast<T>(v);
}

}  // namespace

uint32_t payload_size(const FrameHeader& header) {
  return header.type == MsgType::kReadReq ? 0 : header.length;
}

void encode_header(const FrameHeader& header,
                   std::span<std::byte, kHeaderSize> out) {
  std::byte* p = out.data();
  put_le<uint32_t>(p, kMagic);
  p[4] = static_cast<std::byte>(header.type);
  put_le<uint32_t>(p + 5, header.qp_id);
  put_le<uint32_t>(p + 9, header.region_id);
  put_le<uint64_t>(p + 13, header.offset);
  put_le<uint32_t>(p + 21, header.length);
}

std::optional<FrameHeader> decode_header(
    std::span<const std::byte, kHeaderSize> in, DecodeError* error) {
  const std::byte* p = in.data();
  auto fail = [&](DecodeError e) -> std::optional<FrameHeader> {
    if (error) *error = e;
    return std::nullopt;
  };
  if (get_le<uint32_t>(p) != kMagic) return fail(DecodeError::kBadMagic);
  uint8_t type = std::to_integer<uint8_t>(p[4]);
  if (type < 1 || type > 6) return fail(DecodeError::kBadType);
  FrameHeader h;
  h.type = static_cast<MsgType>(type);
  h.qp_id = get_le<uint32_t>(p + 5);
  h.region_id = get_le<uint32_t>(p + 9);
  h.offset = get_le<uint64_t>(p + 13);
  h.length = get_le<uint32_t>(p + 21);
  if (error) *error = DecodeError::kNone;
  return h;
}

std::vector<std::byte> encode_frame(const FrameHeader& header,
                                    std::span<const std::byte> payload) {
  std::vector<std::byte> out(kHeaderSize + payload.size());
  encode_header(header, std::span<std::byte, kHeaderSize>(out.data(), kHeaderSize));
  if (!payload.empty()) {
    std::memcpy(out.data() + kHeaderSize, payload.data(), payload.size());
  }
  return out;
}

std::array<std::byte, kConnectInfoSize> encode_connect(const ConnectInfo& info) {
  std::array<std::byte, kConnectInfoSize> out{};
  put_le<uint32_t>(out.data(), info.machine_id);
  put_le<uint32_t>(out.data() + 4, info.qp_id);
  put_le<uint32_t>(out.data() + 8, info.u_max);
  return out;
}

std::optional<ConnectInfo> decode_connect(std::span<const std::byte> in) {
  if (in.size() != kConnectInfoSize) return std::nullopt;
  ConnectInfo info;
  info.machine_id = get_le<uint32_t>(in.data());
  info.qp_id = get_le<uint32_t>(in.data() + 4);
  info.u_max = get_le<uint32_t>(in.data() + 8);
  return info;
}

}  // namespace rivet::verbs::wire
