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

#include "stream_port.hpp"

#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <vector>

#include <spdlog/spdlog.h>

namespace rivet::verbs::detail {
namespace {

bool read_exact(int fd, std::byte* buf, size_t n) {
  size_t got = 0;
  while (got < n) {
    ssize_t r = ::read(fd, buf + got, n - got);
    if (r == 0) return false;
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    got += static_cast<size_t>(r);
  }
  return true;
}

bool write_all(int fd, const std::byte* buf, size_t n) {
  size_t put = 0;
  while (put < n) {
    ssize_t r = ::send(fd, buf + put, n - put, MSG_NOSIGNAL);
    if (r < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    put += static_cast<size_t>(r);
  }
  return true;
}

}  // namespace

StreamPort::StreamPort(Network& net, Machine& machine, int fd)
    : net_(net), machine_(machine), fd_(fd) {}

StreamPort::~StreamPort() {
  ::shutdown(fd_, SHUT_RDWR);
  if (reader_.joinable()) reader_.join();
  ::close(fd_);
  fail_pending_reads();
}

void StreamPort::start(QueuePair* qp) {
  qp_ = qp;
  reader_ = std::thread([this] { reader_loop(); });
}

void StreamPort::send_connect(const wire::ConnectInfo& local) {
  auto payload = wire::encode_connect(local);
  wire::FrameHeader h{wire::MsgType::kConnect, local.qp_id, 0, 0,
                      static_cast<uint32_t>(payload.size())};
  send_frame(h, payload.data(), payload.size());
}

std::optional<wire::ConnectInfo> StreamPort::wait_peer(
    std::chrono::milliseconds timeout) {
  std::unique_lock lock(peer_mu_);
  peer_cv_.wait_for(lock, timeout, [this] { return peer_.has_value(); });
  return peer_;
}

bool StreamPort::send_frame(const wire::FrameHeader& header,
                            const std::byte* payload, uint64_t length) {
  std::byte head[wire::kHeaderSize];
  wire::encode_header(header, std::span<std::byte, wire::kHeaderSize>(head, wire::kHeaderSize));
  std::lock_guard lock(write_mu_);
  if (!write_all(fd_, head, sizeof(head))) return false;
  return length == 0 || write_all(fd_, payload, length);
}

bool StreamPort::write(RegionId region, uint64_t offset, const std::byte* src,
                       uint64_t length, QpStats*) {
  wire::FrameHeader h{wire::MsgType::kWrite, remote_qp_.load(), region, offset,
                      static_cast<uint32_t>(length)};
  return send_frame(h, src, length);
}

bool StreamPort::read(RegionId region, uint64_t offset, std::byte* dst,
                      uint64_t length) {
  auto pending = std::make_shared<PendingRead>();
  pending->dst = dst;
  pending->length = length;
  auto done = pending->done.get_future();
  {
    // Holding the write lock across enqueue and send keeps responses, which
    // arrive in request order, matched to the right request.
    std::lock_guard wlock(write_mu_);
    {
      std::lock_guard rlock(read_mu_);
      reads_.push_back(pending);
    }
    std::byte head[wire::kHeaderSize];
    wire::FrameHeader h{wire::MsgType::kReadReq, remote_qp_.load(), region,
                        offset, static_cast<uint32_t>(length)};
    wire::encode_header(h, std::span<std::byte, wire::kHeaderSize>(head, wire::kHeaderSize));
    if (!write_all(fd_, head, sizeof(head))) {
      return false;
    }
  }
  return done.get();
}

bool StreamPort::send(const QueuePair::RecvEntry&, const std::byte* src,
                      uint64_t length) {
  wire::FrameHeader h{wire::MsgType::kSend, remote_qp_.load(), 0, 0,
                      static_cast<uint32_t>(length)};
  return send_frame(h, src, length);
}

void StreamPort::fail_pending_reads() {
  std::lock_guard lock(read_mu_);
  for (auto& r : reads_) r->done.set_value(false);
  reads_.clear();
}

void StreamPort::reader_loop() {
  std::vector<std::byte> payload;
  for (;;) {
    std::byte head[wire::kHeaderSize];
    if (!read_exact(fd_, head, sizeof(head))) break;
    wire::DecodeError err{};
    auto h = wire::decode_header(
        std::span<const std::byte, wire::kHeaderSize>(head, wire::kHeaderSize), &err);
    if (!h) {
      spdlog::error("stream backend: undecodable frame header, closing link");
      break;
    }
    payload.resize(wire::payload_size(*h));
    if (!payload.empty() && !read_exact(fd_, payload.data(), payload.size())) break;

    switch (h->type) {
      case wire::MsgType::kSend:
        qp_->deliver_incoming_send(payload);
        break;
      case wire::MsgType::kWrite: {
        std::byte* dst = machine_.translate(h->region_id, h->offset, h->length);
        if (dst == nullptr) {
          remote_faults_.fetch_add(1);
        } else {
          net_.device_write(dst, payload.data(), h->length, nullptr);
        }
        break;
      }
      case wire::MsgType::kReadReq: {
        std::byte* src = machine_.translate(h->region_id, h->offset, h->length);
        wire::FrameHeader resp{wire::MsgType::kReadResp, remote_qp_.load(), 0,
                               h->offset, 0};
        if (src == nullptr) {
          remote_faults_.fetch_add(1);
          resp.region_id = 1;
          send_frame(resp, nullptr, 0);
        } else {
          std::vector<std::byte> copy(h->length);
          ordered_copy(copy.data(), src, h->length);
          resp.length = h->length;
          send_frame(resp, copy.data(), copy.size());
        }
        break;
      }
      case wire::MsgType::kReadResp: {
        std::shared_ptr<PendingRead> r;
        {
          std::lock_guard lock(read_mu_);
          if (reads_.empty()) break;
          r = reads_.front();
          reads_.pop_front();
        }
        bool ok = h->region_id == 0 && h->length == r->length;
        if (ok) ordered_copy(r->dst, payload.data(), r->length);
        r->done.set_value(ok);
        break;
      }
      case wire::MsgType::kConnect:
      case wire::MsgType::kConnectAck: {
        auto info = wire::decode_connect(payload);
        if (!info) {
          spdlog::error("stream backend: malformed connect payload");
          break;
        }
        remote_qp_.store(info->qp_id);
        {
          std::lock_guard lock(peer_mu_);
          peer_ = *info;
        }
        peer_cv_.notify_all();
        if (h->type == wire::MsgType::kConnect) {
          auto ack = wire::encode_connect(local_);
          wire::FrameHeader ah{wire::MsgType::kConnectAck, local_.qp_id, 0, 0,
                               static_cast<uint32_t>(ack.size())};
          send_frame(ah, ack.data(), ack.size());
        }
        break;
      }
    }
  }
  fail_pending_reads();
}

}  // namespace rivet::verbs::detail
