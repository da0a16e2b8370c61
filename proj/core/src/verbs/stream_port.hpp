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
#include <condition_variable>
#include <deque>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include "link.hpp"
#include "rivet/verbs/wire.hpp"

namespace rivet::verbs::detail {

// Stream backend endpoint: frames work requests over a connected byte
// stream and applies the peer's frames to the local machine.
class StreamPort final : public Link {
 public:
  StreamPort(Network& net, Machine& machine, int fd);
  ~StreamPort() override;

  void start(QueuePair* qp);
  void send_connect(const wire::ConnectInfo& local);
  std::optional<wire::ConnectInfo> wait_peer(std::chrono::milliseconds timeout);
  void set_local_info(const wire::ConnectInfo& local) { local_ = local; }

  PostStatus check_remote(RegionId, uint64_t, uint64_t) override {
    return PostStatus::kOk;
  }
  PostStatus reserve_recv(uint64_t, QueuePair::RecvEntry*) override {
    return PostStatus::kOk;
  }
  bool write(RegionId region, uint64_t offset, const std::byte* src,
             uint64_t length, QpStats* stats) override;
  bool read(RegionId region, uint64_t offset, std::byte* dst,
            uint64_t length) override;
  bool send(const QueuePair::RecvEntry& reserved, const std::byte* src,
            uint64_t length) override;

  uint64_t remote_faults() const { return remote_faults_.load(); }

 private:
  struct PendingRead {
    std::byte* dst = nullptr;
    uint64_t length = 0;
    std::promise<bool> done;
  };

  void reader_loop();
  bool send_frame(const wire::FrameHeader& header, const std::byte* payload,
                  uint64_t length);
  void fail_pending_reads();

  Network& net_;
  Machine& machine_;
  int fd_;
  QueuePair* qp_ = nullptr;
  std::thread reader_;
  std::mutex write_mu_;
  std::mutex read_mu_;
  std::deque<std::shared_ptr<PendingRead>> reads_;

  wire::ConnectInfo local_{};
  std::mutex peer_mu_;
  std::condition_variable peer_cv_;
  std::optional<wire::ConnectInfo> peer_;
  std::atomic<uint32_t> remote_qp_{0};
  std::atomic<uint64_t> remote_faults_{0};
};

}  // namespace rivet::verbs::detail
