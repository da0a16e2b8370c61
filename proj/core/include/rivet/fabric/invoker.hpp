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
#include <span>

#include "rivet/common/synchronizer.hpp"
#include "rivet/fabric/registry.hpp"
#include "rivet/fabric/serialized_call.hpp"
#include "rivet/regmem/registered_memory.hpp"

namespace rivet::fabric {

class ThreadContext;

// Transport for serialized calls. submit() returns false, with nothing sent,
// under back-pressure.
class CallPath {
 public:
  virtual ~CallPath() = default;
  virtual PathKind kind() const = 0;
  virtual bool submit(uint32_t dest, uint64_t fn, const ContextParts& context,
                      const std::span<const std::byte>* payload,
                      std::span<Synchronizer* const> syncs) = 0;
  // Pushes out anything the path is holding back.
  virtual void flush() {}
};

class SendPath final : public CallPath {
 public:
  explicit SendPath(ThreadContext& self) : self_(self) {}
  PathKind kind() const override { return PathKind::kSend; }
  bool submit(uint32_t dest, uint64_t fn, const ContextParts& context,
              const std::span<const std::byte>* payload,
              std::span<Synchronizer* const> syncs) override;

 private:
  ThreadContext& self_;
};

class MessengerPath final : public CallPath {
 public:
  explicit MessengerPath(ThreadContext& self) : self_(self) {}
  PathKind kind() const override { return PathKind::kWrite; }
  bool submit(uint32_t dest, uint64_t fn, const ContextParts& context,
              const std::span<const std::byte>* payload,
              std::span<Synchronizer* const> syncs) override;

 private:
  ThreadContext& self_;
};

class AggregatorPath final : public CallPath {
 public:
  explicit AggregatorPath(ThreadContext& self) : self_(self) {}
  PathKind kind() const override { return PathKind::kAggregated; }
  bool submit(uint32_t dest, uint64_t fn, const ContextParts& context,
              const std::span<const std::byte>* payload,
              std::span<Synchronizer* const> syncs) override;
  void flush() override;

 private:
  ThreadContext& self_;
};

inline std::span<const std::byte> as_bytes_of(const void* p, size_t n) {
  return {static_cast<const std::byte*>(p), n};
}
template <class T>
std::span<const std::byte> bytes_of(const T& v) {
  return as_bytes_of(&v, sizeof(T));
}

// Remote invocation primitives over one call path. Every primitive returns
// false, with no side effects, when the path refuses the record; callers
// retry after making progress. A synchronizer passed in is incremented for
// each expected completion; kOnTransmit ones are decremented when the local
// transport work finishes and kOnRemoteConsume ones when the destination has
// run the function.
class Invoker {
 public:
  Invoker(ThreadContext& self, CallPath& path) : self_(self), path_(path) {}

  PathKind kind() const { return path_.kind(); }
  CallPath& path() { return path_; }

  bool call(uint32_t dest, uint64_t fn, std::span<const std::byte> context,
            Synchronizer* sync = nullptr);

  // Payload copied into the record.
  bool call_buffer(uint32_t dest, uint64_t fn, std::span<const std::byte> context,
                   std::span<const std::byte> payload, Synchronizer* sync = nullptr);
  // Payload written to `dest_buffer` first; the record follows on the same
  // queue pair and the function sees the destination copy.
  bool call_buffer_write(uint32_t dest, uint64_t fn,
                         std::span<const std::byte> context,
                         const mem::RegisteredMemory& source,
                         const mem::RemoteLocator& dest_buffer,
                         Synchronizer* sync = nullptr);
  // The destination reads `source` before running the function. `source`
  // must stay untouched until `sync` reports completion. With `async` the
  // read runs on a helper thread and the function on the next poll.
  bool call_buffer_read(uint32_t dest, uint64_t fn,
                        std::span<const std::byte> context,
                        const mem::RegisteredMemory& source,
                        Synchronizer* sync = nullptr, bool async = false);
  // The function's result bytes are written to `origin`, then `sync` (if
  // any) is notified. Notification always follows the write-back.
  bool call_return(uint32_t dest, uint64_t fn, std::span<const std::byte> context,
                   const mem::RemoteLocator& origin, Synchronizer* sync = nullptr);

  // Runs fn on every worker, this one included, along a tree rooted here.
  // `sync` is incremented by the thread count and notified per invocation.
  bool broadcast(uint64_t fn, std::span<const std::byte> context,
                 Synchronizer* sync = nullptr);
  bool broadcast_buffer(uint64_t fn, std::span<const std::byte> context,
                        std::span<const std::byte> payload,
                        Synchronizer* sync = nullptr);

  // Retries `attempt` until it returns true, polling in between.
  template <class F>
  void retry(F&& attempt) {
    while (!attempt()) backpressure_pause();
  }

  void flush() { path_.flush(); }

 private:
  bool submit_tracked(uint32_t dest, uint64_t fn, const ContextParts& context,
                      const std::span<const std::byte>* payload,
                      Synchronizer* sync, int64_t expected,
                      bool transmit_sync);
  void backpressure_pause();

  ThreadContext& self_;
  CallPath& path_;
};

}  // namespace rivet::fabric
