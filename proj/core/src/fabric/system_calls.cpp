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

#include "system_calls.hpp"

#include <cstring>

#include <spdlog/spdlog.h>

#include "rivet/aggregator/aggregator.hpp"
#include "rivet/common/spin.hpp"
#include "rivet/fabric/invoker.hpp"
#include "rivet/fabric/system.hpp"
#include "rivet/messenger/channel.hpp"

namespace rivet::fabric::detail {
namespace {

template <class T>
bool split_prefix(const CallView& view, T* prefix, std::span<const std::byte>* rest) {
  if (view.context.size() < sizeof(T)) return false;
  std::memcpy(prefix, view.context.data(), sizeof(T));
  *rest = view.context.subspan(sizeof(T));
  return true;
}

// Runs a user function on behalf of a system wrapper. Returns false when the
// id is unknown.
bool run_user(System& system, ThreadContext& self, const ThreadId& source,
              uint64_t fn_id, std::span<const std::byte> context,
              std::span<const std::byte> payload, bool has_payload, PathKind path,
              std::vector<std::byte>* result = nullptr) {
  const Function* fn = system.registry().find(fn_id);
  if (fn == nullptr) {
    spdlog::error("worker {}: no function registered under id {}", self.flat(), fn_id);
    return false;
  }
  Invocation inv;
  inv.system = &system;
  inv.self = &self;
  inv.source = source;
  inv.function_id = fn_id;
  inv.context = context;
  inv.payload = payload;
  inv.has_payload = has_payload;
  inv.path = path;
  inv.result = result;
  (*fn)(inv);
  return true;
}

void notify_source(System& system, ThreadContext& self, const ThreadId& source,
                   const sys::NotifySpec& spec, bool failed) {
  if (spec.kind == sys::kNone) return;
  if (spec.kind == sys::kBySlot && !failed) {
    const uint64_t count =
        self.bump_write_back(spec.slots_machine, spec.slots_region, spec.slots_offset);
    mem::RegisteredMemory word = self.scratch(8);
    std::memcpy(word.data(), &count, 8);
    mem::RemoteLocator slot{spec.slots_machine, spec.slots_region,
                            spec.slots_offset + 8ull * self.flat(), 8};
    const transmit::Ticket t = self.transmitter_to(source.flat).write(word, slot);
    if (!t.ok()) {
      spdlog::error("worker {}: write-back notification failed: {}", self.flat(),
                    verbs::to_string(t.status));
    }
    return;
  }
  sys::NotifyArgs args{spec.token, 1, failed ? 1u : 0u};
  system.send_record_blocking(self, kServiceDest | source.process, sys::kNotify,
                              ContextParts{bytes_of(args), {}});
}

// Pushes a record through `path`, polling until accepted.
void forward(ThreadContext& self, PathKind path, uint32_t dest, uint64_t fn,
             std::span<const std::byte> context, const CallView& view) {
  Invoker& inv = self.invoker(path);
  const std::span<const std::byte> payload = view.payload;
  const std::span<const std::byte>* pay = view.has_payload() ? &payload : nullptr;
  Backoff backoff;
  while (!inv.path().submit(dest, fn, ContextParts{context, {}}, pay, {})) {
    backoff.pause();
  }
  if (path == PathKind::kAggregated) self.aggregator().flush(dest);
}

void handle_buffer_read(System& system, ThreadContext& self, const ThreadId& source,
                        const sys::BufferReadPrefix& p,
                        std::span<const std::byte> user_ctx, PathKind path) {
  const mem::RemoteLocator origin{p.machine, p.region, p.offset, p.length};
  // Reads into arena memory so either this thread or a helper may own it.
  auto read_into = [origin, src = source.flat](ThreadContext& reader) {
    mem::RegisteredMemory buf = reader.process().arena().allocate(origin.length);
    Synchronizer done;
    done.add();
    const transmit::Ticket t = reader.transmitter_to(src).read(buf, origin, &done);
    if (!t.ok()) {
      reader.process().arena().release(buf);
      return std::optional<mem::RegisteredMemory>();
    }
    while (!done.done()) {
      reader.transmitter_to(src).flush();
    }
    return std::optional<mem::RegisteredMemory>(buf);
  };

  if (!p.async) {
    auto buf = read_into(self);
    if (!buf) {
      notify_source(system, self, source, p.notify, true);
      system.count_invoked(self);
      return;
    }
    if (!p.consume) notify_source(system, self, source, p.notify, false);
    run_user(system, self, source, p.fn, user_ctx, buf->bytes(), true, path);
    self.process().arena().release(*buf);
    if (p.consume) notify_source(system, self, source, p.notify, false);
    system.count_invoked(self);
    return;
  }

  std::vector<std::byte> ctx_copy(user_ctx.begin(), user_ctx.end());
  ThreadContext* worker = &self;
  self.process().run_on_helper(
      [&system, worker, source, p, path, read_into,
       ctx_copy = std::move(ctx_copy)](ThreadContext& helper) mutable {
        auto buf = read_into(helper);
        worker->defer([&system, source, p, path, buf,
                       ctx_copy = std::move(ctx_copy)](ThreadContext& self) {
          if (!buf) {
            notify_source(system, self, source, p.notify, true);
            system.count_invoked(self);
            return;
          }
          if (!p.consume) notify_source(system, self, source, p.notify, false);
          run_user(system, self, source, p.fn, ctx_copy, buf->bytes(), true, path);
          self.process().arena().release(*buf);
          if (p.consume) notify_source(system, self, source, p.notify, false);
          system.count_invoked(self);
        });
      });
}

void handle_return(System& system, ThreadContext& self, const ThreadId& source,
                   const sys::ReturnPrefix& p, std::span<const std::byte> user_ctx,
                   const CallView& view, PathKind path) {
  std::vector<std::byte> result;
  const bool ran = run_user(system, self, source, p.fn, user_ctx, view.payload,
                            view.has_payload(), path, &result);
  bool failed = !ran;
  const uint64_t n = std::min<uint64_t>(result.size(), p.length);
  if (ran && n > 0) {
    const uint64_t padded = (n + 7) & ~uint64_t{7};
    mem::RegisteredMemory buf = self.scratch(padded);
    std::memset(buf.data(), 0, padded);
    std::memcpy(buf.data(), result.data(), n);
    mem::RemoteLocator origin{p.machine, p.region, p.offset, n};
    const transmit::Ticket t =
        self.transmitter_to(source.flat).write(buf.slice(0, n), origin);
    failed = !t.ok();
  }
  // Same queue pair as the write-back, so the notification lands after it.
  notify_source(system, self, source, p.notify, failed);
  system.count_invoked(self);
}

void handle_broadcast(System& system, ThreadContext& self, const ThreadId& /*parent*/,
                      const sys::BroadcastPrefix& p, std::span<const std::byte> user_ctx,
                      const CallView& view, PathKind path) {
  const uint32_t n = system.thread_count();
  const uint32_t rel = (self.flat() + n - p.root) % n;
  for (uint32_t k = 1; k <= p.arity; ++k) {
    const uint64_t child_rel = uint64_t{rel} * p.arity + k;
    if (child_rel >= n) break;
    const uint32_t child = static_cast<uint32_t>((p.root + child_rel) % n);
    forward(self, path, child, sys::kBroadcast, view.context, view);
  }
  // The function sees the originating thread, not its tree parent.
  const ThreadId root = system.thread_id(p.root);
  const bool ran = run_user(system, self, root, p.fn, user_ctx, view.payload,
                            view.has_payload(), path);
  notify_source(system, self, root, p.notify, !ran);
  system.count_invoked(self);
}

}  // namespace

void dispatch_system(System& system, ThreadContext& self, const ThreadId& source,
                     const CallView& view, PathKind path) {
  std::span<const std::byte> rest;
  switch (view.function_id) {
    case sys::kConsume: {
      sys::ConsumePrefix p;
      if (!split_prefix(view, &p, &rest)) break;
      const bool ran = run_user(system, self, source, p.fn, rest, view.payload,
                                view.has_payload(), path);
      notify_source(system, self, source, p.notify, !ran);
      system.count_invoked(self);
      return;
    }
    case sys::kBufferWritten: {
      sys::BufferWrittenPrefix p;
      if (!split_prefix(view, &p, &rest)) break;
      const std::byte* data =
          self.process().arena().machine().translate(p.region, p.offset, p.length);
      bool ran = false;
      if (data != nullptr) {
        ran = run_user(system, self, source, p.fn, rest, {data, p.length}, true, path);
      }
      if (p.consume) notify_source(system, self, source, p.notify, !ran);
      system.count_invoked(self);
      return;
    }
    case sys::kBufferRead: {
      sys::BufferReadPrefix p;
      if (!split_prefix(view, &p, &rest)) break;
      handle_buffer_read(system, self, source, p, rest, path);
      return;
    }
    case sys::kReturn: {
      sys::ReturnPrefix p;
      if (!split_prefix(view, &p, &rest)) break;
      handle_return(system, self, source, p, rest, view, path);
      return;
    }
    case sys::kBroadcast: {
      sys::BroadcastPrefix p;
      if (!split_prefix(view, &p, &rest)) break;
      handle_broadcast(system, self, source, p, rest, view, path);
      return;
    }
    default:
      break;
  }
  spdlog::error("worker {}: bad system record {:#x}", self.flat(), view.function_id);
  system.count_invoked(self);
}

void dispatch_service_call(System& system, ThreadContext& service,
                           const ThreadId& source, const CallView& view) {
  switch (view.function_id) {
    case sys::kNotify: {
      sys::NotifyArgs a;
      std::span<const std::byte> rest;
      if (!split_prefix(view, &a, &rest)) break;
      auto* sync = reinterpret_cast<Synchronizer*>(a.token);
      if (a.failed) {
        sync->fail(static_cast<int64_t>(a.count));
      } else {
        sync->notify(static_cast<int64_t>(a.count));
      }
      return;
    }
    case sys::kChunkAlloc: {
      sys::ChunkAllocArgs a;
      std::span<const std::byte> rest;
      if (!split_prefix(view, &a, &rest)) break;
      const SystemConfig& c = system.config();
      Process& proc = service.process();
      messenger::ChunkGrant grant;
      grant.sender = a.sender;
      grant.initial = a.initial != 0;
      grant.write_back = {a.wb_machine, a.wb_region, a.wb_offset, 8};
      const uint64_t resp_len = sys::chunk_response_size(a.count);
      mem::RegisteredMemory resp = service.scratch(resp_len);
      std::byte* r = resp.data();
      const uint64_t count = a.count;
      std::memcpy(r, &count, 8);
      for (uint32_t i = 0; i < a.count; ++i) {
        mem::RegisteredMemory chunk = proc.arena().allocate(c.chunk_size);
        std::memset(chunk.data(), 0, c.chunk_size);
        if (grant.initial && i == 0) {
          const uint64_t producer = a.sender;
          std::memcpy(chunk.data() + messenger::kSetupProducerId, &producer, 8);
          std::memcpy(chunk.data() + messenger::kSetupWriteBack, &a.wb_machine, 4);
          std::memcpy(chunk.data() + messenger::kSetupWriteBack + 4, &a.wb_region, 4);
          std::memcpy(chunk.data() + messenger::kSetupWriteBackOffset, &a.wb_offset, 8);
        }
        const uint64_t region = chunk.region()->id();
        const uint64_t offset = chunk.offset();
        std::memcpy(r + 8 + 16 * i, &region, 8);
        std::memcpy(r + 16 + 16 * i, &offset, 8);
        grant.chunks.push_back(chunk);
      }
      const uint64_t done = 1;
      std::memcpy(r + resp_len - 8, &done, 8);
      system.context(a.receiver).messenger().grants().push(std::move(grant));
      mem::RemoteLocator to{a.resp_machine, a.resp_region, a.resp_offset, resp_len};
      const transmit::Ticket t = proc.transmitter_to(source.process).write(resp, to);
      if (!t.ok()) {
        spdlog::error("service {}: chunk grant write failed: {}", proc.index(),
                      verbs::to_string(t.status));
      }
      return;
    }
    default:
      break;
  }
  spdlog::error("service: bad system record {:#x}", view.function_id);
}

}  // namespace rivet::fabric::detail
