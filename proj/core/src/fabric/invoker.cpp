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

#include "rivet/fabric/invoker.hpp"

#include "rivet/aggregator/aggregator.hpp"
#include "rivet/common/spin.hpp"
#include "rivet/fabric/system.hpp"
#include "rivet/messenger/channel.hpp"
#include "system_calls.hpp"

namespace rivet::fabric {

bool SendPath::submit(uint32_t dest, uint64_t fn, const ContextParts& context,
                      const std::span<const std::byte>* payload,
                      std::span<Synchronizer* const> syncs) {
  return self_.system().send_record(self_, dest, fn, context, payload, syncs);
}

bool MessengerPath::submit(uint32_t dest, uint64_t fn, const ContextParts& context,
                           const std::span<const std::byte>* payload,
                           std::span<Synchronizer* const> syncs) {
  System& system = self_.system();
  if (dest >= system.thread_count()) {
    throw Error(Errc::kInvalidArgument, "unknown destination " + std::to_string(dest));
  }
  system.freeze_registry();
  const uint64_t size = serialized_size(context.size(), payload != nullptr,
                                        payload ? payload->size() : 0);
  messenger::SenderChannel& ch = self_.messenger().sender(dest);
  if (size > ch.capacity()) {
    throw Error(Errc::kTooLarge, "record of " + std::to_string(size) +
                                     " bytes exceeds the chunk capacity");
  }
  if (!ch.would_accept(size)) return false;
  mem::RegisteredMemory rec = self_.scratch(size);
  serialize_ready(rec.bytes(), fn, context, payload);
  system.count_submitted(1);
  if (!ch.send(rec, syncs)) {
    system.count_submitted(-1);
    return false;
  }
  return true;
}

bool AggregatorPath::submit(uint32_t dest, uint64_t fn, const ContextParts& context,
                            const std::span<const std::byte>* payload,
                            std::span<Synchronizer* const> syncs) {
  System& system = self_.system();
  if (dest >= system.thread_count()) {
    throw Error(Errc::kInvalidArgument, "unknown destination " + std::to_string(dest));
  }
  system.freeze_registry();
  system.count_submitted(1);
  if (!self_.aggregator().call(dest, fn, context, payload, syncs)) {
    system.count_submitted(-1);
    return false;
  }
  return true;
}

void AggregatorPath::flush() { self_.aggregator().flush_all(); }

void Invoker::backpressure_pause() {
  self_.progress();
  std::this_thread::yield();
}

bool Invoker::submit_tracked(uint32_t dest, uint64_t fn, const ContextParts& context,
                             const std::span<const std::byte>* payload,
                             Synchronizer* sync, int64_t expected,
                             bool transmit_sync) {
  auto lock = self_.guard();
  if (sync) sync->add(expected);
  Synchronizer* one[1] = {sync};
  std::span<Synchronizer* const> syncs;
  if (sync && transmit_sync) syncs = std::span<Synchronizer* const>(one, 1);
  const bool ok = path_.submit(dest, fn, context, payload, syncs);
  if (!ok && sync) sync->cancel(expected);
  return ok;
}

bool Invoker::call(uint32_t dest, uint64_t fn, std::span<const std::byte> context,
                   Synchronizer* sync) {
  if (sync == nullptr || sync->mode() == NotifyMode::kOnTransmit) {
    return submit_tracked(dest, fn, {context, {}}, nullptr, sync, 1, true);
  }
  sys::ConsumePrefix p{fn, sys::notify_spec(sync)};
  return submit_tracked(dest, sys::kConsume, {bytes_of(p), context}, nullptr, sync, 1,
                        false);
}

bool Invoker::call_buffer(uint32_t dest, uint64_t fn, std::span<const std::byte> context,
                          std::span<const std::byte> payload, Synchronizer* sync) {
  if (sync == nullptr || sync->mode() == NotifyMode::kOnTransmit) {
    return submit_tracked(dest, fn, {context, {}}, &payload, sync, 1, true);
  }
  sys::ConsumePrefix p{fn, sys::notify_spec(sync)};
  return submit_tracked(dest, sys::kConsume, {bytes_of(p), context}, &payload, sync, 1,
                        false);
}

bool Invoker::call_buffer_write(uint32_t dest, uint64_t fn,
                                std::span<const std::byte> context,
                                const mem::RegisteredMemory& source,
                                const mem::RemoteLocator& dest_buffer,
                                Synchronizer* sync) {
  auto lock = self_.guard();
  if (source.length() > dest_buffer.length) {
    throw Error(Errc::kInvalidArgument, "destination buffer is smaller than the source");
  }
  const bool consume = sync != nullptr && sync->mode() == NotifyMode::kOnRemoteConsume;
  sys::BufferWrittenPrefix p{};
  p.fn = fn;
  p.region = dest_buffer.region;
  p.consume = consume ? 1 : 0;
  p.offset = dest_buffer.offset;
  p.length = source.length();
  p.notify = consume ? sys::notify_spec(sync) : sys::NotifySpec{};
  // Check acceptance first so a refused call leaves the destination alone.
  if (path_.kind() == PathKind::kWrite) {
    const uint64_t size = serialized_size(sizeof(p) + context.size(), false, 0);
    if (!self_.messenger().sender(dest).would_accept(size)) return false;
  }
  const transmit::Ticket t = self_.transmitter_to(dest).write(source, dest_buffer);
  if (!t.ok()) {
    throw Error(Errc::kTransport,
                std::string("buffer write failed: ") + verbs::to_string(t.status));
  }
  return submit_tracked(dest, sys::kBufferWritten, {bytes_of(p), context}, nullptr, sync,
                        1, !consume);
}

bool Invoker::call_buffer_read(uint32_t dest, uint64_t fn,
                               std::span<const std::byte> context,
                               const mem::RegisteredMemory& source, Synchronizer* sync,
                               bool async) {
  const mem::RemoteLocator loc = source.locator();
  sys::BufferReadPrefix p{};
  p.fn = fn;
  p.machine = loc.machine;
  p.region = loc.region;
  p.offset = loc.offset;
  p.length = loc.length;
  p.async = async ? 1 : 0;
  p.consume = sync != nullptr && sync->mode() == NotifyMode::kOnRemoteConsume ? 1 : 0;
  p.notify = sys::notify_spec(sync);
  return submit_tracked(dest, sys::kBufferRead, {bytes_of(p), context}, nullptr, sync, 1,
                        false);
}

bool Invoker::call_return(uint32_t dest, uint64_t fn, std::span<const std::byte> context,
                          const mem::RemoteLocator& origin, Synchronizer* sync) {
  sys::ReturnPrefix p{};
  p.fn = fn;
  p.machine = origin.machine;
  p.region = origin.region;
  p.offset = origin.offset;
  p.length = origin.length;
  p.notify = sys::notify_spec(sync);
  return submit_tracked(dest, sys::kReturn, {bytes_of(p), context}, nullptr, sync, 1,
                        false);
}

bool Invoker::broadcast(uint64_t fn, std::span<const std::byte> context,
                        Synchronizer* sync) {
  sys::BroadcastPrefix p{};
  p.fn = fn;
  p.root = self_.flat();
  p.arity = self_.system().config().broadcast_arity;
  p.notify = sys::notify_spec(sync);
  const bool ok =
      submit_tracked(self_.flat(), sys::kBroadcast, {bytes_of(p), context}, nullptr, sync,
                     self_.system().thread_count(), false);
  if (ok && path_.kind() == PathKind::kAggregated) path_.flush();
  return ok;
}

bool Invoker::broadcast_buffer(uint64_t fn, std::span<const std::byte> context,
                               std::span<const std::byte> payload, Synchronizer* sync) {
  sys::BroadcastPrefix p{};
  p.fn = fn;
  p.root = self_.flat();
  p.arity = self_.system().config().broadcast_arity;
  p.notify = sys::notify_spec(sync);
  const bool ok =
      submit_tracked(self_.flat(), sys::kBroadcast, {bytes_of(p), context}, &payload, sync,
                     self_.system().thread_count(), false);
  if (ok && path_.kind() == PathKind::kAggregated) path_.flush();
  return ok;
}

}  // namespace rivet::fabric
