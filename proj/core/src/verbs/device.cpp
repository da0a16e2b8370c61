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

#include "rivet/verbs/device.hpp"

#include <sys/socket.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <new>

#include "link.hpp"
#include "rivet/common/error.hpp"
#include "stream_port.hpp"

namespace rivet::verbs {

const char* to_string(Opcode op) {
  switch (op) {
    case Opcode::kSend: return "SEND";
    case Opcode::kRecv: return "RECV";
    case Opcode::kWrite: return "WRITE";
    case Opcode::kRead: return "READ";
  }
  return "?";
}

const char* to_string(PostStatus status) {
  switch (status) {
    case PostStatus::kOk: return "ok";
    case PostStatus::kOverflow: return "unsignaled overflow";
    case PostStatus::kLocalAccessFault: return "local access fault";
    case PostStatus::kRemoteAccessFault: return "remote access fault";
    case PostStatus::kReceiverNotReady: return "receiver not ready";
    case PostStatus::kInvalidRequest: return "invalid request";
    case PostStatus::kCompletionQueueFull: return "completion queue full";
  }
  return "?";
}

QpStats& QpStats::operator+=(const QpStats& o) {
  sends += o.sends;
  recvs_posted += o.recvs_posted;
  recvs_consumed += o.recvs_consumed;
  writes += o.writes;
  reads += o.reads;
  signaled += o.signaled;
  unsignaled += o.unsignaled;
  bytes_sent += o.bytes_sent;
  bytes_written += o.bytes_written;
  bytes_read += o.bytes_read;
  overflow_faults += o.overflow_faults;
  access_faults += o.access_faults;
  split_writes += o.split_writes;
  return *this;
}

namespace {

void descending_copy(std::byte* dst, const std::byte* src, uint64_t len) {
  auto* db = reinterpret_cast<unsigned char*>(dst);
  auto* sb = reinterpret_cast<unsigned char*>(const_cast<std::byte*>(src));
  const auto d = reinterpret_cast<uintptr_t>(dst);
  const auto s = reinterpret_cast<uintptr_t>(src);
  if (((d | s | len) & 7) == 0) {
    auto* dw = reinterpret_cast<uint64_t*>(dst);
    auto* sw = reinterpret_cast<uint64_t*>(const_cast<std::byte*>(src));
    for (uint64_t w = len / 8; w-- > 0;) {
      uint64_t v = std::atomic_ref<uint64_t>(sw[w]).load(std::memory_order_relaxed);
      std::atomic_ref<uint64_t>(dw[w]).store(v, std::memory_order_release);
    }
    return;
  }
  for (uint64_t i = len; i-- > 0;) {
    unsigned char v = std::atomic_ref<unsigned char>(sb[i]).load(std::memory_order_relaxed);
    std::atomic_ref<unsigned char>(db[i]).store(v, std::memory_order_release);
  }
}

}  // namespace

void ordered_copy(std::byte* dst, const std::byte* src, uint64_t len) {
  const auto d = reinterpret_cast<uintptr_t>(dst);
  const auto s = reinterpret_cast<uintptr_t>(src);
  uint64_t i = 0;
  if (((d | s) & 7) == 0) {
    auto* dw = reinterpret_cast<uint64_t*>(dst);
    auto* sw = reinterpret_cast<uint64_t*>(const_cast<std::byte*>(src));
    const uint64_t words = len / 8;
    for (uint64_t w = 0; w < words; ++w) {
      uint64_t v = std::atomic_ref<uint64_t>(sw[w]).load(std::memory_order_relaxed);
      std::atomic_ref<uint64_t>(dw[w]).store(v, std::memory_order_release);
    }
    i = words * 8;
  }
  auto* db = reinterpret_cast<unsigned char*>(dst);
  auto* sb = reinterpret_cast<unsigned char*>(const_cast<std::byte*>(src));
  for (; i < len; ++i) {
    unsigned char v = std::atomic_ref<unsigned char>(sb[i]).load(std::memory_order_relaxed);
    std::atomic_ref<unsigned char>(db[i]).store(v, std::memory_order_release);
  }
}

// ---------------------------------------------------------------------------
// MemoryRegion / Machine

MemoryRegion::MemoryRegion(RegionId id, MachineId machine, uint32_t zone,
                           uint64_t length)
    : id_(id), machine_(machine), zone_(zone), length_(length) {
  data_ = static_cast<std::byte*>(
      ::operator new(length, std::align_val_t{64}));
  std::memset(data_, 0, length);
}

MemoryRegion::~MemoryRegion() {
  ::operator delete(data_, std::align_val_t{64});
}

Machine::Machine(MachineId id, const MachineConfig& config)
    : id_(id), config_(config) {
  table_ = std::make_unique<std::atomic<MemoryRegion*>[]>(config_.max_regions);
  for (uint32_t i = 0; i < config_.max_regions; ++i) table_[i] = nullptr;
}

Machine::~Machine() = default;

MemoryRegion& Machine::register_memory(uint32_t zone, uint64_t length) {
  if (zone >= config_.zones) {
    throw Error(Errc::kUnknownZone, "zone " + std::to_string(zone) +
                                        " does not exist on machine " +
                                        std::to_string(id_));
  }
  if (length == 0) throw Error(Errc::kInvalidArgument, "zero-length registration");
  std::lock_guard lock(mu_);
  if (next_id_ >= config_.max_regions) {
    throw Error(Errc::kCapacity, "region table full");
  }
  if (config_.registration_cap_bytes != 0 &&
      registered_bytes_.load() + length > config_.registration_cap_bytes) {
    throw Error(Errc::kCapacity, "registration capacity exhausted");
  }
  RegionId id = next_id_++;
  storage_.push_back(std::make_unique<MemoryRegion>(id, id_, zone, length));
  MemoryRegion* region = storage_.back().get();
  table_[id].store(region, std::memory_order_release);
  registrations_.fetch_add(1);
  registered_bytes_.fetch_add(length);
  return *region;
}

void Machine::deregister_memory(RegionId id) {
  std::lock_guard lock(mu_);
  if (id >= config_.max_regions) return;
  MemoryRegion* region = table_[id].exchange(nullptr);
  if (region != nullptr) registered_bytes_.fetch_sub(region->length());
  // Storage stays alive until the machine goes away so racing translations
  // never dangle.
}

MemoryRegion* Machine::find(RegionId id) const {
  if (id >= config_.max_regions) return nullptr;
  return table_[id].load(std::memory_order_acquire);
}

std::byte* Machine::translate(RegionId id, uint64_t offset,
                              uint64_t length) const {
  MemoryRegion* region = find(id);
  if (region == nullptr || !region->contains(offset, length)) return nullptr;
  return region->data() + offset;
}

// ---------------------------------------------------------------------------
// CompletionQueue

bool CompletionQueue::push(const Slot& slot) {
  std::lock_guard lock(mu_);
  if (entries_.size() >= depth_) return false;
  entries_.push_back(slot);
  return true;
}

size_t CompletionQueue::poll(std::span<CompletionEntry> out) {
  struct Release {
    QueuePair* qp;
    uint64_t up_to;
  };
  Release releases[64];
  size_t n_release = 0;
  size_t n = 0;
  {
    std::lock_guard lock(mu_);
    while (n < out.size() && !entries_.empty()) {
      const Slot& slot = entries_.front();
      out[n++] = slot.entry;
      if (slot.releases_unsignaled) {
        if (n_release == 64) {
          releases[63].qp->release_unsignaled(releases[63].up_to);
          --n_release;
        }
        releases[n_release++] = {slot.qp, slot.unsignaled_before};
      }
      entries_.pop_front();
    }
    // Releasing while still holding the lock keeps the device view
    // consistent with completion order.
    for (size_t i = 0; i < n_release; ++i) {
      releases[i].qp->release_unsignaled(releases[i].up_to);
    }
  }
  return n;
}

std::vector<CompletionEntry> CompletionQueue::poll(size_t max_entries) {
  std::vector<CompletionEntry> out(max_entries);
  out.resize(poll(std::span<CompletionEntry>(out)));
  return out;
}

size_t CompletionQueue::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

// ---------------------------------------------------------------------------
// QueuePair

struct QueuePair::AtomicStats {
  std::atomic<uint64_t> sends{0}, recvs_posted{0}, recvs_consumed{0},
      writes{0}, reads{0}, signaled{0}, unsignaled{0}, bytes_sent{0},
      bytes_written{0}, bytes_read{0}, overflow_faults{0}, access_faults{0},
      split_writes{0};
};

QueuePair::QueuePair(Network& net, QpId id, Machine& machine,
                     MachineId peer_machine, const QpConfig& config,
                     std::shared_ptr<CompletionQueue> send_cq,
                     std::shared_ptr<CompletionQueue> recv_cq)
    : net_(net),
      id_(id),
      machine_(&machine),
      peer_machine_(peer_machine),
      config_(config),
      send_cq_(std::move(send_cq)),
      recv_cq_(std::move(recv_cq)),
      stats_(std::make_unique<AtomicStats>()) {}

QueuePair::~QueuePair() = default;

PostStatus QueuePair::post(const WorkRequest& wr) {
  if (wr.op == Opcode::kRecv) return post_recv(wr.local, wr.user_tag);

  Op op;
  op.wr = wr;
  if (wr.local.length > 0) {
    op.local = machine_->translate(wr.local.region, wr.local.offset,
                                   wr.local.length);
    if (op.local == nullptr) {
      stats_->access_faults.fetch_add(1);
      return PostStatus::kLocalAccessFault;
    }
  }

  std::lock_guard lock(mu_);
  if (wr.op == Opcode::kWrite || wr.op == Opcode::kRead) {
    if (!wr.remote) {
      if (wr.local.length != 0) return PostStatus::kInvalidRequest;
    } else if (wr.local.length > 0) {
      PostStatus st = link_->check_remote(wr.remote->region, wr.remote->offset,
                                          wr.local.length);
      if (st != PostStatus::kOk) {
        stats_->access_faults.fetch_add(1);
        return st;
      }
    }
  } else if (wr.remote) {
    return PostStatus::kInvalidRequest;
  }

  const uint64_t released = unsignaled_released_.load(std::memory_order_acquire);
  if (!wr.signaled && unsignaled_posted_ - released >= config_.u_max) {
    stats_->overflow_faults.fetch_add(1);
    return PostStatus::kOverflow;
  }

  if (wr.op == Opcode::kSend) {
    PostStatus st = link_->reserve_recv(wr.local.length, &op.reserved);
    if (st != PostStatus::kOk) return st;
  }

  if (wr.signaled) {
    op.unsignaled_before = unsignaled_posted_;
    stats_->signaled.fetch_add(1, std::memory_order_relaxed);
  } else {
    ++unsignaled_posted_;
    stats_->unsignaled.fetch_add(1, std::memory_order_relaxed);
  }
  switch (wr.op) {
    case Opcode::kSend: stats_->sends.fetch_add(1, std::memory_order_relaxed); break;
    case Opcode::kWrite: stats_->writes.fetch_add(1, std::memory_order_relaxed); break;
    case Opcode::kRead: stats_->reads.fetch_add(1, std::memory_order_relaxed); break;
    case Opcode::kRecv: break;
  }

  if (net_.config().execution == Execution::kImmediate) {
    execute(op);
  } else {
    deferred_.push_back(op);
    net_.notify_deferred();
  }
  return PostStatus::kOk;
}

void QueuePair::execute(Op& op) {
  const WorkRequest& wr = op.wr;
  const uint64_t len = wr.local.length;
  bool ok = true;
  QpStats split{};
  switch (wr.op) {
    case Opcode::kWrite:
      if (len > 0 && wr.remote) {
        ok = link_->write(wr.remote->region, wr.remote->offset, op.local, len,
                          &split);
        stats_->bytes_written.fetch_add(len, std::memory_order_relaxed);
        if (split.split_writes) stats_->split_writes.fetch_add(split.split_writes);
      }
      break;
    case Opcode::kRead:
      if (len > 0 && wr.remote) {
        ok = link_->read(wr.remote->region, wr.remote->offset, op.local, len);
        stats_->bytes_read.fetch_add(len, std::memory_order_relaxed);
      }
      break;
    case Opcode::kSend:
      ok = link_->send(op.reserved, op.local, len);
      stats_->bytes_sent.fetch_add(len, std::memory_order_relaxed);
      break;
    case Opcode::kRecv:
      break;
  }
  if (!ok) stats_->access_faults.fetch_add(1);
  if (wr.signaled) {
    CompletionQueue::Slot slot;
    slot.entry = {id_, wr.user_tag,
                  ok ? CompletionStatus::kOk : CompletionStatus::kFault, wr.op,
                  static_cast<uint32_t>(len)};
    slot.qp = this;
    slot.unsignaled_before = op.unsignaled_before;
    slot.releases_unsignaled = true;
    send_cq_->push(slot);
  }
}

void QueuePair::release_unsignaled(uint64_t up_to) {
  uint64_t cur = unsignaled_released_.load(std::memory_order_relaxed);
  while (cur < up_to &&
         !unsignaled_released_.compare_exchange_weak(cur, up_to,
                                                     std::memory_order_acq_rel)) {
  }
}

uint64_t QueuePair::pending_unsignaled() const {
  std::lock_guard lock(mu_);
  return unsignaled_posted_ - unsignaled_released_.load();
}

PostStatus QueuePair::post_recv(const LocalSegment& local, uint64_t user_tag) {
  if (machine_->translate(local.region, local.offset, local.length) == nullptr) {
    stats_->access_faults.fetch_add(1);
    return PostStatus::kLocalAccessFault;
  }
  std::vector<std::byte> backlog;
  bool have_backlog = false;
  {
    std::lock_guard lock(rq_mu_);
    stats_->recvs_posted.fetch_add(1, std::memory_order_relaxed);
    if (!unmatched_sends_.empty()) {
      backlog = std::move(unmatched_sends_.front());
      unmatched_sends_.pop_front();
      have_backlog = true;
    } else {
      rq_.push_back({local, user_tag});
    }
  }
  if (have_backlog) {
    deliver_send({local, user_tag}, backlog.data(), backlog.size());
  }
  return PostStatus::kOk;
}

uint64_t QueuePair::posted_recv_count() const {
  std::lock_guard lock(rq_mu_);
  return rq_.size();
}

bool QueuePair::take_recv(uint64_t length, RecvEntry* out) {
  std::lock_guard lock(rq_mu_);
  if (rq_.empty() || rq_.front().local.length < length) return false;
  *out = rq_.front();
  rq_.pop_front();
  return true;
}

void QueuePair::deliver_send(const RecvEntry& recv, const std::byte* data,
                             uint64_t len) {
  bool ok = len <= recv.local.length;
  if (ok && len > 0) {
    std::byte* dst =
        machine_->translate(recv.local.region, recv.local.offset, len);
    if (dst == nullptr) {
      ok = false;
    } else {
      ordered_copy(dst, data, len);
    }
  }
  stats_->recvs_consumed.fetch_add(1, std::memory_order_relaxed);
  CompletionQueue::Slot slot;
  slot.entry = {id_, recv.user_tag,
                ok ? CompletionStatus::kOk : CompletionStatus::kFault,
                Opcode::kRecv, static_cast<uint32_t>(len)};
  slot.qp = this;
  recv_cq_->push(slot);
}

void QueuePair::deliver_incoming_send(std::vector<std::byte> data) {
  RecvEntry recv;
  {
    std::lock_guard lock(rq_mu_);
    if (rq_.empty()) {
      unmatched_sends_.push_back(std::move(data));
      return;
    }
    recv = rq_.front();
    rq_.pop_front();
  }
  deliver_send(recv, data.data(), data.size());
}

bool QueuePair::run_one_deferred() {
  Op op;
  {
    std::lock_guard lock(mu_);
    if (deferred_.empty()) return false;
    op = deferred_.front();
    deferred_.pop_front();
  }
  execute(op);
  return true;
}

QpStats QueuePair::stats() const {
  QpStats s;
  s.sends = stats_->sends.load();
  s.recvs_posted = stats_->recvs_posted.load();
  s.recvs_consumed = stats_->recvs_consumed.load();
  s.writes = stats_->writes.load();
  s.reads = stats_->reads.load();
  s.signaled = stats_->signaled.load();
  s.unsignaled = stats_->unsignaled.load();
  s.bytes_sent = stats_->bytes_sent.load();
  s.bytes_written = stats_->bytes_written.load();
  s.bytes_read = stats_->bytes_read.load();
  s.overflow_faults = stats_->overflow_faults.load();
  s.access_faults = stats_->access_faults.load();
  s.split_writes = stats_->split_writes.load();
  return s;
}

// ---------------------------------------------------------------------------
// InProcessLink

namespace detail {

PostStatus InProcessLink::check_remote(RegionId region, uint64_t offset,
                                       uint64_t length) {
  return peer_->machine_->translate(region, offset, length) != nullptr
             ? PostStatus::kOk
             : PostStatus::kRemoteAccessFault;
}

PostStatus InProcessLink::reserve_recv(uint64_t length,
                                       QueuePair::RecvEntry* out) {
  {
    std::lock_guard lock(peer_->rq_mu_);
    if (peer_->rq_.empty()) return PostStatus::kReceiverNotReady;
    if (peer_->rq_.front().local.length < length) {
      return PostStatus::kInvalidRequest;
    }
  }
  return peer_->take_recv(length, out) ? PostStatus::kOk
                                       : PostStatus::kReceiverNotReady;
}

bool InProcessLink::write(RegionId region, uint64_t offset, const std::byte* src,
                          uint64_t length, QpStats* stats) {
  std::byte* dst = peer_->machine_->translate(region, offset, length);
  if (dst == nullptr) return false;
  net_.device_write(dst, src, length, stats);
  return true;
}

bool InProcessLink::read(RegionId region, uint64_t offset, std::byte* dst,
                         uint64_t length) {
  std::byte* src = peer_->machine_->translate(region, offset, length);
  if (src == nullptr) return false;
  ordered_copy(dst, src, length);
  return true;
}

bool InProcessLink::send(const QueuePair::RecvEntry& reserved,
                         const std::byte* src, uint64_t length) {
  peer_->deliver_send(reserved, src, length);
  return true;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Network

Network::Network(const NetworkConfig& config)
    : config_(config), rng_(config.seed) {
  if (config_.execution == Execution::kDeferred) {
    progress_ = std::thread([this] { progress_loop(); });
  }
}

Network::~Network() {
  stop_.store(true);
  progress_cv_.notify_all();
  if (progress_.joinable()) progress_.join();
  // Links (stream readers) go first; they reference machines and queue pairs.
  for (auto& qp : qps_) qp->link_.reset();
}

MachineId Network::add_machine(uint32_t zones) {
  std::lock_guard lock(mu_);
  MachineConfig mc = config_.machine;
  mc.zones = zones;
  MachineId id = static_cast<MachineId>(machines_.size());
  machines_.push_back(std::make_unique<Machine>(id, mc));
  return id;
}

Machine& Network::machine(MachineId id) {
  std::lock_guard lock(mu_);
  if (id >= machines_.size()) {
    throw Error(Errc::kUnknownMachine, "unknown machine " + std::to_string(id));
  }
  return *machines_[id];
}

size_t Network::machine_count() const {
  std::lock_guard lock(mu_);
  return machines_.size();
}

QueuePair* Network::make_qp(Machine& machine, MachineId peer,
                            const QpConfig& cfg,
                            std::shared_ptr<CompletionQueue> recv_cq) {
  if (cfg.u_max == 0) throw Error(Errc::kInvalidArgument, "u_max must be positive");
  std::lock_guard lock(mu_);
  auto send_cq = std::make_shared<CompletionQueue>(config_.cq_depth);
  if (!recv_cq) recv_cq = std::make_shared<CompletionQueue>(config_.cq_depth);
  QpId id = static_cast<QpId>(qps_.size());
  qps_.push_back(std::unique_ptr<QueuePair>(
      new QueuePair(*this, id, machine, peer, cfg, std::move(send_cq),
                    std::move(recv_cq))));
  return qps_.back().get();
}

std::pair<QueuePair*, QueuePair*> Network::connect(MachineId a, MachineId b,
                                                   const ConnectOptions& options) {
  Machine& ma = machine(a);
  Machine& mb = machine(b);
  {
    std::lock_guard lock(mu_);
    auto key = std::minmax(a, b);
    if (options.forbid_duplicate && connected_.count(key)) {
      throw Error(Errc::kDuplicate, "machines already connected");
    }
    connected_.insert(key);
  }
  QueuePair* qa = make_qp(ma, b, options.qp, options.recv_cq_a);
  QueuePair* qb = make_qp(mb, a, options.qp, options.recv_cq_b);
  if (options.backend == Backend::kInProcess) {
    qa->link_ = std::make_unique<detail::InProcessLink>(*this, qb);
    qb->link_ = std::make_unique<detail::InProcessLink>(*this, qa);
    return {qa, qb};
  }

  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM, 0, fds) != 0) {
    throw Error(Errc::kTransport, "socketpair failed");
  }
  auto pa = std::make_unique<detail::StreamPort>(*this, ma, fds[0]);
  auto pb = std::make_unique<detail::StreamPort>(*this, mb, fds[1]);
  detail::StreamPort* port_a = pa.get();
  detail::StreamPort* port_b = pb.get();
  wire::ConnectInfo info_a{a, qa->id(), options.qp.u_max};
  wire::ConnectInfo info_b{b, qb->id(), options.qp.u_max};
  port_a->set_local_info(info_a);
  port_b->set_local_info(info_b);
  qa->link_ = std::move(pa);
  qb->link_ = std::move(pb);
  port_a->start(qa);
  port_b->start(qb);
  port_a->send_connect(info_a);
  if (!port_a->wait_peer(std::chrono::seconds(5)) ||
      !port_b->wait_peer(std::chrono::seconds(5))) {
    throw Error(Errc::kTransport, "stream handshake timed out");
  }
  return {qa, qb};
}

QueuePair* Network::attach_stream(MachineId local, int fd, bool initiator,
                                  const QpConfig& qp,
                                  std::shared_ptr<CompletionQueue> recv_cq) {
  Machine& m = machine(local);
  QueuePair* q = make_qp(m, 0, qp, std::move(recv_cq));
  auto port = std::make_unique<detail::StreamPort>(*this, m, fd);
  detail::StreamPort* p = port.get();
  wire::ConnectInfo info{local, q->id(), qp.u_max};
  p->set_local_info(info);
  q->link_ = std::move(port);
  p->start(q);
  if (initiator) p->send_connect(info);
  auto peer = p->wait_peer(std::chrono::seconds(5));
  if (!peer) throw Error(Errc::kTransport, "stream handshake timed out");
  q->peer_machine_ = peer->machine_id;
  return q;
}

void Network::set_split_visibility(const SplitVisibility& split) {
  split_bits_.store(std::bit_cast<uint64_t>(split.probability));
  split_reverse_.store(split.reverse);
}

SplitVisibility Network::split_visibility() const {
  return {std::bit_cast<double>(split_bits_.load()), split_reverse_.load()};
}

bool Network::roll_split() {
  double p = std::bit_cast<double>(split_bits_.load(std::memory_order_relaxed));
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  std::lock_guard lock(rng_mu_);
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p;
}

void Network::device_write(std::byte* dst, const std::byte* src, uint64_t len,
                           QpStats* stats) {
  if (len >= 16 && roll_split()) {
    uint64_t mid = (len / 2) & ~uint64_t{7};
    if (mid == 0) mid = 8;
    if (split_reverse_.load(std::memory_order_relaxed)) {
      ordered_copy(dst + mid, src + mid, len - mid);
      std::this_thread::yield();
      // The first word lands last so both ends being visible still implies
      // the whole write is.
      descending_copy(dst, src, mid);
    } else {
      ordered_copy(dst, src, mid);
      std::this_thread::yield();
      ordered_copy(dst + mid, src + mid, len - mid);
    }
    if (stats) ++stats->split_writes;
    return;
  }
  ordered_copy(dst, src, len);
}

QpStats Network::totals() const {
  std::lock_guard lock(mu_);
  QpStats total;
  for (const auto& qp : qps_) total += qp->stats();
  return total;
}

void Network::notify_deferred() {
  deferred_pending_.fetch_add(1, std::memory_order_release);
  progress_cv_.notify_one();
}

void Network::progress_loop() {
  std::mt19937_64 rng(config_.seed ^ 0x9e3779b97f4a7c15ull);
  std::vector<QueuePair*> snapshot;
  while (!stop_.load()) {
    {
      std::lock_guard lock(mu_);
      snapshot.clear();
      for (auto& qp : qps_) snapshot.push_back(qp.get());
    }
    bool any = false;
    for (QueuePair* qp : snapshot) {
      if (qp->run_one_deferred()) {
        any = true;
        deferred_pending_.fetch_sub(1, std::memory_order_acq_rel);
        if (config_.deferred_max_delay_us > 0 && (rng() & 7) == 0) {
          std::this_thread::sleep_for(std::chrono::microseconds(
              rng() % (config_.deferred_max_delay_us + 1)));
        }
      }
    }
    if (!any) {
      std::unique_lock lock(progress_mu_);
      progress_cv_.wait_for(lock, std::chrono::milliseconds(1), [this] {
        return stop_.load() || deferred_pending_.load() > 0;
      });
    }
  }
}

}  // namespace rivet::verbs
