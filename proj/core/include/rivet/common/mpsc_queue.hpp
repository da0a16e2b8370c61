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

#include <atomic>
#include <optional>
#include <utility>

namespace rivet {

// Unbounded multi-producer single-consumer queue (Vyukov). push() is
// wait-free; pop() may report empty while a producer is mid-push, in which
// case the element shows up on a later pop().
template <class T>
class MpscQueue {
 public:
  MpscQueue() {
    Node* stub = new Node;
    head_.store(stub, std::memory_order_relaxed);
    tail_ = stub;
  }
  ~MpscQueue() {
    while (pop()) {
    }
    delete tail_;
  }
  MpscQueue(const MpscQueue&) = delete;
  MpscQueue& operator=(const MpscQueue&) = delete;

  void push(T value) {
    Node* node = new Node;
    node->value.emplace(std::move(value));
    Node* prev = head_.exchange(node, std::memory_order_acq_rel);
    prev->next.store(node, std::memory_order_release);
  }

  // Consumer only.
  std::optional<T> pop() {
    Node* tail = tail_;
    Node* next = tail->next.load(std::memory_order_acquire);
    if (next == nullptr) return std::nullopt;
    std::optional<T> out(std::move(*next->value));
    next->value.reset();
    tail_ = next;
    delete tail;
    return out;
  }

  // Consumer only; a racing push may make this stale immediately.
  bool empty() const {
    return tail_->next.load(std::memory_order_acquire) == nullptr;
  }

 private:
  struct Node {
    std::atomic<Node*> next{nullptr};
    std::optional<T> value;
  };

  alignas(64) std::atomic<Node*> head_;
  alignas(64) Node* tail_;
};

}  // namespace rivet
