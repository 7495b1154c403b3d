#pragma once

#include <deque>
#include <mutex>
#include <optional>

namespace tcflow {

// FIFO work-stealing deque. The owner enqueues at the tail and dequeues at
// the head, so its oldest activations run first; thieves remove from the
// tail, taking the youngest. One lock per deque keeps the owner/thief
// contract trivially linearizable; contention only appears when peers are
// already idle.
template <typename T>
class StealDeque {
 public:
  // Owner only.
  void push(T item) {
    std::lock_guard lock(mu_);
    items_.push_back(std::move(item));
  }

  // Owner only: removes the head (oldest).
  std::optional<T> take_own() {
    std::lock_guard lock(mu_);
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    return item;
  }

  // Any thief: removes the tail (youngest).
  std::optional<T> steal() {
    std::lock_guard lock(mu_);
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.back());
    items_.pop_back();
    return item;
  }

  bool empty() const {
    std::lock_guard lock(mu_);
    return items_.empty();
  }

  size_t size() const {
    std::lock_guard lock(mu_);
    return items_.size();
  }

 private:
  mutable std::mutex mu_;
  std::deque<T> items_;
};

}  // namespace tcflow
