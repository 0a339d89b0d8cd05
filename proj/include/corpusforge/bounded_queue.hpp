#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <mutex>
#include <optional>

namespace corpusforge {

// Blocking FIFO with a capacity and a close signal. push() blocks while full
// and returns false once closed; pop() blocks while empty and returns nullopt
// once closed and drained.
//
// Producers are counted: close_producer() closes the queue when the last
// registered producer leaves, giving last-worker-out semantics.
template <typename T>
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity, std::size_t producers = 1)
      : capacity_(capacity == 0 ? 1 : capacity), producers_(producers) {}

  bool push(T value) {
    std::unique_lock lock(mutex_);
    not_full_.wait(lock, [&] { return closed_ || items_.size() < capacity_; });
    if (closed_) return false;
    items_.push_back(std::move(value));
    if (items_.size() > high_water_) high_water_ = items_.size();
    lock.unlock();
    not_empty_.notify_one();
    return true;
  }

  std::optional<T> pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return closed_ || !items_.empty(); });
    if (items_.empty()) return std::nullopt;
    T value = std::move(items_.front());
    items_.pop_front();
    lock.unlock();
    not_full_.notify_one();
    return value;
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    not_empty_.notify_all();
    not_full_.notify_all();
  }

  void close_producer() {
    bool last = false;
    {
      std::lock_guard lock(mutex_);
      if (producers_ > 0) --producers_;
      last = producers_ == 0;
    }
    if (last) close();
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t high_water() const {
    std::lock_guard lock(mutex_);
    return high_water_;
  }

 private:
  mutable std::mutex mutex_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
  std::deque<T> items_;
  std::size_t capacity_;
  std::size_t producers_;
  std::size_t high_water_ = 0;
  bool closed_ = false;
};

}  // namespace corpusforge
