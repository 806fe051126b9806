#pragma once

#include <atomic>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "dl4/params.hpp"

namespace dl4 {

struct ControlMessage {
  enum class Type : std::uint8_t { Set, Step, LoadSteps };
  Type type = Type::Step;
  ParamId param = ParamId::DS;
  double value = 0.0;
};

// Bounded single-producer / single-consumer ring between the network thread
// and the audio thread. Neither side ever waits:
//  - push() overwrites the oldest unread message when the ring is full;
//  - drain() visits at most capacity() slots and skips any slot that the
//    producer overwrote while it was being read (seqlock check).
class ControlQueue {
 public:
  explicit ControlQueue(std::size_t capacity = 256)
      : slots_(std::bit_ceil(capacity < 2 ? std::size_t{2} : capacity)), mask_(slots_.size() - 1) {}

  ControlQueue(const ControlQueue&) = delete;
  ControlQueue& operator=(const ControlQueue&) = delete;

  std::size_t capacity() const noexcept { return slots_.size(); }

  // Producer side. Returns false when an unread message was overwritten.
  bool push(const ControlMessage& m) noexcept {
    const std::uint64_t k = head_.load(std::memory_order_relaxed);
    const bool overwrote = k - tail_.load(std::memory_order_acquire) >= slots_.size();
    Slot& s = slots_[k & mask_];
    s.seq.store(2 * k + 1, std::memory_order_relaxed);
    std::atomic_thread_fence(std::memory_order_release);
    s.header.store(static_cast<std::uint64_t>(m.type) | (static_cast<std::uint64_t>(m.param) << 8),
                   std::memory_order_relaxed);
    s.value.store(std::bit_cast<std::uint64_t>(m.value), std::memory_order_relaxed);
    s.seq.store(2 * k + 2, std::memory_order_release);
    head_.store(k + 1, std::memory_order_release);
    return !overwrote;
  }

  // Consumer side. Calls fn(const ControlMessage&) in arrival order for every
  // message still intact; returns how many were delivered.
  template <typename Fn>
  std::size_t drain(Fn&& fn) noexcept {
    const std::uint64_t head = head_.load(std::memory_order_acquire);
    std::uint64_t k = tail_.load(std::memory_order_relaxed);
    if (head - k > slots_.size()) {
      lost_.fetch_add(head - slots_.size() - k, std::memory_order_relaxed);
      k = head - slots_.size();
    }
    std::size_t delivered = 0;
    for (; k < head; ++k) {
      const Slot& s = slots_[k & mask_];
      const std::uint64_t before = s.seq.load(std::memory_order_acquire);
      const std::uint64_t header = s.header.load(std::memory_order_relaxed);
      const std::uint64_t value = s.value.load(std::memory_order_relaxed);
      std::atomic_thread_fence(std::memory_order_acquire);
      const std::uint64_t after = s.seq.load(std::memory_order_relaxed);
      if (before != 2 * k + 2 || after != before) {
        lost_.fetch_add(1, std::memory_order_relaxed);
        continue;
      }
      ControlMessage m;
      m.type = static_cast<ControlMessage::Type>(header & 0xff);
      m.param = static_cast<ParamId>((header >> 8) & 0xff);
      m.value = std::bit_cast<double>(value);
      fn(m);
      ++delivered;
    }
    tail_.store(head, std::memory_order_release);
    return delivered;
  }

  // Messages the consumer found overwritten.
  std::uint64_t lost() const noexcept { return lost_.load(std::memory_order_relaxed); }

 private:
  struct Slot {
    std::atomic<std::uint64_t> seq{0};
    std::atomic<std::uint64_t> header{0};
    std::atomic<std::uint64_t> value{0};
  };

  std::vector<Slot> slots_;
  std::size_t mask_;
  alignas(64) std::atomic<std::uint64_t> head_{0};
  alignas(64) std::atomic<std::uint64_t> tail_{0};
  std::atomic<std::uint64_t> lost_{0};
};

}  // namespace dl4
