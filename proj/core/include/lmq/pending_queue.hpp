#pragma once

#include <atomic>
#include <cassert>
#include <cstdint>
#include <memory>

namespace lmq {

// Bounded multi-producer queue of pending delegation filters, popped only by
// the owning thread. Classic sequence-stamped ring (Vyukov): push CASes the
// tail, pop is consumer-only. Capacity must cover the maximum number of
// outstanding items (one full filter per producer per target), so push never
// meets a slot still holding live data.
template <typename T>
class PendingQueue {
public:
    explicit PendingQueue(std::uint32_t min_capacity) {
        std::uint32_t cap = 1;
        while (cap < min_capacity) cap <<= 1;
        capacity_ = cap;
        mask_ = cap - 1;
        slots_ = std::make_unique<Slot[]>(cap);
        for (std::uint32_t i = 0; i < cap; ++i) {
            slots_[i].seq.store(i, std::memory_order_relaxed);
        }
    }

    // Multi-producer. Fails only if the queue is full, which callers treat as
    // a protocol violation (capacity is sized to the outstanding bound).
    bool push(T item) {
        std::uint64_t pos = tail_.load(std::memory_order_relaxed);
        for (;;) {
            Slot& s = slots_[pos & mask_];
            const std::uint64_t seq = s.seq.load(std::memory_order_acquire);
            const std::int64_t diff = static_cast<std::int64_t>(seq) - static_cast<std::int64_t>(pos);
            if (diff == 0) {
                if (tail_.compare_exchange_weak(pos, pos + 1, std::memory_order_relaxed)) {
                    s.item = item;
                    s.seq.store(pos + 1, std::memory_order_release);
                    return true;
                }
            } else if (diff < 0) {
                return false;  // full
            } else {
                pos = tail_.load(std::memory_order_relaxed);
            }
        }
    }

    // Single consumer.
    bool try_pop(T& out) {
        const std::uint64_t pos = head_;
        Slot& s = slots_[pos & mask_];
        const std::uint64_t seq = s.seq.load(std::memory_order_acquire);
        if (static_cast<std::int64_t>(seq) - static_cast<std::int64_t>(pos + 1) < 0) {
            return false;  // empty
        }
        out = s.item;
        s.seq.store(pos + capacity_, std::memory_order_release);
        head_ = pos + 1;
        return true;
    }

    // Consumer-side cheap emptiness probe; may race with pushes (a false
    // "empty" is caught on the caller's next visit).
    bool empty() const {
        const Slot& s = slots_[head_ & mask_];
        return static_cast<std::int64_t>(s.seq.load(std::memory_order_acquire)) -
                   static_cast<std::int64_t>(head_ + 1) < 0;
    }

private:
    struct Slot {
        std::atomic<std::uint64_t> seq{0};
        T item{};
    };

    std::uint32_t capacity_ = 0;
    std::uint32_t mask_ = 0;
    std::unique_ptr<Slot[]> slots_;
    alignas(64) std::atomic<std::uint64_t> tail_{0};
    alignas(64) std::uint64_t head_ = 0;  // consumer-private
};

}  // namespace lmq
