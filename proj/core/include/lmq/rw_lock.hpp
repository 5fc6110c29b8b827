#pragma once

#include <atomic>
#include <cstdint>
#include <thread>

namespace lmq {

// Writer-preferring readers-writer spin lock for the Full-Sync design.
// Global queries (writers) take priority over updates/point queries
// (readers); new readers stall while a writer is waiting so the query is not
// starved under a continuous update load. Spins briefly, then yields, which
// matters on oversubscribed machines.
class RwLock {
public:
    void lock_shared() {
        for (std::uint32_t spins = 0;; ++spins) {
            if (writers_waiting_.load(std::memory_order_acquire) == 0) {
                std::int32_t s = state_.load(std::memory_order_relaxed);
                if (s >= 0 &&
                    state_.compare_exchange_weak(s, s + 1, std::memory_order_acquire,
                                                 std::memory_order_relaxed)) {
                    return;
                }
            }
            backoff(spins);
        }
    }

    void unlock_shared() { state_.fetch_sub(1, std::memory_order_release); }

    void lock_exclusive() {
        writers_waiting_.fetch_add(1, std::memory_order_acq_rel);
        for (std::uint32_t spins = 0;; ++spins) {
            std::int32_t expected = 0;
            if (state_.compare_exchange_weak(expected, -1, std::memory_order_acquire,
                                             std::memory_order_relaxed)) {
                writers_waiting_.fetch_sub(1, std::memory_order_acq_rel);
                return;
            }
            backoff(spins);
        }
    }

    void unlock_exclusive() { state_.store(0, std::memory_order_release); }

private:
    static void backoff(std::uint32_t spins) {
        if (spins < 16) {
#if defined(__x86_64__) || defined(__i386__)
            __builtin_ia32_pause();
#endif
        } else {
            std::this_thread::yield();
        }
    }

    std::atomic<std::int32_t> state_{0};  // -1 writer, 0 free, >0 reader count
    std::atomic<std::int32_t> writers_waiting_{0};
};

}  // namespace lmq
