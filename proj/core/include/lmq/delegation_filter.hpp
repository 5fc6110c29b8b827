#pragma once

#include <atomic>
#include <cassert>
#include <cstdint>
#include <memory>

namespace lmq {

// Per-(source thread, target partition) buffer of up to C distinct keys.
// Written by the source thread; cleared by the target owner during a flush.
//
// The handover protocol: when an insert makes the filter full (size = C or
// sum >= B), the producer marks it awaiting-flush and pushes it onto the
// owner's pending queue. The producer may not touch the contents again until
// the owner has flushed and cleared the awaiting flag (release on clear,
// acquire on the producer's recheck), which makes the owner's clearing stores
// visible before the producer resumes writing.
//
// Entry cells are atomics: point queries (executed by the target owner) and
// the no-sync F2 scan read them concurrently with buffering.
class DelegationFilter {
public:
    explicit DelegationFilter(std::uint32_t slots)
        : capacity_(slots),
          keys_(std::make_unique<std::atomic<std::uint64_t>[]>(slots)),
          counts_(std::make_unique<std::atomic<std::uint64_t>[]>(slots)) {
        assert(slots >= 1);
        for (std::uint32_t i = 0; i < slots; ++i) {
            keys_[i].store(0, std::memory_order_relaxed);
            counts_[i].store(0, std::memory_order_relaxed);
        }
    }

    std::uint32_t capacity() const { return capacity_; }

    std::uint32_t size() const { return size_.load(std::memory_order_relaxed); }

    std::uint64_t sum() const { return sum_.load(std::memory_order_relaxed); }

    bool awaiting_flush() const { return full_flag_.load(std::memory_order_acquire); }

    // Producer only; requires the filter not to be awaiting flush.
    // Returns the new sum.
    std::uint64_t add(std::uint64_t key, std::uint32_t value) {
        const std::uint32_t n = size_.load(std::memory_order_relaxed);
        assert(n < capacity_ || lookup_index(key, n) >= 0);
        const std::int32_t idx = lookup_index(key, n);
        if (idx >= 0) {
            counts_[idx].store(counts_[idx].load(std::memory_order_relaxed) + value,
                               std::memory_order_relaxed);
        } else {
            keys_[n].store(key, std::memory_order_relaxed);
            counts_[n].store(value, std::memory_order_relaxed);
            // Publish the entry before growing size so concurrent readers
            // never see an uninitialized slot.
            size_.store(n + 1, std::memory_order_release);
        }
        const std::uint64_t s = sum_.load(std::memory_order_relaxed) + value;
        sum_.store(s, std::memory_order_relaxed);
        return s;
    }

    // Producer only, after add() made the filter full.
    void mark_awaiting_flush() { full_flag_.store(true, std::memory_order_release); }

    // Owner only, at the end of a flush. The release store is the transition
    // the blocked producer synchronizes on.
    void clear() {
        const std::uint32_t n = size_.load(std::memory_order_relaxed);
        for (std::uint32_t i = 0; i < n; ++i) {
            keys_[i].store(0, std::memory_order_relaxed);
            counts_[i].store(0, std::memory_order_relaxed);
        }
        size_.store(0, std::memory_order_relaxed);
        sum_.store(0, std::memory_order_relaxed);
        full_flag_.store(false, std::memory_order_release);
    }

    // Buffered count for a key; safe for concurrent readers.
    std::uint64_t buffered(std::uint64_t key) const {
        const std::uint32_t n = size_.load(std::memory_order_acquire);
        const std::int32_t idx = lookup_index(key, n);
        return idx >= 0 ? counts_[idx].load(std::memory_order_relaxed) : 0;
    }

    std::uint64_t entry_key(std::uint32_t i) const {
        return keys_[i].load(std::memory_order_relaxed);
    }
    std::uint64_t entry_count(std::uint32_t i) const {
        return counts_[i].load(std::memory_order_relaxed);
    }

private:
    std::int32_t lookup_index(std::uint64_t key, std::uint32_t n) const {
        std::int32_t found = -1;
        for (std::int32_t i = static_cast<std::int32_t>(n) - 1; i >= 0; --i) {
            if (keys_[i].load(std::memory_order_relaxed) == key) found = i;
        }
        return found;
    }

    std::uint32_t capacity_;
    std::atomic<std::uint32_t> size_{0};
    std::atomic<std::uint64_t> sum_{0};
    std::atomic<bool> full_flag_{false};
    std::unique_ptr<std::atomic<std::uint64_t>[]> keys_;
    std::unique_ptr<std::atomic<std::uint64_t>[]> counts_;
};

}  // namespace lmq
