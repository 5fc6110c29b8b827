#pragma once

#include <atomic>
#include <cassert>
#include <cstdint>
#include <memory>
#include <optional>

#include "lmq/count_min.hpp"

namespace lmq {

// EWMA weight for the projected per-flush occurrence count of a heavy key.
// Biased towards recent changes in skew.
inline constexpr double kProjectionEwmaWeight = 0.8;

// Augmented filter: exact counts for up to C heavy keys in front of a
// Count-Min matrix, with swap-in/swap-out against the sketch estimate.
//
// Layout is struct-of-arrays with the keys contiguous so the lookup is a
// branch-light linear scan. Slots fill from index 0 and are only ever
// replaced, never removed, so indices [0, occupancy) stay valid.
//
// Mutated by the owner thread only; fields are atomic cells so a query
// thread may read them under the partition snapshot protocol.
class AugFilter {
public:
    explicit AugFilter(std::uint32_t slots)
        : capacity_(slots),
          keys_(std::make_unique<std::atomic<std::uint64_t>[]>(slots)),
          counts_(std::make_unique<std::atomic<std::uint64_t>[]>(slots)),
          old_counts_(std::make_unique<std::atomic<std::uint64_t>[]>(slots)),
          projections_(std::make_unique<std::atomic<double>[]>(slots)) {
        assert(slots >= 1);
        for (std::uint32_t i = 0; i < slots; ++i) {
            keys_[i].store(0, std::memory_order_relaxed);
            counts_[i].store(0, std::memory_order_relaxed);
            old_counts_[i].store(0, std::memory_order_relaxed);
            projections_[i].store(0.0, std::memory_order_relaxed);
        }
        occupancy_.store(0, std::memory_order_relaxed);
    }

    std::uint32_t capacity() const { return capacity_; }

    std::uint32_t occupancy() const { return occupancy_.load(std::memory_order_relaxed); }

    // First-match linear scan over the contiguous key array. Backwards loop
    // keeps it branch-light (conditional select, no early exit).
    std::optional<std::uint32_t> lookup(std::uint64_t key) const {
        const std::uint32_t occ = occupancy();
        std::int64_t found = -1;
        for (std::int64_t i = static_cast<std::int64_t>(occ) - 1; i >= 0; --i) {
            if (keys_[i].load(std::memory_order_relaxed) == key) found = i;
        }
        if (found < 0) return std::nullopt;
        return static_cast<std::uint32_t>(found);
    }

    std::uint64_t key(std::uint32_t slot) const {
        return keys_[slot].load(std::memory_order_relaxed);
    }
    std::uint64_t count(std::uint32_t slot) const {
        return counts_[slot].load(std::memory_order_relaxed);
    }
    std::uint64_t old_count(std::uint32_t slot) const {
        return old_counts_[slot].load(std::memory_order_relaxed);
    }
    double projection(std::uint32_t slot) const {
        return projections_[slot].load(std::memory_order_relaxed);
    }

    // ASketch insert with the projection enhancement. Owner thread only,
    // invoked while flushing a delegation filter.
    void insert_enh(CountMinF2& cms, std::uint64_t key, std::uint32_t value) {
        assert(value > 0);
        if (const auto slot = lookup(key)) {
            // Heavy key resident: exact count, refresh the flush-size EWMA.
            const std::uint32_t i = *slot;
            counts_[i].store(counts_[i].load(std::memory_order_relaxed) + value,
                             std::memory_order_relaxed);
            const double p = projections_[i].load(std::memory_order_relaxed);
            projections_[i].store(
                kProjectionEwmaWeight * value + (1.0 - kProjectionEwmaWeight) * p,
                std::memory_order_relaxed);
            return;
        }
        const std::uint32_t occ = occupancy();
        if (occ < capacity_) {
            keys_[occ].store(key, std::memory_order_relaxed);
            counts_[occ].store(value, std::memory_order_relaxed);
            old_counts_[occ].store(0, std::memory_order_relaxed);
            projections_[occ].store(static_cast<double>(value), std::memory_order_relaxed);
            occupancy_.store(occ + 1, std::memory_order_relaxed);
            return;
        }
        // Filter full: update the sketch, then swap in if the estimate beats
        // the lightest resident key.
        const std::uint64_t est = cms.insert_and_pq_enh(key, value);
        std::uint32_t min_slot = 0;
        std::uint64_t min_count = counts_[0].load(std::memory_order_relaxed);
        for (std::uint32_t i = 1; i < capacity_; ++i) {
            const std::uint64_t c = counts_[i].load(std::memory_order_relaxed);
            if (c < min_count) {  // ties keep the lowest slot index
                min_count = c;
                min_slot = i;
            }
        }
        if (est > min_count) {
            // Push the evicted key's occurrences accrued while resident.
            const std::uint64_t old = old_counts_[min_slot].load(std::memory_order_relaxed);
            assert(min_count >= old);
            const std::uint64_t delta = min_count - old;
            if (delta > 0) {
                assert(delta <= UINT32_MAX);
                cms.update_enh(keys_[min_slot].load(std::memory_order_relaxed),
                               static_cast<std::uint32_t>(delta));
            }
            keys_[min_slot].store(key, std::memory_order_relaxed);
            counts_[min_slot].store(est, std::memory_order_relaxed);
            old_counts_[min_slot].store(est, std::memory_order_relaxed);
            projections_[min_slot].store(static_cast<double>(value), std::memory_order_relaxed);
        }
    }

    // ASketch point query: exact count if resident, sketch estimate otherwise.
    std::uint64_t query(const CountMinF2& cms, std::uint64_t key) const {
        if (const auto slot = lookup(key)) return count(*slot);
        return cms.point_estimate(key);
    }

    // Test seam: place a slot into a known state.
    void debug_set_slot(std::uint32_t slot, std::uint64_t key, std::uint64_t count,
                        std::uint64_t old_count, double projection) {
        assert(slot < capacity_);
        keys_[slot].store(key, std::memory_order_relaxed);
        counts_[slot].store(count, std::memory_order_relaxed);
        old_counts_[slot].store(old_count, std::memory_order_relaxed);
        projections_[slot].store(projection, std::memory_order_relaxed);
        if (slot >= occupancy()) occupancy_.store(slot + 1, std::memory_order_relaxed);
    }

private:
    std::uint32_t capacity_;
    std::atomic<std::uint32_t> occupancy_{0};
    std::unique_ptr<std::atomic<std::uint64_t>[]> keys_;
    std::unique_ptr<std::atomic<std::uint64_t>[]> counts_;
    std::unique_ptr<std::atomic<std::uint64_t>[]> old_counts_;
    std::unique_ptr<std::atomic<double>[]> projections_;
};

}  // namespace lmq
