#pragma once

#include <atomic>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>

#include "lmq/hash.hpp"

namespace lmq {

// Count-Min geometry. One independently seeded multiply-shift hash per row.
struct SketchConfig {
    std::uint32_t rows = 8;   // H
    std::uint32_t cols = 1024;  // K, column index is hash mod K (no pow2 requirement)
    std::uint64_t seed = 1;
};

// Standard (eps, delta) -> geometry mapping: H = ceil(ln(1/delta)) rows,
// K = ceil(e/eps) columns.
inline SketchConfig geometry_for(double eps, double delta, std::uint64_t seed = 1) {
    if (eps <= 0.0 || delta <= 0.0 || delta >= 1.0) {
        throw std::invalid_argument("geometry_for: need eps > 0 and 0 < delta < 1");
    }
    SketchConfig cfg;
    cfg.rows = static_cast<std::uint32_t>(std::ceil(std::log(1.0 / delta)));
    if (cfg.rows == 0) cfg.rows = 1;
    cfg.cols = static_cast<std::uint32_t>(std::ceil(std::exp(1.0) / eps));
    cfg.seed = seed;
    return cfg;
}

// Count-Min matrix of 32-bit counters plus per-row sum-of-squares partials,
// maintained incrementally on every update: adding v to a cell holding c
// raises the row's partial by 2*c*v + v^2.
//
// Single-writer: one owner thread mutates; cells are atomics so other threads
// may read concurrently (snapshot consistency is the caller's concern).
class CountMinF2 {
public:
    explicit CountMinF2(const SketchConfig& cfg)
        : rows_(cfg.rows),
          cols_(cfg.cols),
          cells_(std::make_unique<std::atomic<std::uint32_t>[]>(
              static_cast<std::size_t>(cfg.rows) * cfg.cols)),
          per_row_(std::make_unique<std::atomic<std::uint64_t>[]>(cfg.rows)),
          hashes_(std::make_unique<MultiplyShiftHash[]>(cfg.rows)) {
        if (rows_ < 1 || cols_ < 1) {
            throw std::invalid_argument("CountMinF2: rows and cols must be >= 1");
        }
        std::uint64_t state = cfg.seed;
        for (std::uint32_t j = 0; j < rows_; ++j) hashes_[j] = MultiplyShiftHash(state);
        for (std::size_t i = 0; i < static_cast<std::size_t>(rows_) * cols_; ++i) {
            cells_[i].store(0, std::memory_order_relaxed);
        }
        for (std::uint32_t j = 0; j < rows_; ++j) per_row_[j].store(0, std::memory_order_relaxed);
    }

    std::uint32_t rows() const { return rows_; }
    std::uint32_t cols() const { return cols_; }

    std::uint32_t column(std::uint32_t row, std::uint64_t key) const {
        return static_cast<std::uint32_t>(hashes_[row](key) % cols_);
    }

    // Update with incremental F2 partial maintenance.
    void update_enh(std::uint64_t key, std::uint32_t value) {
        assert(value > 0);
        for (std::uint32_t j = 0; j < rows_; ++j) {
            bump(j, column(j, key), value);
        }
    }

    // Point query: min over rows of the counter the key hashes to.
    std::uint64_t point_estimate(std::uint64_t key) const {
        std::uint64_t est = UINT64_MAX;
        for (std::uint32_t j = 0; j < rows_; ++j) {
            const std::uint64_t c = cell(j, column(j, key)).load(std::memory_order_relaxed);
            if (c < est) est = c;
        }
        return est;
    }

    // Update followed by the post-update point estimate, in one hash pass.
    std::uint64_t insert_and_pq_enh(std::uint64_t key, std::uint32_t value) {
        assert(value > 0);
        std::uint64_t est = UINT64_MAX;
        for (std::uint32_t j = 0; j < rows_; ++j) {
            const std::uint64_t c = bump(j, column(j, key), value);
            if (c < est) est = c;
        }
        return est;
    }

    // Exact F1 of everything inserted: sum over one row.
    std::uint64_t row_sum(std::uint32_t row) const {
        if (row >= rows_) throw std::out_of_range("row_sum: row out of range");
        std::uint64_t sum = 0;
        for (std::uint32_t k = 0; k < cols_; ++k) {
            sum += cell(row, k).load(std::memory_order_relaxed);
        }
        return sum;
    }

    // CM+ estimate by full counter scan: min over rows of sum of squared cells.
    std::uint64_t cmplus_scan() const {
        std::uint64_t best = UINT64_MAX;
        for (std::uint32_t j = 0; j < rows_; ++j) {
            std::uint64_t s = 0;
            for (std::uint32_t k = 0; k < cols_; ++k) {
                const std::uint64_t c = cell(j, k).load(std::memory_order_relaxed);
                s += c * c;
            }
            if (s < best) best = s;
        }
        return best;
    }

    // CM+ from the maintained partials; equals cmplus_scan() at quiescence.
    std::uint64_t cmplus_partials() const {
        std::uint64_t best = UINT64_MAX;
        for (std::uint32_t j = 0; j < rows_; ++j) {
            const std::uint64_t s = per_row_[j].load(std::memory_order_relaxed);
            if (s < best) best = s;
        }
        return best;
    }

    const std::atomic<std::uint32_t>& cell(std::uint32_t row, std::uint32_t col) const {
        return cells_[static_cast<std::size_t>(row) * cols_ + col];
    }

    const std::atomic<std::uint64_t>& f2_partial(std::uint32_t row) const {
        return per_row_[row];
    }

    // Direct cell injection, bypassing hashing. Test/merge seam: used to lay
    // out known collision patterns and to fold sketches together.
    void add_at(std::uint32_t row, std::uint32_t col, std::uint32_t value) {
        if (row >= rows_ || col >= cols_) throw std::out_of_range("add_at: index out of range");
        bump(row, col, value);
    }

private:
    std::atomic<std::uint32_t>& cell_mut(std::uint32_t row, std::uint32_t col) {
        return cells_[static_cast<std::size_t>(row) * cols_ + col];
    }

    // Returns the post-update cell value. Precondition (checked): total weight
    // per cell stays below 2^32.
    std::uint64_t bump(std::uint32_t row, std::uint32_t col, std::uint32_t value) {
        auto& c = cell_mut(row, col);
        const std::uint64_t old = c.load(std::memory_order_relaxed);
        assert(old + value <= UINT32_MAX && "counter overflow: stream weight exceeds 32-bit cell");
        const std::uint64_t now = old + value;
        c.store(static_cast<std::uint32_t>(now), std::memory_order_relaxed);
        // (c+v)^2 - c^2 = 2cv + v^2
        auto& p = per_row_[row];
        const std::uint64_t delta =
            2 * old * static_cast<std::uint64_t>(value) + static_cast<std::uint64_t>(value) * value;
        p.store(p.load(std::memory_order_relaxed) + delta, std::memory_order_relaxed);
        return now;
    }

    std::uint32_t rows_;
    std::uint32_t cols_;
    std::unique_ptr<std::atomic<std::uint32_t>[]> cells_;
    std::unique_ptr<std::atomic<std::uint64_t>[]> per_row_;
    std::unique_ptr<MultiplyShiftHash[]> hashes_;
};

}  // namespace lmq
