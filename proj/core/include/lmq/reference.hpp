#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "lmq/count_min.hpp"
#include "lmq/lmq_sketch.hpp"
#include "lmq/stream.hpp"

namespace lmq {

// Exact per-key frequencies, total weight, and F2 for accuracy studies.
class ExactOracle {
public:
    void add(std::uint64_t key, std::uint64_t value) {
        freq_[key] += value;
        total_weight_ += value;
    }

    void add_stream(const std::vector<Tuple>& tuples) {
        for (const Tuple& t : tuples) add(t.key, t.value);
    }

    std::uint64_t frequency(std::uint64_t key) const {
        const auto it = freq_.find(key);
        return it == freq_.end() ? 0 : it->second;
    }

    std::uint64_t total_weight() const { return total_weight_; }

    std::uint64_t f2() const {
        std::uint64_t s = 0;
        for (const auto& [k, f] : freq_) s += f * f;
        return s;
    }

    const std::unordered_map<std::uint64_t, std::uint64_t>& frequencies() const { return freq_; }

private:
    std::unordered_map<std::uint64_t, std::uint64_t> freq_;
    std::uint64_t total_weight_ = 0;
};

// --- Sequential estimator ladder (equal total memory, increasing structure)

// One wide Count-Min of H x (partitions*cols) columns; F2 via CM+. The column
// layout is the partitioned layout concatenated (column = owner*cols + row
// hash mod cols, itself a pairwise-independent family over the wide width),
// so part_cmplus refines this sketch cell-for-cell and can only improve on it.
std::uint64_t wide_cmplus(const std::vector<Tuple>& tuples, std::uint32_t rows,
                          std::uint32_t partitions, std::uint32_t cols, std::uint64_t seed);

// P disjoint H x K sub-sketches split by key ownership; sum of per-partition
// CM+ estimates.
std::uint64_t part_cmplus(const std::vector<Tuple>& tuples, std::uint32_t partitions,
                          std::uint32_t rows, std::uint32_t cols, std::uint64_t seed);

// P sequential ASketches (H x K' plus a C-slot filter each); sum of
// per-partition CM+ plus exact heavy-key contributions count^2 - old^2.
std::uint64_t partas_cmplus(const std::vector<Tuple>& tuples, std::uint32_t partitions,
                            std::uint32_t rows, std::uint32_t cols, std::uint32_t filter_slots,
                            std::uint64_t seed);

// --- Sequential evaluations of the concurrent F2 estimators on a frozen
// structure (quiescent oracles for f2_nosync / f2_lagom).

std::uint64_t f2_all_seq(const LmqSketch& sketch);
std::uint64_t f2_proj_seq(const LmqSketch& sketch);

// --- Fast-AGMS sign sketch

// 4-universal tabulation hash for 32-bit keys (two 16-bit characters plus
// one derived character).
class Tab4Hash {
public:
    Tab4Hash() = default;
    explicit Tab4Hash(std::uint64_t& seed_state);

    std::uint64_t operator()(std::uint32_t key) const {
        const std::uint32_t lo = key & 0xffffu;
        const std::uint32_t hi = key >> 16;
        return t0_[lo] ^ t1_[hi] ^ t2_[lo + hi];
    }

private:
    std::vector<std::uint64_t> t0_, t1_, t2_;
};

// Fast-AGMS: d rows of w signed counters; update adds sign(key)*value to one
// bucket per row; F2 estimate is the median over rows of the bucket
// sum-of-squares (even d takes the lower-middle element).
class FastAgms {
public:
    FastAgms(std::uint32_t rows, std::uint32_t cols, std::uint64_t seed);

    void update(std::uint32_t key, std::uint32_t value);
    std::uint64_t f2() const;

    std::uint32_t rows() const { return rows_; }
    std::uint32_t cols() const { return cols_; }

private:
    std::uint32_t rows_;
    std::uint32_t cols_;
    std::vector<Tab4Hash> hashes_;
    std::vector<std::int64_t> buckets_;
};

std::uint64_t fast_agms_f2(const std::vector<Tuple>& tuples, std::uint32_t rows,
                           std::uint32_t cols, std::uint64_t seed);

// --- Metrics and memory accounting

// Mean absolute percent error; truths must be positive.
double mape(const std::vector<double>& estimates, const std::vector<double>& truths);

// Largest K' such that a partition's counters, filter slots, and outgoing
// delegation-filter entries fit in `budget_bytes`:
//   rows*K'*4 + filter_slots*32 + partitions*filter_slots*16 <= budget_bytes.
std::uint32_t cols_for_budget(std::uint32_t budget_bytes, std::uint32_t rows,
                              std::uint32_t partitions, std::uint32_t filter_slots);

}  // namespace lmq
