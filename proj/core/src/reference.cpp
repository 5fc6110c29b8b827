#include "lmq/reference.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

#include "lmq/aug_filter.hpp"
#include "lmq/hash.hpp"

namespace lmq {

namespace {

// Key-to-partition split identical in shape to LmqSketch::owner (independent
// mix hash mod P), seeded alongside the per-partition sketch seeds.
struct PartitionPlan {
    std::uint64_t owner_salt;
    std::vector<std::uint64_t> sketch_seeds;

    PartitionPlan(std::uint32_t partitions, std::uint64_t seed) {
        std::uint64_t state = seed;
        owner_salt = splitmix64(state);
        sketch_seeds.reserve(partitions);
        for (std::uint32_t i = 0; i < partitions; ++i) sketch_seeds.push_back(splitmix64(state));
    }

    std::uint32_t owner(std::uint64_t key, std::uint32_t partitions) const {
        return static_cast<std::uint32_t>(mix64(key ^ owner_salt) % partitions);
    }
};

// P disjoint sub-sketches over the same horizontal memory slices that the
// wide layout concatenates; basis for both wide_cmplus and part_cmplus.
std::vector<std::unique_ptr<CountMinF2>> build_partitioned(const std::vector<Tuple>& tuples,
                                                           std::uint32_t partitions,
                                                           std::uint32_t rows, std::uint32_t cols,
                                                           std::uint64_t seed) {
    if (partitions < 1) throw std::invalid_argument("partitioned build: partitions must be >= 1");
    PartitionPlan plan(partitions, seed);
    std::vector<std::unique_ptr<CountMinF2>> sketches;
    sketches.reserve(partitions);
    for (std::uint32_t i = 0; i < partitions; ++i) {
        sketches.push_back(
            std::make_unique<CountMinF2>(SketchConfig{rows, cols, plan.sketch_seeds[i]}));
    }
    for (const Tuple& t : tuples) {
        sketches[plan.owner(t.key, partitions)]->update_enh(t.key, t.value);
    }
    return sketches;
}

}  // namespace

std::uint64_t wide_cmplus(const std::vector<Tuple>& tuples, std::uint32_t rows,
                          std::uint32_t partitions, std::uint32_t cols, std::uint64_t seed) {
    // One wide row j is the concatenation of the partition rows j, so its
    // sum of squares is the sum of the per-partition row sums of squares.
    const auto sketches = build_partitioned(tuples, partitions, rows, cols, seed);
    std::uint64_t best = UINT64_MAX;
    for (std::uint32_t j = 0; j < rows; ++j) {
        std::uint64_t row = 0;
        for (const auto& s : sketches) {
            std::uint64_t sq = 0;
            for (std::uint32_t k = 0; k < cols; ++k) {
                const std::uint64_t c = s->cell(j, k).load(std::memory_order_relaxed);
                sq += c * c;
            }
            row += sq;
        }
        best = std::min(best, row);
    }
    return best;
}

std::uint64_t part_cmplus(const std::vector<Tuple>& tuples, std::uint32_t partitions,
                          std::uint32_t rows, std::uint32_t cols, std::uint64_t seed) {
    const auto sketches = build_partitioned(tuples, partitions, rows, cols, seed);
    std::uint64_t total = 0;
    for (const auto& s : sketches) total += s->cmplus_scan();
    return total;
}

std::uint64_t partas_cmplus(const std::vector<Tuple>& tuples, std::uint32_t partitions,
                            std::uint32_t rows, std::uint32_t cols, std::uint32_t filter_slots,
                            std::uint64_t seed) {
    if (partitions < 1) throw std::invalid_argument("partas_cmplus: partitions must be >= 1");
    PartitionPlan plan(partitions, seed);
    std::vector<std::unique_ptr<CountMinF2>> sketches;
    std::vector<std::unique_ptr<AugFilter>> filters;
    for (std::uint32_t i = 0; i < partitions; ++i) {
        sketches.push_back(std::make_unique<CountMinF2>(SketchConfig{rows, cols, plan.sketch_seeds[i]}));
        filters.push_back(std::make_unique<AugFilter>(filter_slots));
    }
    for (const Tuple& t : tuples) {
        const std::uint32_t o = plan.owner(t.key, partitions);
        filters[o]->insert_enh(*sketches[o], t.key, t.value);
    }
    std::uint64_t total = 0;
    for (std::uint32_t i = 0; i < partitions; ++i) {
        total += sketches[i]->cmplus_scan();
        const std::uint32_t occ = filters[i]->occupancy();
        for (std::uint32_t s = 0; s < occ; ++s) {
            const std::uint64_t c = filters[i]->count(s);
            const std::uint64_t o = filters[i]->old_count(s);
            total += c * c - o * o;
        }
    }
    return total;
}

std::uint64_t f2_all_seq(const LmqSketch& sketch) {
    const std::uint32_t p = sketch.partition_count();
    __int128 total = 0;
    for (std::uint32_t i = 0; i < p; ++i) {
        const PartitionState& part = sketch.partition(i);
        total += static_cast<__int128>(part.sketch.cmplus_scan());
        const std::uint32_t occ = part.af.occupancy();
        for (std::uint32_t s = 0; s < occ; ++s) {
            const std::uint64_t key = part.af.key(s);
            __int128 freq = part.af.count(s);
            for (std::uint32_t j = 0; j < p; ++j) {
                freq += sketch.delegation_filter(j, i).buffered(key);
            }
            const __int128 old = part.af.old_count(s);
            total += freq * freq - old * old;
        }
    }
    if (total < 0) return 0;
    if (total > static_cast<__int128>(UINT64_MAX)) return UINT64_MAX;
    return static_cast<std::uint64_t>(total);
}

std::uint64_t f2_proj_seq(const LmqSketch& sketch) {
    const std::uint32_t p = sketch.partition_count();
    const double half_p = 0.5 * static_cast<double>(p);
    double total = 0.0;
    for (std::uint32_t i = 0; i < p; ++i) {
        const PartitionState& part = sketch.partition(i);
        std::uint64_t min_partial = UINT64_MAX;
        for (std::uint32_t j = 0; j < sketch.config().rows; ++j) {
            const std::uint64_t v = part.sketch.f2_partial(j).load(std::memory_order_relaxed);
            if (v < min_partial) min_partial = v;
        }
        double heavy = 0.0;
        const std::uint32_t occ = part.af.occupancy();
        for (std::uint32_t s = 0; s < occ; ++s) {
            const double freq = static_cast<double>(part.af.count(s)) + half_p * part.af.projection(s);
            const double old = static_cast<double>(part.af.old_count(s));
            heavy += freq * freq - old * old;
        }
        total += static_cast<double>(min_partial) + heavy;
    }
    return total <= 0.0 ? 0 : static_cast<std::uint64_t>(total);
}

Tab4Hash::Tab4Hash(std::uint64_t& seed_state) {
    t0_.resize(1 << 16);
    t1_.resize(1 << 16);
    t2_.resize(1 << 17);
    for (auto& v : t0_) v = splitmix64(seed_state);
    for (auto& v : t1_) v = splitmix64(seed_state);
    for (auto& v : t2_) v = splitmix64(seed_state);
}

FastAgms::FastAgms(std::uint32_t rows, std::uint32_t cols, std::uint64_t seed)
    : rows_(rows), cols_(cols), buckets_(static_cast<std::size_t>(rows) * cols, 0) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("FastAgms: rows/cols must be >= 1");
    std::uint64_t state = seed;
    hashes_.reserve(rows);
    for (std::uint32_t j = 0; j < rows; ++j) hashes_.emplace_back(state);
}

void FastAgms::update(std::uint32_t key, std::uint32_t value) {
    for (std::uint32_t j = 0; j < rows_; ++j) {
        const std::uint64_t h = hashes_[j](key);
        const std::uint32_t bucket = static_cast<std::uint32_t>(h % cols_);
        const std::int64_t sign = (h >> 63) ? 1 : -1;
        buckets_[static_cast<std::size_t>(j) * cols_ + bucket] += sign * static_cast<std::int64_t>(value);
    }
}

std::uint64_t FastAgms::f2() const {
    std::vector<std::uint64_t> row_estimates(rows_);
    for (std::uint32_t j = 0; j < rows_; ++j) {
        std::uint64_t s = 0;
        for (std::uint32_t k = 0; k < cols_; ++k) {
            const std::int64_t b = buckets_[static_cast<std::size_t>(j) * cols_ + k];
            s += static_cast<std::uint64_t>(b * b);
        }
        row_estimates[j] = s;
    }
    std::sort(row_estimates.begin(), row_estimates.end());
    // Even row counts take the lower-middle element.
    return row_estimates[(rows_ - 1) / 2];
}

std::uint64_t fast_agms_f2(const std::vector<Tuple>& tuples, std::uint32_t rows,
                           std::uint32_t cols, std::uint64_t seed) {
    FastAgms agms(rows, cols, seed);
    for (const Tuple& t : tuples) agms.update(t.key, t.value);
    return agms.f2();
}

double mape(const std::vector<double>& estimates, const std::vector<double>& truths) {
    if (estimates.size() != truths.size()) {
        throw std::invalid_argument("mape: length mismatch");
    }
    if (estimates.empty()) throw std::invalid_argument("mape: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        if (truths[i] <= 0.0) throw std::invalid_argument("mape: truths must be positive");
        acc += std::abs(estimates[i] - truths[i]) / truths[i];
    }
    return acc / static_cast<double>(estimates.size()) * 100.0;
}

std::uint32_t cols_for_budget(std::uint32_t budget_bytes, std::uint32_t rows,
                              std::uint32_t partitions, std::uint32_t filter_slots) {
    // Slot: key + count + old count + projection, 8 bytes each.
    const std::uint64_t af_bytes = static_cast<std::uint64_t>(filter_slots) * 32;
    // Delegation entry: key + count.
    const std::uint64_t df_bytes =
        static_cast<std::uint64_t>(partitions) * filter_slots * 16;
    const std::uint64_t fixed = af_bytes + df_bytes;
    if (fixed + 4ull * rows > budget_bytes) {
        throw std::invalid_argument("cols_for_budget: budget too small for one column");
    }
    return static_cast<std::uint32_t>((budget_bytes - fixed) / (4ull * rows));
}

}  // namespace lmq
