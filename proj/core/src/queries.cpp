#include <algorithm>
#include <chrono>

#include "lmq/lmq_sketch.hpp"

namespace lmq {

namespace {

inline std::uint64_t now_ns() {
    return static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(
            std::chrono::steady_clock::now().time_since_epoch())
            .count());
}

inline std::uint64_t clamp_to_u64(__int128 v) {
    if (v < 0) return 0;
    if (v > static_cast<__int128>(UINT64_MAX)) return UINT64_MAX;
    return static_cast<std::uint64_t>(v);
}

inline void backoff_scan(std::uint32_t& spins) {
    if (spins < 32) {
#if defined(__x86_64__) || defined(__i386__)
        __builtin_ia32_pause();
#endif
        ++spins;
    } else {
        std::this_thread::yield();  // let the flushing owner finish
    }
}

}  // namespace

std::uint64_t LmqSketch::point_query(std::uint64_t key) const {
    const std::uint32_t o = owner(key);
    const PartitionState& part = *parts_[o];
    std::uint64_t result = part.af.query(part.sketch, key);
    for (std::uint32_t j = 0; j < cfg_.partitions; ++j) {
        result += parts_[j]->dfs[o].buffered(key);
    }
    return result;
}

std::uint64_t LmqSketch::point_query_owner(std::uint32_t t, std::uint64_t key) {
    assert(owner(key) == t && "point_query_owner: key not owned by this thread");
    (void)t;
    if (cfg_.mode == SyncMode::full_sync) {
        rw_.lock_shared();
        const std::uint64_t r = point_query(key);
        rw_.unlock_shared();
        return r;
    }
    return point_query(key);
}

std::uint64_t LmqSketch::point_query_remote(std::uint64_t key) {
    PqMailbox& m = parts_[owner(key)]->mailbox;
    std::lock_guard<std::mutex> guard(m.caller_mu);
    const std::uint64_t seq = m.req_seq.load(std::memory_order_relaxed) + 1;
    m.req_key.store(key, std::memory_order_relaxed);
    m.req_seq.store(seq, std::memory_order_release);
    std::uint32_t spins = 0;
    while (m.resp_seq.load(std::memory_order_acquire) != seq) {
        if (++spins > 64) std::this_thread::yield();
    }
    return m.resp_value.load(std::memory_order_relaxed);
}

std::uint64_t LmqSketch::f1_query() const {
    std::uint64_t sum = 0;
    for (const auto& p : parts_) {
        sum += p->f1_partial.load(std::memory_order_acquire);
    }
    return sum;
}

__int128 LmqSketch::f2_all_unlocked() const {
    __int128 total = 0;
    for (std::uint32_t i = 0; i < cfg_.partitions; ++i) {
        const PartitionState& part = *parts_[i];
        total += static_cast<__int128>(part.sketch.cmplus_scan());
        const std::uint32_t occ = part.af.occupancy();
        for (std::uint32_t s = 0; s < occ; ++s) {
            const std::uint64_t key = part.af.key(s);
            __int128 freq = part.af.count(s);
            for (std::uint32_t j = 0; j < cfg_.partitions; ++j) {
                freq += parts_[j]->dfs[i].buffered(key);
            }
            const __int128 old = part.af.old_count(s);
            total += freq * freq - old * old;
        }
    }
    return total;
}

QueryResult LmqSketch::f2_nosync() const {
    QueryResult r;
    const std::uint64_t t0 = now_ns();
    r.value = clamp_to_u64(f2_all_unlocked());
    r.duration_ns = now_ns() - t0;
    return r;
}

double LmqSketch::scan_partition_lagom(PartitionState& part, std::uint32_t& retries) {
    part.being_scanned.store(true, std::memory_order_seq_cst);

    const std::uint32_t rows = cfg_.rows;
    const std::uint32_t slots = cfg_.filter_slots;
    const double half_p = 0.5 * static_cast<double>(cfg_.partitions);
    const bool debug = cfg_.debug_snapshots;

    std::vector<std::uint64_t> cap_rows, cap_keys, cap_counts, cap_olds, cap_proj;
    if (debug) {
        cap_rows.resize(rows);
        cap_keys.resize(slots);
        cap_counts.resize(slots);
        cap_olds.resize(slots);
        cap_proj.resize(slots);
    }

    double local = 0.0;
    std::uint32_t occ = 0;
    std::uint64_t generation = 0;
    std::uint32_t spins = 0;
    for (;;) {
        const std::uint64_t v2 = part.v2.load(std::memory_order_acquire);

        std::uint64_t min_partial = UINT64_MAX;
        for (std::uint32_t j = 0; j < rows; ++j) {
            const std::uint64_t v = part.sketch.f2_partial(j).load(std::memory_order_relaxed);
            if (debug) cap_rows[j] = v;
            if (v < min_partial) min_partial = v;
        }

        double heavy = 0.0;
        occ = part.af.occupancy();
        for (std::uint32_t s = 0; s < occ; ++s) {
            const std::uint64_t count = part.af.count(s);
            const std::uint64_t old = part.af.old_count(s);
            const double proj = part.af.projection(s);
            if (debug) {
                cap_keys[s] = part.af.key(s);
                cap_counts[s] = count;
                cap_olds[s] = old;
                __builtin_memcpy(&cap_proj[s], &proj, sizeof(double));
            }
            const double freq = static_cast<double>(count) + half_p * proj;
            heavy += freq * freq -
                     static_cast<double>(old) * static_cast<double>(old);
        }

        std::atomic_thread_fence(std::memory_order_acquire);
        const std::uint64_t v1 = part.v1.load(std::memory_order_relaxed);
        if (v1 == v2) {
            generation = v2;
            local = static_cast<double>(min_partial) + heavy;
            break;
        }
        ++retries;
        backoff_scan(spins);
    }

    if (debug) {
        // The accepted generation's stamp cannot be overwritten while the
        // scan flag stalls further flushes; compare before releasing it.
        const StateStamp& s = part.stamps[generation % part.stamps.size()];
        bool ok = s.generation == generation && s.occupancy == occ;
        if (ok) {
            for (std::uint32_t j = 0; j < rows && ok; ++j) ok = s.per_row[j] == cap_rows[j];
            for (std::uint32_t i = 0; i < occ && ok; ++i) {
                ok = s.keys[i] == cap_keys[i] && s.counts[i] == cap_counts[i] &&
                     s.old_counts[i] == cap_olds[i] && s.projection_bits[i] == cap_proj[i];
            }
        }
        if (!ok) snapshot_mismatches_.fetch_add(1, std::memory_order_relaxed);
    }

    part.being_scanned.store(false, std::memory_order_release);
    return local;
}

QueryResult LmqSketch::f2_lagom() {
    std::lock_guard<std::mutex> guard(scanner_mu_);  // single scanner
    QueryResult r;
    const std::uint64_t t0 = now_ns();
    double total = 0.0;
    for (auto& p : parts_) {
        std::uint32_t retries = 0;
        total += scan_partition_lagom(*p, retries);
        r.retries = std::max(r.retries, retries);  // max per-partition retries
    }
    r.value = total <= 0.0 ? 0 : static_cast<std::uint64_t>(total);  // truncate
    r.duration_ns = now_ns() - t0;
    return r;
}

std::uint64_t LmqSketch::f1_fullsync() {
    rw_.lock_exclusive();
    std::uint64_t total = 0;
    for (std::uint32_t i = 0; i < cfg_.partitions; ++i) {
        const PartitionState& part = *parts_[i];
        total += part.sketch.row_sum(0);
        const std::uint32_t occ = part.af.occupancy();
        for (std::uint32_t s = 0; s < occ; ++s) {
            total += part.af.count(s) - part.af.old_count(s);
        }
        for (std::uint32_t j = 0; j < cfg_.partitions; ++j) {
            total += parts_[j]->dfs[i].sum();
        }
    }
    rw_.unlock_exclusive();
    return total;
}

QueryResult LmqSketch::f2_fullsync() {
    QueryResult r;
    const std::uint64_t t0 = now_ns();
    rw_.lock_exclusive();
    r.value = clamp_to_u64(f2_all_unlocked());
    rw_.unlock_exclusive();
    r.duration_ns = now_ns() - t0;
    return r;
}

QueryResult LmqSketch::f2_query() {
    switch (cfg_.mode) {
        case SyncMode::full_sync: return f2_fullsync();
        case SyncMode::no_sync: return f2_nosync();
        case SyncMode::lagom: return f2_lagom();
        case SyncMode::delegation_plain:
            throw std::logic_error("delegation_plain mode has no global F2 query");
    }
    throw std::logic_error("unreachable");
}

}  // namespace lmq
