#include "lmq/lmq_sketch.hpp"

#include <functional>

namespace lmq {

namespace {

inline void backoff(std::uint32_t& spins) {
    if (spins < 64) {
#if defined(__x86_64__) || defined(__i386__)
        __builtin_ia32_pause();
#endif
        ++spins;
    } else {
        std::this_thread::yield();
    }
}

inline std::uint64_t current_thread_token() {
    return std::hash<std::thread::id>{}(std::this_thread::get_id()) | 1ULL;
}

}  // namespace

LmqSketch::LmqSketch(const GlobalConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    std::uint64_t state = cfg_.seed;
    owner_salt_ = splitmix64(state);
    parts_.reserve(cfg_.partitions);
    for (std::uint32_t i = 0; i < cfg_.partitions; ++i) {
        const std::uint64_t sketch_seed = splitmix64(state);
        parts_.push_back(std::make_unique<PartitionState>(cfg_, sketch_seed));
    }
    if (cfg_.debug_snapshots) {
        for (auto& p : parts_) {
            p->stamps.resize(16);
            for (auto& s : p->stamps) {
                s.per_row.assign(cfg_.rows, 0);
                s.keys.assign(cfg_.filter_slots, 0);
                s.counts.assign(cfg_.filter_slots, 0);
                s.old_counts.assign(cfg_.filter_slots, 0);
                s.projection_bits.assign(cfg_.filter_slots, 0);
            }
            write_stamp(*p, 0);  // pristine state for scans before any flush
        }
    }
}

void LmqSketch::claim_writer(PartitionState& part) const {
    if (!cfg_.debug_writer_checks) return;
    const std::uint64_t me = current_thread_token();
    std::uint64_t seen = part.writer_id.load(std::memory_order_relaxed);
    if (seen == 0) {
        part.writer_id.compare_exchange_strong(seen, me, std::memory_order_relaxed);
        seen = part.writer_id.load(std::memory_order_relaxed);
    }
    assert(seen == me && "single-writer discipline violated");
}

void LmqSketch::update(std::uint32_t t, std::uint64_t key, std::uint32_t value) {
    assert(t < cfg_.partitions);
    assert(value > 0);
    if (cfg_.mode == SyncMode::full_sync) {
        update_fullsync(t, key, value);
        return;
    }
    claim_writer(*parts_[t]);
    serve_mailbox(t);
    if (!parts_[t]->pending.empty()) process_pending_inserts(t);
    insert_buffered(t, key, value);
}

void LmqSketch::update_sequential(std::uint32_t t, std::uint64_t key, std::uint32_t value) {
    assert(t < cfg_.partitions);
    assert(value > 0);
    const std::uint32_t o = owner(key);
    if (cfg_.mode == SyncMode::full_sync) {
        rw_.lock_shared();
        if (parts_[t]->dfs[o].awaiting_flush()) process_pending_inserts(o);
        insert_buffered(t, key, value);
        rw_.unlock_shared();
        return;
    }
    if (parts_[t]->dfs[o].awaiting_flush()) process_pending_inserts(o);
    insert_buffered(t, key, value);
}

void LmqSketch::insert_buffered(std::uint32_t t, std::uint64_t key, std::uint32_t value) {
    PartitionState& mine = *parts_[t];
    const std::uint32_t o = owner(key);
    DelegationFilter& filter = mine.dfs[o];

    // Filter full (pushed, awaiting the owner's flush): help with own pending
    // work while waiting for the cleared transition.
    std::uint32_t spins = 0;
    while (filter.awaiting_flush()) {
        process_pending_inserts(t);
        serve_mailbox(t);
        backoff(spins);
    }

    filter.add(key, value);
    mine.f1_partial.store(mine.f1_partial.load(std::memory_order_relaxed) + value,
                          std::memory_order_release);

    const bool full = filter.size() == cfg_.filter_slots ||
                      (cfg_.buffer_bound != 0 && filter.sum() >= cfg_.buffer_bound);
    if (full) {
        filter.mark_awaiting_flush();
        const bool pushed = parts_[o]->pending.push(&filter);
        assert(pushed && "pending queue overflow: more than one outstanding filter per producer");
        (void)pushed;
    }
}

void LmqSketch::process_pending_inserts(std::uint32_t t) {
    PartitionState& part = *parts_[t];
    claim_writer(part);
    while (!part.pending.empty()) {
        // An in-progress scan stalls flushes so it retries at most once.
        std::uint32_t spins = 0;
        while (part.being_scanned.load(std::memory_order_acquire)) backoff(spins);

        part.v1.store(part.v1.load(std::memory_order_relaxed) + 1, std::memory_order_relaxed);
        std::atomic_thread_fence(std::memory_order_release);

        DelegationFilter* filter = nullptr;
        const bool got = part.pending.try_pop(filter);
        assert(got && "pending queue emptied by someone else");
        (void)got;

        flush_filter(part, *filter);

        if (cfg_.debug_snapshots) {
            write_stamp(part, part.v2.load(std::memory_order_relaxed) + 1);
        }
        part.v2.store(part.v2.load(std::memory_order_relaxed) + 1, std::memory_order_release);
    }
}

void LmqSketch::flush_filter(PartitionState& part, DelegationFilter& filter) {
    const std::uint32_t n = filter.size();
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint64_t key = filter.entry_key(i);
        const std::uint64_t count = filter.entry_count(i);
        assert(count <= UINT32_MAX);
        part.af.insert_enh(part.sketch, key, static_cast<std::uint32_t>(count));
    }
    filter.clear();  // releases a producer blocked on awaiting_flush
}

void LmqSketch::write_stamp(PartitionState& part, std::uint64_t generation) {
    StateStamp& s = part.stamps[generation % part.stamps.size()];
    s.generation = generation;
    for (std::uint32_t j = 0; j < cfg_.rows; ++j) {
        s.per_row[j] = part.sketch.f2_partial(j).load(std::memory_order_relaxed);
    }
    const std::uint32_t occ = part.af.occupancy();
    s.occupancy = occ;
    for (std::uint32_t i = 0; i < occ; ++i) {
        s.keys[i] = part.af.key(i);
        s.counts[i] = part.af.count(i);
        s.old_counts[i] = part.af.old_count(i);
        double p = part.af.projection(i);
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(p));
        __builtin_memcpy(&bits, &p, sizeof bits);
        s.projection_bits[i] = bits;
    }
}

void LmqSketch::serve_mailbox(std::uint32_t t) {
    PqMailbox& m = parts_[t]->mailbox;
    const std::uint64_t req = m.req_seq.load(std::memory_order_acquire);
    if (req == m.resp_seq.load(std::memory_order_relaxed)) return;
    const std::uint64_t key = m.req_key.load(std::memory_order_relaxed);
    const std::uint64_t value = point_query(key);
    m.resp_value.store(value, std::memory_order_relaxed);
    m.resp_seq.store(req, std::memory_order_release);
}

void LmqSketch::idle_tick(std::uint32_t t) {
    if (cfg_.mode == SyncMode::full_sync) {
        rw_.lock_shared();
        serve_mailbox(t);
        if (!parts_[t]->pending.empty()) process_pending_inserts(t);
        rw_.unlock_shared();
        return;
    }
    serve_mailbox(t);
    if (!parts_[t]->pending.empty()) process_pending_inserts(t);
}

void LmqSketch::update_fullsync(std::uint32_t t, std::uint64_t key, std::uint32_t value) {
    // Never wait on a flush while holding the lock: a pending global query
    // blocks new shared acquisitions, and the flushing owner needs one.
    for (;;) {
        rw_.lock_shared();
        claim_writer(*parts_[t]);
        serve_mailbox(t);
        if (!parts_[t]->pending.empty()) process_pending_inserts(t);
        DelegationFilter& filter = parts_[t]->dfs[owner(key)];
        if (!filter.awaiting_flush()) {
            insert_buffered(t, key, value);
            rw_.unlock_shared();
            return;
        }
        rw_.unlock_shared();
        std::this_thread::yield();
    }
}

void LmqSketch::quiesce_flush_all() {
    if (cfg_.debug_writer_checks) {
        for (auto& p : parts_) p->writer_id.store(0, std::memory_order_relaxed);
    }
    // Drain pushed filters first, then sweep partially filled ones.
    for (std::uint32_t i = 0; i < cfg_.partitions; ++i) {
        process_pending_inserts(i);
    }
    for (std::uint32_t src = 0; src < cfg_.partitions; ++src) {
        for (std::uint32_t dst = 0; dst < cfg_.partitions; ++dst) {
            DelegationFilter& f = parts_[src]->dfs[dst];
            if (f.size() == 0) continue;
            PartitionState& target = *parts_[dst];
            target.v1.store(target.v1.load(std::memory_order_relaxed) + 1,
                            std::memory_order_relaxed);
            std::atomic_thread_fence(std::memory_order_release);
            flush_filter(target, f);
            if (cfg_.debug_snapshots) {
                write_stamp(target, target.v2.load(std::memory_order_relaxed) + 1);
            }
            target.v2.store(target.v2.load(std::memory_order_relaxed) + 1,
                            std::memory_order_release);
        }
    }
    if (cfg_.debug_writer_checks) {
        for (auto& p : parts_) p->writer_id.store(0, std::memory_order_relaxed);
    }
}

}  // namespace lmq
