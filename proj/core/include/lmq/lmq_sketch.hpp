#pragma once

#include <atomic>
#include <cassert>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "lmq/aug_filter.hpp"
#include "lmq/count_min.hpp"
#include "lmq/delegation_filter.hpp"
#include "lmq/hash.hpp"
#include "lmq/pending_queue.hpp"
#include "lmq/rw_lock.hpp"

namespace lmq {

// Synchronization design for global queries.
//   full_sync:        readers-writer lock; global queries exclusive.
//   no_sync:          unsynchronized scans (quiescence-consistent only).
//   lagom:            per-partition version-pair + scan-flag handshake.
//   delegation_plain: update/point-query only; no global queries.
enum class SyncMode { full_sync, no_sync, lagom, delegation_plain };

struct GlobalConfig {
    std::uint32_t partitions = 1;    // P: partition and updater thread count
    std::uint32_t rows = 8;          // H
    std::uint32_t cols = 1024;       // K
    std::uint32_t filter_slots = 16; // C: slots in ASketch and delegation filters
    std::uint64_t buffer_bound = 1000;  // B: max buffered weight per filter; 0 = unbounded
    std::uint64_t seed = 1;
    SyncMode mode = SyncMode::lagom;
    bool debug_snapshots = false;     // stamp flush-complete states, verify scans
    bool debug_writer_checks = false; // assert single-writer discipline

    void validate() const {
        if (partitions < 1) throw std::invalid_argument("config: partitions must be >= 1");
        if (rows < 1 || cols < 1) throw std::invalid_argument("config: rows/cols must be >= 1");
        if (filter_slots < 1) throw std::invalid_argument("config: filter_slots must be >= 1");
    }
};

struct QueryResult {
    std::uint64_t value = 0;
    std::uint32_t retries = 0;      // lagom diagnostics
    std::uint64_t duration_ns = 0;
};

// Generation-stamped copy of the scan-relevant partition state (F2 partials
// plus filter slots), written at flush completion when debug_snapshots is on.
struct StateStamp {
    std::uint64_t generation = 0;
    std::uint32_t occupancy = 0;
    std::vector<std::uint64_t> per_row;
    std::vector<std::uint64_t> keys;
    std::vector<std::uint64_t> counts;
    std::vector<std::uint64_t> old_counts;
    std::vector<std::uint64_t> projection_bits;
};

// One-slot request/response mailbox for cross-thread point queries; the
// owner polls it between updates.
struct PqMailbox {
    std::mutex caller_mu;  // serializes external callers
    std::atomic<std::uint64_t> req_seq{0};
    std::atomic<std::uint64_t> req_key{0};
    std::atomic<std::uint64_t> resp_seq{0};
    std::atomic<std::uint64_t> resp_value{0};
};

class LmqSketch;

// Per-partition state. The partition's updater thread is the only mutator of
// sketch, af, f1_partial, and the version pair; it is also the only writer of
// the outgoing delegation filters in `dfs` (cleared by target owners during
// flushes, under the awaiting-flush handshake).
struct PartitionState {
    PartitionState(const GlobalConfig& cfg, std::uint64_t sketch_seed)
        : sketch(SketchConfig{cfg.rows, cfg.cols, sketch_seed}),
          af(cfg.filter_slots),
          pending(cfg.partitions) {
        for (std::uint32_t j = 0; j < cfg.partitions; ++j) dfs.emplace_back(cfg.filter_slots);
    }

    CountMinF2 sketch;
    AugFilter af;
    std::atomic<std::uint64_t> f1_partial{0};

    // Version pair: v1 incremented at flush start, v2 at completion.
    // v1 >= v2 always; equal iff no flush is in progress.
    alignas(64) std::atomic<std::uint64_t> v1{0};
    std::atomic<std::uint64_t> v2{0};
    std::atomic<bool> being_scanned{false};

    PendingQueue<DelegationFilter*> pending;
    std::deque<DelegationFilter> dfs;  // outgoing filters, indexed by target partition

    PqMailbox mailbox;

    // debug_writer_checks: hashed id of the thread claiming this partition
    std::atomic<std::uint64_t> writer_id{0};

    // debug_snapshots ring, indexed by generation
    std::vector<StateStamp> stamps;
};

// The composite partitioned sketch: per-partition Count-Min + augmented
// filter, delegation filters with bounded buffering, and point/F1/F2 queries
// under the configured synchronization design.
class LmqSketch {
public:
    explicit LmqSketch(const GlobalConfig& cfg);

    const GlobalConfig& config() const { return cfg_; }
    std::uint32_t partition_count() const { return cfg_.partitions; }

    // Deterministic, uniform key-to-partition map, independent of row hashes.
    std::uint32_t owner(std::uint64_t key) const {
        return static_cast<std::uint32_t>(mix64(key ^ owner_salt_) % cfg_.partitions);
    }

    // --- update path (thread `t` must be the designated updater for index t)

    // Buffer one tuple, flushing/helping as the protocol requires. A full
    // target filter blocks until its owner flushes, so every partition's
    // updater must be live.
    void update(std::uint32_t t, std::uint64_t key, std::uint32_t value);

    // Single-threaded feeding: the caller acts as every owner, so a target
    // filter awaiting flush is drained inline instead of waiting on another
    // thread. Not safe concurrently with other updaters.
    void update_sequential(std::uint32_t t, std::uint64_t key, std::uint32_t value);

    // Drain this partition's pending queue (owner only).
    void process_pending_inserts(std::uint32_t t);

    // Answer at most one mailbox point query (owner only).
    void serve_mailbox(std::uint32_t t);

    // Housekeeping for idle updaters: serve mailbox + drain pending.
    void idle_tick(std::uint32_t t);

    // --- queries

    // Point query per the delegation design: ASketch result at the owner plus
    // buffered counts in all delegation filters targeting the owner. Must run
    // on the owner thread (or under quiescence/exclusion).
    std::uint64_t point_query(std::uint64_t key) const;

    // Owner-executed point query from updater thread t (asserts ownership;
    // takes the shared lock in full-sync mode).
    std::uint64_t point_query_owner(std::uint32_t t, std::uint64_t key);

    // Cross-thread point query, delegated to the owner via its mailbox.
    // Requires the owner's updater to be live (calling update/idle_tick).
    std::uint64_t point_query_remote(std::uint64_t key);

    // F1: one atomic read per partition; wait-free, any thread.
    std::uint64_t f1_query() const;

    // Global F2 under the configured mode.
    QueryResult f2_query();

    // F2 without synchronization (Eqs. for F2-all+): per-partition CM+ by
    // full counter scan plus squared heavy-key contributions including
    // delegation-filter residues. May miss or double-count concurrently
    // flushed updates; exact only at quiescence.
    QueryResult f2_nosync() const;

    // F2 with the per-partition snapshot handshake (F2-proj+): per-row
    // partial minimum plus projected heavy-key contributions. At most one
    // scanner at a time (serialized internally).
    QueryResult f2_lagom();

    // Full-Sync global queries (exclusive access).
    std::uint64_t f1_fullsync();
    QueryResult f2_fullsync();

    // --- quiescence helpers (all updaters must be stopped)

    // Flush every pending and partially filled delegation filter.
    void quiesce_flush_all();

    // --- introspection (tests, reference evaluation on frozen state)

    const PartitionState& partition(std::uint32_t i) const { return *parts_[i]; }
    PartitionState& partition_mut(std::uint32_t i) { return *parts_[i]; }

    const DelegationFilter& delegation_filter(std::uint32_t source, std::uint32_t target) const {
        return parts_[source]->dfs[target];
    }

    // debug_snapshots: scans whose accepted state failed to match a stamp
    std::uint64_t snapshot_mismatches() const {
        return snapshot_mismatches_.load(std::memory_order_relaxed);
    }

private:
    void insert_buffered(std::uint32_t t, std::uint64_t key, std::uint32_t value);
    void update_fullsync(std::uint32_t t, std::uint64_t key, std::uint32_t value);
    void flush_filter(PartitionState& part, DelegationFilter& filter);
    void write_stamp(PartitionState& part, std::uint64_t generation);
    double scan_partition_lagom(PartitionState& part, std::uint32_t& retries);
    __int128 f2_all_unlocked() const;
    void claim_writer(PartitionState& part) const;

    GlobalConfig cfg_;
    std::uint64_t owner_salt_;
    std::vector<std::unique_ptr<PartitionState>> parts_;
    RwLock rw_;                 // full-sync mode only
    std::mutex scanner_mu_;     // single global F2 scanner at a time
    std::atomic<std::uint64_t> snapshot_mismatches_{0};
};

}  // namespace lmq
