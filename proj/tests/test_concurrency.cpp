#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <chrono>
#include <thread>
#include <vector>

#include "lmq/lmq_sketch.hpp"
#include "lmq/runner.hpp"
#include "lmq/stream.hpp"

using namespace lmq;
using namespace std::chrono;

namespace {

GlobalConfig stress_config(std::uint32_t p) {
    GlobalConfig cfg;
    cfg.partitions = p;
    cfg.rows = 8;
    cfg.cols = 256;
    cfg.filter_slots = 16;
    cfg.buffer_bound = 200;
    cfg.seed = 17;
    return cfg;
}

}  // namespace

TEST_CASE("strict IVL for F1: 1000 concurrent queries stay within the "
          "completed/started weight bounds") {
    GlobalConfig cfg = stress_config(4);
    LmqSketch s(cfg);
    const auto stream = gen_zipf(StreamSpec{1.5, 2000, 300000, 4});
    RunnerOptions opt;
    opt.instrument_weights = true;
    opt.loop_stream = true;
    opt.pin_threads = false;
    UpdateRunner runner(s, split_round_robin(stream, 4), opt);
    runner.start();

    std::uint64_t violations = 0;
    for (int i = 0; i < 1000; ++i) {
        const std::uint64_t lo = runner.completed_weight();
        const std::uint64_t v = s.f1_query();
        const std::uint64_t hi = runner.started_weight();
        if (v < lo || v > hi) ++violations;
        if ((i & 63) == 0) std::this_thread::yield();
    }
    runner.stop_and_join();
    CHECK(violations == 0);
}

TEST_CASE("same-type monotonicity: non-overlapping F1 and owner point queries") {
    GlobalConfig cfg = stress_config(4);
    cfg.debug_writer_checks = true;
    LmqSketch s(cfg);
    const auto subs = split_round_robin(gen_zipf(StreamSpec{1.5, 2000, 400000, 9}), 4);

    std::atomic<std::uint64_t> pq_pairs{0};
    std::atomic<std::uint64_t> pq_violations{0};
    std::atomic<bool> stop{false};

    // Updaters interleave their stream with owner-executed point-query pairs
    // separated by a batch of updates.
    std::vector<std::thread> updaters;
    for (std::uint32_t t = 0; t < 4; ++t) {
        updaters.emplace_back([&, t] {
            std::uint64_t tracked_key = 0;
            std::uint64_t last_value = 0;
            bool have = false;
            std::size_t i = 0;
            while (!stop.load(std::memory_order_relaxed)) {
                const Tuple& tup = subs[t][i % subs[t].size()];
                s.update(t, tup.key, tup.value);
                if (s.owner(tup.key) == t && !have) {
                    tracked_key = tup.key;
                    have = true;
                    last_value = s.point_query_owner(t, tracked_key);
                }
                if (have && (i & 63) == 63) {
                    const std::uint64_t v = s.point_query_owner(t, tracked_key);
                    if (v < last_value) pq_violations.fetch_add(1);
                    last_value = v;
                    pq_pairs.fetch_add(1);
                }
                ++i;
            }
        });
    }

    // F1 monotonicity from a separate query thread: consecutive
    // non-overlapping queries must be non-decreasing.
    std::uint64_t f1_violations = 0;
    std::uint64_t prev = 0;
    for (int i = 0; i < 10000; ++i) {
        const std::uint64_t v = s.f1_query();
        if (v < prev) ++f1_violations;
        prev = v;
    }
    while (pq_pairs.load() < 10000) std::this_thread::yield();
    stop.store(true);
    for (auto& th : updaters) th.join();

    CHECK(f1_violations == 0);
    CHECK(pq_violations.load() == 0);
    CHECK(pq_pairs.load() >= 10000);
}

TEST_CASE("lagom scans match stamped flush-complete states under stress") {
    GlobalConfig cfg = stress_config(4);
    cfg.debug_snapshots = true;
    LmqSketch s(cfg);
    RunnerOptions opt;
    opt.loop_stream = true;
    opt.pin_threads = false;
    UpdateRunner runner(s, split_round_robin(gen_zipf(StreamSpec{1.5, 2000, 200000, 3}), 4), opt);
    runner.start();

    std::uint64_t queries = 0;
    std::uint64_t max_retries = 0;
    std::uint64_t worst_ns = 0;
    std::uint64_t value_regressions = 0;
    std::uint64_t prev_value = 0;
    const auto deadline = steady_clock::now() + seconds(4);
    while (steady_clock::now() < deadline) {
        const QueryResult r = s.f2_lagom();
        ++queries;
        max_retries = std::max(max_retries, static_cast<std::uint64_t>(r.retries));
        worst_ns = std::max(worst_ns, r.duration_ns);
        // lagom F2 observes only flush-complete states, and flushed state
        // only grows, so accepted per-partition scans are monotone; the
        // estimator total is too on quiescent-growing state. Not asserted as
        // zero (projection EWMA may shrink between flushes); tracked only.
        if (r.value < prev_value) ++value_regressions;
        prev_value = r.value;
    }
    runner.stop_and_join();

    CHECK(queries > 100);
    CHECK(s.snapshot_mismatches() == 0);
    CHECK(max_retries <= 2);                    // at most one concurrent flush, plus slack
    CHECK(worst_ns < 10ull * 1000 * 1000 * 1000);  // 10 s watchdog per query
    (void)value_regressions;
}

TEST_CASE("buffering bound: per-target buffered weight never exceeds P*B") {
    GlobalConfig cfg = stress_config(4);
    cfg.buffer_bound = 50;
    LmqSketch s(cfg);
    // unit values only, as the bound is stated for single-increment updates
    RunnerOptions opt;
    opt.loop_stream = true;
    opt.pin_threads = false;
    UpdateRunner runner(s, split_round_robin(gen_zipf(StreamSpec{1.5, 500, 100000, 8}), 4), opt);
    runner.start();

    std::uint64_t violations = 0;
    for (int probe = 0; probe < 25; ++probe) {
        std::this_thread::sleep_for(milliseconds(20));
        runner.pause();  // stop the world
        for (std::uint32_t target = 0; target < 4; ++target) {
            std::uint64_t buffered = 0;
            for (std::uint32_t src = 0; src < 4; ++src) {
                buffered += s.delegation_filter(src, target).sum();
            }
            if (buffered > 4ull * cfg.buffer_bound) ++violations;
        }
        runner.resume();
    }
    runner.stop_and_join();
    CHECK(violations == 0);
}

TEST_CASE("no deadlock: continuous updates, a lagom scanner, and remote point "
          "queries all make progress") {
    GlobalConfig cfg = stress_config(8);
    LmqSketch s(cfg);
    const auto stream = gen_zipf(StreamSpec{1.5, 2000, 200000, 5});
    RunnerOptions opt;
    opt.loop_stream = true;
    opt.pin_threads = false;
    opt.pq_fraction = 0.001;
    UpdateRunner runner(s, split_round_robin(stream, 8), opt);
    runner.start();

    std::atomic<std::uint64_t> scans{0};
    std::atomic<bool> stop{false};
    std::thread scanner([&] {
        while (!stop.load(std::memory_order_acquire)) {
            s.f2_lagom();
            scans.fetch_add(1, std::memory_order_relaxed);
        }
    });

    while (s.f1_query() < 1000) std::this_thread::yield();
    std::uint64_t remote_sum = 0;
    for (int i = 0; i < 50; ++i) {
        remote_sum += s.point_query_remote(stream[i].key);
    }
    CHECK(remote_sum > 0);

    const auto deadline = steady_clock::now() + seconds(10);
    while (scans.load() < 50 && steady_clock::now() < deadline) {
        std::this_thread::sleep_for(milliseconds(5));
    }
    stop.store(true, std::memory_order_release);
    scanner.join();
    runner.stop_and_join();
    CHECK(scans.load() >= 50);
}

TEST_CASE("full-sync under concurrency: exclusive global queries do not "
          "deadlock with blocked producers") {
    GlobalConfig cfg = stress_config(4);
    cfg.mode = SyncMode::full_sync;
    cfg.buffer_bound = 64;
    LmqSketch s(cfg);
    RunnerOptions opt;
    opt.loop_stream = true;
    opt.pin_threads = false;
    UpdateRunner runner(s, split_round_robin(gen_zipf(StreamSpec{1.5, 1000, 100000, 6}), 4), opt);
    runner.start();

    std::uint64_t prev_f1 = 0;
    for (int i = 0; i < 30; ++i) {
        const std::uint64_t f1 = s.f1_fullsync();
        CHECK(f1 >= prev_f1);
        prev_f1 = f1;
        const QueryResult f2 = s.f2_fullsync();
        CHECK(f2.duration_ns < 10ull * 1000 * 1000 * 1000);
        std::this_thread::sleep_for(milliseconds(2));
    }
    runner.stop_and_join();
}
