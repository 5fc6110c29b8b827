#include <doctest.h>

#include <cmath>

#include "lmq/lmq_sketch.hpp"
#include "lmq/reference.hpp"
#include "lmq/runner.hpp"
#include "lmq/stream.hpp"

using namespace lmq;

namespace {

std::uint64_t key_owned_by(const LmqSketch& s, std::uint32_t partition,
                           std::uint64_t start = 0) {
    for (std::uint64_t k = start;; ++k) {
        if (s.owner(k) == partition) return k;
    }
}

void feed_round_robin(LmqSketch& s, const std::vector<Tuple>& stream) {
    const std::uint32_t p = s.partition_count();
    for (std::size_t i = 0; i < stream.size(); ++i) {
        s.update_sequential(static_cast<std::uint32_t>(i % p), stream[i].key, stream[i].value);
    }
}

}  // namespace

TEST_CASE("point query sums the owner ASketch and buffered delegated counts") {
    GlobalConfig cfg;
    cfg.partitions = 2;
    LmqSketch s(cfg);
    CHECK(s.point_query(1234) == 0);

    const std::uint64_t a = key_owned_by(s, 1);
    s.update(1, a, 5);
    s.quiesce_flush_all();  // a sits in partition 1's filter with count 5
    REQUIRE(s.partition(1).af.lookup(a).has_value());

    s.update(0, a, 2);  // buffered in thread 0's filter for partition 1
    CHECK(s.point_query(a) == 7);
}

TEST_CASE("point query never underestimates after a full replay") {
    GlobalConfig cfg;
    cfg.partitions = 4;
    cfg.seed = 5;
    LmqSketch s(cfg);
    const auto stream = gen_zipf(StreamSpec{1.5, 3000, 30000, 8});
    feed_round_robin(s, stream);

    ExactOracle oracle;
    oracle.add_stream(stream);
    for (const auto& [key, f] : oracle.frequencies()) {
        CHECK(s.point_query(key) >= f);
    }
}

TEST_CASE("f1 query: empty, arithmetic series, buffered updates included") {
    GlobalConfig cfg;
    cfg.partitions = 2;
    LmqSketch s(cfg);
    CHECK(s.f1_query() == 0);

    std::uint64_t key = 1;
    for (std::uint32_t v = 1; v <= 100; ++v) {
        s.update_sequential(v % 2, key++, v);
    }
    CHECK(s.f1_query() == 100 * 101 / 2);  // counted at buffering time
}

TEST_CASE("f2_nosync quiescent arithmetic on a constructed partition") {
    GlobalConfig cfg;
    cfg.partitions = 1;
    cfg.rows = 4;
    cfg.cols = 16;
    LmqSketch s(cfg);
    PartitionState& part = s.partition_mut(0);

    // CMS holds the heavy key's 2 pre-residency occurrences only
    for (std::uint32_t j = 0; j < cfg.rows; ++j) part.sketch.add_at(j, 0, 2);
    part.af.debug_set_slot(0, 42, 10, 2, 0.0);

    // CM+ term 4 plus 10^2 - 2^2
    CHECK(s.f2_nosync().value == 100);
    CHECK(f2_all_seq(s) == 100);
}

TEST_CASE("f2_lagom arithmetic with the projection term") {
    GlobalConfig cfg;
    cfg.partitions = 4;
    cfg.rows = 4;
    cfg.cols = 16;
    LmqSketch s(cfg);
    PartitionState& part = s.partition_mut(0);

    for (std::uint32_t j = 0; j < cfg.rows; ++j) part.sketch.add_at(j, 0, 2);  // per-row min 4
    part.af.debug_set_slot(0, 42, 10, 2, 3.0);

    // 4 + (10 + 4*3/2)^2 - 2^2 = 4 + 256 - 4 = 256
    CHECK(s.f2_lagom().value == 256);
    CHECK(f2_proj_seq(s) == 256);

    GlobalConfig empty_cfg;
    empty_cfg.partitions = 4;
    LmqSketch empty(empty_cfg);
    CHECK(empty.f2_lagom().value == 0);
    CHECK(empty.f2_nosync().value == 0);
}

TEST_CASE("frozen-state equality with the sequential evaluations") {
    for (const std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        GlobalConfig cfg;
        cfg.partitions = 4;
        cfg.seed = seed;
        LmqSketch s(cfg);
        const auto stream = gen_zipf(StreamSpec{1.5, 2000, 50000, seed + 10});
        feed_round_robin(s, stream);
        // frozen but not quiescent: delegation filters still hold residue
        CHECK(s.f2_nosync().value == f2_all_seq(s));
        CHECK(s.f2_lagom().value == f2_proj_seq(s));

        s.quiesce_flush_all();
        CHECK(s.f2_nosync().value == f2_all_seq(s));
        CHECK(s.f2_lagom().value == f2_proj_seq(s));
    }
}

TEST_CASE("lagom and nosync never underestimate F2 at quiescence") {
    for (const std::uint64_t seed : {4ULL, 9ULL}) {
        GlobalConfig cfg;
        cfg.partitions = 4;
        cfg.seed = seed;
        LmqSketch s(cfg);
        const auto stream = gen_zipf(StreamSpec{1.5, 5000, 50000, seed});
        feed_round_robin(s, stream);
        s.quiesce_flush_all();

        ExactOracle oracle;
        oracle.add_stream(stream);
        CHECK(s.f2_lagom().value >= oracle.f2());
        CHECK(s.f2_nosync().value >= oracle.f2());
    }
}

TEST_CASE("full-sync queries: exact F1, one-sided F2") {
    GlobalConfig cfg;
    cfg.partitions = 4;
    cfg.mode = SyncMode::full_sync;
    LmqSketch s(cfg);
    CHECK(s.f1_fullsync() == 0);
    CHECK(s.f2_fullsync().value == 0);

    const auto stream = gen_zipf(StreamSpec{1.2, 1000, 20000, 6});
    feed_round_robin(s, stream);

    ExactOracle oracle;
    oracle.add_stream(stream);

    // exact even with buffered residue: delegation filter sums are included
    CHECK(s.f1_fullsync() == oracle.total_weight());

    s.quiesce_flush_all();
    CHECK(s.f1_fullsync() == oracle.total_weight());
    // one-sided once buffered light keys have reached the sketches
    CHECK(s.f2_fullsync().value >= oracle.f2());
}

TEST_CASE("f2_query dispatches by mode and rejects delegation-plain") {
    GlobalConfig cfg;
    cfg.partitions = 2;
    cfg.mode = SyncMode::delegation_plain;
    LmqSketch s(cfg);
    CHECK_THROWS_AS(s.f2_query(), std::logic_error);

    GlobalConfig lagom_cfg;
    lagom_cfg.partitions = 2;
    LmqSketch l(lagom_cfg);
    CHECK(l.f2_query().value == l.f2_lagom().value);
}

TEST_CASE("mailbox point query matches the owner-executed result") {
    GlobalConfig cfg;
    cfg.partitions = 2;
    cfg.seed = 13;
    LmqSketch s(cfg);
    const auto stream = gen_zipf(StreamSpec{1.5, 100, 5000, 3});
    auto subs = split_round_robin(stream, 2);

    RunnerOptions opt;
    opt.pin_threads = false;
    UpdateRunner runner(s, std::move(subs), opt);
    runner.start();
    runner.wait_streams_consumed();

    ExactOracle oracle;
    oracle.add_stream(stream);
    int checked = 0;
    for (const auto& [key, f] : oracle.frequencies()) {
        const std::uint64_t remote = s.point_query_remote(key);
        CHECK(remote >= f);  // all updates completed before the query
        if (++checked >= 20) break;
    }
    runner.stop_and_join();
}

TEST_CASE("retry diagnostics stay zero without concurrent flushes") {
    GlobalConfig cfg;
    cfg.partitions = 4;
    LmqSketch s(cfg);
    const auto stream = gen_zipf(StreamSpec{1.0, 500, 10000, 2});
    feed_round_robin(s, stream);
    const QueryResult r = s.f2_lagom();
    CHECK(r.retries == 0);
    CHECK(r.duration_ns > 0);
}
