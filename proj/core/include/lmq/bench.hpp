#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lmq/lmq_sketch.hpp"
#include "lmq/stream.hpp"

namespace lmq {

enum class Experiment {
    throughput,
    throughput_with_queries,
    latency,
    accuracy_seq,
    accuracy_conc,
};

enum class QueryKind { f1, f2 };

struct BenchConfig {
    Experiment experiment = Experiment::throughput;
    SyncMode mode = SyncMode::lagom;
    std::uint32_t partitions = 4;
    std::uint32_t rows = 8;
    std::uint32_t cols = 1024;
    std::uint32_t filter_slots = 16;
    std::uint64_t buffer_bound = 1000;  // 0 = unbounded

    // Stream source: a tuple file when non-empty, synthetic Zipf otherwise.
    std::string stream_path;
    StreamSpec zipf{1.5, 100000, 10000000, 1};  // desk-scale defaults

    double query_rate_hz = 1000.0;  // per global query type
    double pq_fraction = 0.001;
    std::uint32_t repetitions = 1;
    std::uint64_t trigger = 5000000;  // accuracy-conc F1 threshold T
    QueryKind query_kind = QueryKind::f2;

    // accuracy-seq sweep; other experiments use `partitions`.
    std::vector<std::uint32_t> partition_sweep{1, 4, 16};
    std::uint32_t agms_rows = 6;
    std::uint32_t agms_cols = 8192;
    std::uint32_t partition_budget_bytes = 32768;

    std::uint64_t seed = 1;
    std::string out_path;  // CSV output; empty = stdout
    bool pin_threads = true;

    void validate() const;
};

std::vector<Tuple> load_stream(const BenchConfig& cfg);

const char* mode_name(SyncMode mode);
SyncMode mode_from_name(const std::string& name);
Experiment experiment_from_name(const std::string& name);

// --- results

struct ThroughputResult {
    double updates_per_second = 0.0;
    std::uint64_t tuples = 0;
    std::uint64_t slowest_thread_ns = 0;
    std::uint64_t f1_queries = 0;
    std::uint64_t f2_queries = 0;
    std::uint64_t point_queries = 0;
};

struct LatencyResult {
    std::vector<std::uint64_t> f1_ns;
    std::vector<std::uint64_t> f2_ns;
};

struct AccuracySeqRow {
    std::string method;
    std::uint32_t partitions = 0;
    double z = 0.0;
    std::uint64_t seed = 0;
    double estimate = 0.0;
    double oracle = 0.0;
    double mape = 0.0;  // absolute percent error of this run
};

struct IVLRunRecord {
    std::uint64_t q_start = 0;
    std::uint64_t q_end = 0;
    std::uint64_t q_value = 0;
    std::string mode;
    std::uint32_t partitions = 0;
    double z = 0.0;
    std::uint32_t repetition = 0;
    std::uint64_t tuples_a = 0;  // tuples processed when execution A paused
    std::uint64_t tuples_b = 0;  // tuples processed when execution B paused
};

// --- experiments (each also appends CSV rows to cfg.out_path)

ThroughputResult run_throughput(const BenchConfig& cfg, bool with_queries);
LatencyResult run_latency(const BenchConfig& cfg);
std::vector<AccuracySeqRow> run_accuracy_seq(const BenchConfig& cfg);
std::vector<IVLRunRecord> run_accuracy_conc(const BenchConfig& cfg);

// Dispatch on cfg.experiment; returns process exit status.
int run_experiment(const BenchConfig& cfg);

// p in [0, 100]; nearest-rank on a copy of the samples.
std::uint64_t percentile_ns(std::vector<std::uint64_t> samples, double p);

}  // namespace lmq
