#include "lmq/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "lmq/reference.hpp"
#include "lmq/runner.hpp"

namespace lmq {

namespace {

using Clock = std::chrono::steady_clock;

// Append-safe CSV sink: header written only when the target is new/empty.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::string& header) {
        if (path.empty()) {
            out_ = &std::cout;
        } else {
            const bool fresh =
                !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
            file_.open(path, std::ios::app);
            if (!file_) throw std::runtime_error("cannot open csv output: " + path);
            out_ = &file_;
            if (!fresh) return;
        }
        *out_ << header << '\n';
    }

    void row(const std::string& line) { *out_ << line << '\n'; }

    ~CsvWriter() { out_->flush(); }

private:
    std::ofstream file_;
    std::ostream* out_ = nullptr;
};

// Rate-limited query loop on its own thread; records per-query latency.
class RateScanner {
public:
    template <typename Fn>
    RateScanner(Fn fn, double rate_hz, std::size_t reserve = 1 << 20) {
        samples_.reserve(reserve);
        const auto period = rate_hz > 0.0
                                ? std::chrono::nanoseconds(static_cast<std::uint64_t>(1e9 / rate_hz))
                                : std::chrono::nanoseconds(0);
        thread_ = std::thread([this, fn, period] {
            auto next = Clock::now();
            while (!stop_.load(std::memory_order_acquire)) {
                const auto t0 = Clock::now();
                fn();
                const auto t1 = Clock::now();
                if (recording_.load(std::memory_order_acquire)) {
                    samples_.push_back(static_cast<std::uint64_t>(
                        std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()));
                    count_.store(samples_.size(), std::memory_order_release);
                }
                next += period;
                if (next > t1) {
                    std::this_thread::sleep_until(next);
                } else {
                    next = t1;  // can't keep up; run back to back
                    std::this_thread::yield();
                }
            }
        });
    }

    void begin_recording() { recording_.store(true, std::memory_order_release); }

    std::size_t count() const { return count_.load(std::memory_order_acquire); }

    std::vector<std::uint64_t> stop_and_collect() {
        stop_.store(true, std::memory_order_release);
        if (thread_.joinable()) thread_.join();
        return std::move(samples_);
    }

    ~RateScanner() {
        stop_.store(true, std::memory_order_release);
        if (thread_.joinable()) thread_.join();
    }

private:
    std::vector<std::uint64_t> samples_;
    std::atomic<std::size_t> count_{0};
    std::atomic<bool> recording_{false};
    std::atomic<bool> stop_{false};
    std::thread thread_;
};

GlobalConfig sketch_config(const BenchConfig& cfg) {
    GlobalConfig g;
    g.partitions = cfg.partitions;
    g.rows = cfg.rows;
    g.cols = cfg.cols;
    g.filter_slots = cfg.filter_slots;
    g.buffer_bound = cfg.mode == SyncMode::delegation_plain ? 0 : cfg.buffer_bound;
    g.seed = cfg.seed;
    g.mode = cfg.mode;
    return g;
}

std::uint64_t bench_f1(LmqSketch& sketch) {
    return sketch.config().mode == SyncMode::full_sync ? sketch.f1_fullsync()
                                                       : sketch.f1_query();
}

std::string format_double(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

void BenchConfig::validate() const {
    if (partitions < 1) throw std::invalid_argument("bench: partitions must be >= 1");
    if (query_rate_hz < 0.0) throw std::invalid_argument("bench: query rate must be >= 0");
    if (pq_fraction < 0.0 || pq_fraction > 1.0)
        throw std::invalid_argument("bench: pq fraction must be in [0,1]");
    if (repetitions < 1) throw std::invalid_argument("bench: repetitions must be >= 1");
}

std::vector<Tuple> load_stream(const BenchConfig& cfg) {
    if (!cfg.stream_path.empty()) {
        if (cfg.stream_path.size() > 4 &&
            cfg.stream_path.substr(cfg.stream_path.size() - 4) == ".csv") {
            return read_tuples_csv(cfg.stream_path);
        }
        return read_tuples(cfg.stream_path);
    }
    return gen_zipf(cfg.zipf);
}

const char* mode_name(SyncMode mode) {
    switch (mode) {
        case SyncMode::full_sync: return "fullsync";
        case SyncMode::no_sync: return "nosync";
        case SyncMode::lagom: return "lagom";
        case SyncMode::delegation_plain: return "delegation-plain";
    }
    return "?";
}

SyncMode mode_from_name(const std::string& name) {
    if (name == "fullsync") return SyncMode::full_sync;
    if (name == "nosync") return SyncMode::no_sync;
    if (name == "lagom") return SyncMode::lagom;
    if (name == "delegation-plain") return SyncMode::delegation_plain;
    throw std::invalid_argument("unknown mode: " + name);
}

Experiment experiment_from_name(const std::string& name) {
    if (name == "throughput") return Experiment::throughput;
    if (name == "throughput-with-queries") return Experiment::throughput_with_queries;
    if (name == "latency") return Experiment::latency;
    if (name == "accuracy-seq") return Experiment::accuracy_seq;
    if (name == "accuracy-conc") return Experiment::accuracy_conc;
    throw std::invalid_argument("unknown experiment: " + name);
}

std::uint64_t percentile_ns(std::vector<std::uint64_t> samples, double p) {
    if (samples.empty()) return 0;
    std::sort(samples.begin(), samples.end());
    const double rank = p / 100.0 * static_cast<double>(samples.size() - 1);
    return samples[static_cast<std::size_t>(std::llround(rank))];
}

ThroughputResult run_throughput(const BenchConfig& cfg, bool with_queries) {
    cfg.validate();
    const std::vector<Tuple> stream = load_stream(cfg);
    auto subs = split_round_robin(stream, cfg.partitions);

    LmqSketch sketch(sketch_config(cfg));

    RunnerOptions opt;
    opt.pq_fraction = with_queries ? cfg.pq_fraction : 0.0;
    opt.pin_threads = cfg.pin_threads;
    UpdateRunner runner(sketch, std::move(subs), opt);

    std::unique_ptr<RateScanner> f1_scanner, f2_scanner;
    std::atomic<std::uint64_t> f1_count{0}, f2_count{0};
    const bool global_queries = with_queries && cfg.mode != SyncMode::delegation_plain;
    if (global_queries) {
        f1_scanner = std::make_unique<RateScanner>(
            [&sketch, &f1_count] {
                bench_f1(sketch);
                f1_count.fetch_add(1, std::memory_order_relaxed);
            },
            cfg.query_rate_hz);
        f2_scanner = std::make_unique<RateScanner>(
            [&sketch, &f2_count] {
                sketch.f2_query();
                f2_count.fetch_add(1, std::memory_order_relaxed);
            },
            cfg.query_rate_hz);
    }

    runner.start();
    runner.wait_streams_consumed();

    ThroughputResult res;
    res.tuples = stream.size();
    std::uint64_t slowest = 0;
    for (std::uint32_t t = 0; t < cfg.partitions; ++t) {
        slowest = std::max(slowest,
                           static_cast<std::uint64_t>(runner.thread_duration(t).count()));
    }
    res.slowest_thread_ns = slowest;
    res.updates_per_second =
        slowest == 0 ? 0.0
                     : static_cast<double>(stream.size()) / (static_cast<double>(slowest) * 1e-9);

    if (f1_scanner) f1_scanner->stop_and_collect();
    if (f2_scanner) f2_scanner->stop_and_collect();
    runner.stop_and_join();

    res.f1_queries = f1_count.load();
    res.f2_queries = f2_count.load();
    res.point_queries = runner.inline_pq_count();

    CsvWriter csv(cfg.out_path,
                  "schema,mode,partitions,z,tuples,with_queries,slowest_thread_ns,"
                  "updates_per_second,f1_queries,f2_queries,point_queries");
    std::ostringstream row;
    row << "throughput.v1," << mode_name(cfg.mode) << ',' << cfg.partitions << ',' << cfg.zipf.z
        << ',' << res.tuples << ',' << (with_queries ? 1 : 0) << ',' << res.slowest_thread_ns
        << ',' << format_double(res.updates_per_second) << ',' << res.f1_queries << ','
        << res.f2_queries << ',' << res.point_queries;
    csv.row(row.str());
    return res;
}

LatencyResult run_latency(const BenchConfig& cfg) {
    cfg.validate();
    const std::vector<Tuple> stream = load_stream(cfg);
    auto subs = split_round_robin(stream, cfg.partitions);

    LmqSketch sketch(sketch_config(cfg));

    RunnerOptions opt;
    opt.pq_fraction = cfg.pq_fraction;
    opt.pin_threads = cfg.pin_threads;
    opt.loop_stream = true;  // continuous updates for the whole measurement
    UpdateRunner runner(sketch, std::move(subs), opt);

    const bool has_global_f2 = cfg.mode != SyncMode::delegation_plain;
    RateScanner f1_scanner([&sketch] { sketch.f1_query(); }, cfg.query_rate_hz);
    std::unique_ptr<RateScanner> f2_scanner;
    if (has_global_f2) {
        f2_scanner = std::make_unique<RateScanner>([&sketch] { sketch.f2_query(); },
                                                   cfg.query_rate_hz);
    }

    runner.start();
    std::this_thread::sleep_for(std::chrono::milliseconds(100));  // populate filters
    f1_scanner.begin_recording();
    if (f2_scanner) f2_scanner->begin_recording();

    const std::size_t want = std::max<std::size_t>(100, cfg.repetitions);
    const auto deadline = Clock::now() + std::chrono::seconds(120);
    while ((f1_scanner.count() < want ||
            (f2_scanner && f2_scanner->count() < want)) &&
           Clock::now() < deadline) {
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }

    LatencyResult res;
    res.f1_ns = f1_scanner.stop_and_collect();
    if (f2_scanner) res.f2_ns = f2_scanner->stop_and_collect();
    runner.stop_and_join();

    CsvWriter csv(cfg.out_path,
                  "schema,query,mode,partitions,z,samples,p50_ns,p90_ns,p99_ns,min_ns,max_ns");
    for (const auto& [name, samples] : {std::pair{"f1", &res.f1_ns}, std::pair{"f2", &res.f2_ns}}) {
        std::ostringstream row;
        const auto& s = *samples;
        row << "latency.v1," << name << ',' << mode_name(cfg.mode) << ',' << cfg.partitions << ','
            << cfg.zipf.z << ',' << s.size() << ',' << percentile_ns(s, 50) << ','
            << percentile_ns(s, 90) << ',' << percentile_ns(s, 99) << ','
            << (s.empty() ? 0 : *std::min_element(s.begin(), s.end())) << ','
            << (s.empty() ? 0 : *std::max_element(s.begin(), s.end()));
        csv.row(row.str());
    }
    return res;
}

std::vector<AccuracySeqRow> run_accuracy_seq(const BenchConfig& cfg) {
    cfg.validate();
    std::vector<AccuracySeqRow> rows;
    CsvWriter csv(cfg.out_path, "schema,method,partitions,z,seed,estimate,oracle,mape");

    auto emit = [&](const std::string& method, std::uint32_t p, std::uint64_t seed,
                    double estimate, double oracle) {
        AccuracySeqRow r;
        r.method = method;
        r.partitions = p;
        r.z = cfg.zipf.z;
        r.seed = seed;
        r.estimate = estimate;
        r.oracle = oracle;
        r.mape = oracle > 0.0 ? std::abs(estimate - oracle) / oracle * 100.0 : 0.0;
        rows.push_back(r);
        std::ostringstream os;
        os << "accuracy-seq.v1," << method << ',' << p << ',' << cfg.zipf.z << ',' << seed << ','
           << format_double(estimate) << ',' << format_double(oracle) << ','
           << format_double(r.mape);
        csv.row(os.str());
    };

    for (std::uint32_t rep = 0; rep < cfg.repetitions; ++rep) {
        StreamSpec spec = cfg.zipf;
        spec.seed = cfg.seed + rep;
        const std::vector<Tuple> stream =
            cfg.stream_path.empty() ? gen_zipf(spec) : load_stream(cfg);

        ExactOracle oracle;
        oracle.add_stream(stream);
        const double truth = static_cast<double>(oracle.f2());

        // One single-partition sign sketch; thread-local designs merge to a
        // single sketch's accuracy, so the value is flat across P.
        const double agms_estimate =
            static_cast<double>(fast_agms_f2(stream, cfg.agms_rows, cfg.agms_cols, spec.seed));

        for (const std::uint32_t p : cfg.partition_sweep) {
            emit("fast-agms", p, spec.seed, agms_estimate, truth);
            emit("wide", p, spec.seed,
                 static_cast<double>(wide_cmplus(stream, cfg.rows, p, cfg.cols, spec.seed)),
                 truth);
            emit("part", p, spec.seed,
                 static_cast<double>(part_cmplus(stream, p, cfg.rows, cfg.cols, spec.seed)),
                 truth);

            const std::uint32_t as_cols =
                cols_for_budget(cfg.partition_budget_bytes, cfg.rows, 0, cfg.filter_slots);
            emit("partas", p, spec.seed,
                 static_cast<double>(
                     partas_cmplus(stream, p, cfg.rows, as_cols, cfg.filter_slots, spec.seed)),
                 truth);

            // Frozen LMQ structure evaluated with the projection estimator.
            const std::uint32_t lmq_cols =
                cols_for_budget(cfg.partition_budget_bytes, cfg.rows, p, cfg.filter_slots);
            GlobalConfig g;
            g.partitions = p;
            g.rows = cfg.rows;
            g.cols = lmq_cols;
            g.filter_slots = cfg.filter_slots;
            g.buffer_bound = cfg.buffer_bound;
            g.seed = spec.seed;
            g.mode = SyncMode::lagom;
            LmqSketch sketch(g);
            for (std::size_t i = 0; i < stream.size(); ++i) {
                sketch.update_sequential(static_cast<std::uint32_t>(i % p), stream[i].key, stream[i].value);
            }
            sketch.quiesce_flush_all();
            emit("lmq-proj", p, spec.seed, static_cast<double>(f2_proj_seq(sketch)), truth);
        }
    }
    return rows;
}

std::vector<IVLRunRecord> run_accuracy_conc(const BenchConfig& cfg) {
    cfg.validate();
    if (cfg.mode == SyncMode::delegation_plain) {
        throw std::invalid_argument("accuracy-conc: delegation-plain has no global queries");
    }

    std::vector<IVLRunRecord> records;
    CsvWriter csv(cfg.out_path,
                  "schema,query,mode,partitions,z,repetition,q_start,q_value,q_end,"
                  "tuples_a,tuples_b");

    for (std::uint32_t rep = 0; rep < cfg.repetitions; ++rep) {
        StreamSpec spec = cfg.zipf;
        spec.seed = cfg.seed + rep;
        const std::vector<Tuple> stream =
            cfg.stream_path.empty() ? gen_zipf(spec) : load_stream(cfg);
        if (cfg.trigger > stream_weight(stream)) {
            throw std::invalid_argument("accuracy-conc: trigger exceeds stream weight");
        }
        const auto subs = split_round_robin(stream, cfg.partitions);

        const auto sequential_eval = [&](LmqSketch& s) -> std::uint64_t {
            if (cfg.query_kind == QueryKind::f1) return s.f1_query();
            return cfg.mode == SyncMode::lagom ? f2_proj_seq(s) : f2_all_seq(s);
        };

        IVLRunRecord rec;
        rec.mode = mode_name(cfg.mode);
        rec.partitions = cfg.partitions;
        rec.z = cfg.zipf.z;
        rec.repetition = rep;

        // Execution A: pause at F1 >= T, flush to quiescence, evaluate
        // sequentially for the interval's lower bound.
        {
            LmqSketch sketch(sketch_config(cfg));
            RunnerOptions opt;
            opt.pin_threads = cfg.pin_threads;
            UpdateRunner runner(sketch, subs, opt);
            runner.set_trigger(cfg.trigger, [&runner] { runner.request_pause(); });
            runner.start();
            runner.wait_paused();
            sketch.quiesce_flush_all();
            rec.q_start = sequential_eval(sketch);
            std::uint64_t tuples = 0;
            for (std::uint32_t t = 0; t < cfg.partitions; ++t) tuples += runner.processed_tuples(t);
            rec.tuples_a = tuples;
            runner.stop_and_join();
        }

        // Execution B: the same trigger launches the query concurrently;
        // afterwards pause, flush, and evaluate the upper bound.
        {
            LmqSketch sketch(sketch_config(cfg));
            RunnerOptions opt;
            opt.pin_threads = cfg.pin_threads;
            UpdateRunner runner(sketch, subs, opt);

            std::atomic<bool> fire{false};
            std::atomic<bool> done{false};
            std::uint64_t q_value = 0;
            std::thread query_thread([&] {
                while (!fire.load(std::memory_order_acquire)) std::this_thread::yield();
                if (cfg.query_kind == QueryKind::f1) {
                    q_value = sketch.f1_query();
                } else {
                    q_value = sketch.f2_query().value;
                }
                done.store(true, std::memory_order_release);
            });

            runner.set_trigger(cfg.trigger,
                               [&fire] { fire.store(true, std::memory_order_release); });
            runner.start();
            while (!done.load(std::memory_order_acquire)) std::this_thread::yield();
            query_thread.join();
            runner.pause();
            sketch.quiesce_flush_all();
            rec.q_value = q_value;
            rec.q_end = sequential_eval(sketch);
            std::uint64_t tuples = 0;
            for (std::uint32_t t = 0; t < cfg.partitions; ++t) tuples += runner.processed_tuples(t);
            rec.tuples_b = tuples;
            runner.stop_and_join();
        }

        records.push_back(rec);
        std::ostringstream os;
        os << "accuracy-conc.v1," << (cfg.query_kind == QueryKind::f1 ? "f1" : "f2") << ','
           << rec.mode << ',' << rec.partitions << ',' << rec.z << ',' << rec.repetition << ','
           << rec.q_start << ',' << rec.q_value << ',' << rec.q_end << ',' << rec.tuples_a << ','
           << rec.tuples_b;
        csv.row(os.str());
    }
    return records;
}

int run_experiment(const BenchConfig& cfg) {
    switch (cfg.experiment) {
        case Experiment::throughput:
            run_throughput(cfg, false);
            return 0;
        case Experiment::throughput_with_queries:
            run_throughput(cfg, true);
            return 0;
        case Experiment::latency:
            run_latency(cfg);
            return 0;
        case Experiment::accuracy_seq:
            run_accuracy_seq(cfg);
            return 0;
        case Experiment::accuracy_conc:
            run_accuracy_conc(cfg);
            return 0;
    }
    return 1;
}

}  // namespace lmq
