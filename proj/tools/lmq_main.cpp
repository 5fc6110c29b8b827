// lmq command-line harness: synthetic stream generation and the benchmark
// experiments (throughput, latency, accuracy), emitting CSV results.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lmq/bench.hpp"
#include "lmq/runner.hpp"
#include "lmq/stream.hpp"

namespace {

// "z,domain,len,seed"
lmq::StreamSpec parse_zipf_spec(const std::string& s) {
    lmq::StreamSpec spec;
    double z = 0;
    unsigned long long domain = 0, length = 0, seed = 0;
    if (std::sscanf(s.c_str(), "%lf,%llu,%llu,%llu", &z, &domain, &length, &seed) != 4) {
        throw CLI::ValidationError("zipf spec must be z,domain,len,seed");
    }
    spec.z = z;
    spec.domain = static_cast<std::uint32_t>(domain);
    spec.length = length;
    spec.seed = seed;
    return spec;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lmq: concurrent multi-query frequency sketch harness"};
    app.require_subcommand(1);

    // --- gen
    auto* gen = app.add_subcommand("gen", "generate a Zipf tuple file");
    std::string gen_zipf_arg;
    std::string gen_out;
    bool gen_csv = false;
    gen->add_option("--zipf", gen_zipf_arg, "z,domain,len,seed")->required();
    gen->add_option("--out", gen_out, "output tuple file path")->required();
    gen->add_flag("--csv", gen_csv, "write CSV (key,value lines) instead of binary");

    // --- bench
    auto* bench = app.add_subcommand("bench", "run a benchmark experiment");
    std::string experiment;
    bench->add_option("experiment", experiment,
                      "throughput|throughput-with-queries|latency|accuracy-seq|accuracy-conc")
        ->required();
    std::string mode = "lagom";
    bench->add_option("--mode", mode, "fullsync|nosync|lagom|delegation-plain");
    lmq::BenchConfig cfg;
    bench->add_option("--partitions", cfg.partitions, "partition/updater thread count P");
    bench->add_option("--rows", cfg.rows, "sketch rows H");
    bench->add_option("--cols", cfg.cols, "sketch columns K");
    bench->add_option("--slots", cfg.filter_slots, "filter slots C");
    bench->add_option("--bound", cfg.buffer_bound, "delegation buffer bound B (0 = unbounded)");
    std::string stream_arg;
    bench->add_option("--stream", stream_arg, "tuple file path or zipf:z,domain,len,seed");
    bench->add_option("--query-rate", cfg.query_rate_hz, "global query rate per second");
    bench->add_option("--pq-frac", cfg.pq_fraction, "inline point-query fraction of updates");
    bench->add_option("--reps", cfg.repetitions, "repetitions / seeds");
    bench->add_option("--trigger", cfg.trigger, "accuracy-conc F1 trigger T");
    bench->add_option("--out", cfg.out_path, "CSV output path (appends; default stdout)");
    bench->add_option("--seed", cfg.seed, "base seed");
    std::string qkind = "f2";
    bench->add_option("--query", qkind, "accuracy-conc query kind: f1|f2");
    std::vector<std::uint32_t> sweep;
    bench->add_option("--partition-sweep", sweep, "accuracy-seq partition counts");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            const lmq::StreamSpec spec = parse_zipf_spec(gen_zipf_arg);
            const std::vector<lmq::Tuple> tuples = lmq::gen_zipf(spec);
            if (gen_csv) {
                lmq::write_tuples_csv(gen_out, tuples);
            } else {
                lmq::write_tuples(gen_out, tuples);
            }
            std::fprintf(stderr, "wrote %zu tuples to %s\n", tuples.size(), gen_out.c_str());
            return 0;
        }

        cfg.experiment = lmq::experiment_from_name(experiment);
        cfg.mode = lmq::mode_from_name(mode);
        if (!stream_arg.empty()) {
            if (stream_arg.rfind("zipf:", 0) == 0) {
                cfg.zipf = parse_zipf_spec(stream_arg.substr(5));
            } else {
                cfg.stream_path = stream_arg;
            }
        }
        if (qkind == "f1") {
            cfg.query_kind = lmq::QueryKind::f1;
        } else if (qkind == "f2") {
            cfg.query_kind = lmq::QueryKind::f2;
        } else {
            throw CLI::ValidationError("--query must be f1 or f2");
        }
        if (!sweep.empty()) cfg.partition_sweep = sweep;
        cfg.pin_threads = lmq::pinning_enabled_from_env();
        return lmq::run_experiment(cfg);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
