#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <thread>
#include <vector>

#include "lmq/lmq_sketch.hpp"
#include "lmq/stream.hpp"

namespace lmq {

// Reads LMQ_PIN; pinning is on unless LMQ_PIN=0.
bool pinning_enabled_from_env();

struct RunnerOptions {
    double pq_fraction = 0.0;   // inline owner-executed point queries per update
    bool instrument_weights = false;  // per-thread started/completed weight logs
    bool pin_threads = true;
    bool loop_stream = false;   // replay the sub-stream until stopped (latency runs)
};

// Drives P updater threads over per-thread sub-streams. Threads keep serving
// mailbox point queries and pending flushes after their sub-stream is
// consumed, until stop. Supports stop-the-world pauses (observed between
// tuples) for probes and sequential evaluations, and a weight trigger
// checked by thread 0.
class UpdateRunner {
public:
    UpdateRunner(LmqSketch& sketch, std::vector<std::vector<Tuple>> substreams,
                 RunnerOptions options);
    ~UpdateRunner();

    UpdateRunner(const UpdateRunner&) = delete;
    UpdateRunner& operator=(const UpdateRunner&) = delete;

    // Fire `on_fire` (once, from updater thread 0) when f1_query() reaches
    // `threshold`. Must be set before start().
    void set_trigger(std::uint64_t threshold, std::function<void()> on_fire);

    void start();

    // Stop-the-world: returns once every live updater is parked between tuples.
    void pause();
    // Async variant for use from trigger callbacks (running on thread 0).
    void request_pause();
    void wait_paused();
    void resume();

    void stop_and_join();

    bool all_streams_consumed() const;
    void wait_streams_consumed() const;

    std::uint32_t threads() const { return static_cast<std::uint32_t>(subs_.size()); }

    // Instrumented weight logs (valid when instrument_weights).
    std::uint64_t started_weight() const;
    std::uint64_t completed_weight() const;

    std::uint64_t processed_tuples(std::uint32_t t) const;
    std::uint64_t processed_weight(std::uint32_t t) const;

    // Per-thread wall time from start barrier to sub-stream completion.
    std::chrono::nanoseconds thread_duration(std::uint32_t t) const;

    std::uint64_t inline_pq_count() const;

private:
    struct alignas(64) ThreadLog {
        std::atomic<std::uint64_t> started{0};
        std::atomic<std::uint64_t> completed{0};
        std::atomic<std::uint64_t> tuples{0};
        std::atomic<std::uint64_t> weight{0};
        std::atomic<std::int64_t> duration_ns{0};
        std::atomic<bool> consumed{false};
    };

    void worker(std::uint32_t t);
    void park_if_paused(std::uint32_t t);

    LmqSketch& sketch_;
    std::vector<std::vector<Tuple>> subs_;
    RunnerOptions opt_;

    std::vector<std::thread> threads_;
    std::unique_ptr<ThreadLog[]> logs_;

    std::atomic<bool> go_{false};
    std::atomic<bool> stop_{false};
    std::atomic<bool> pause_{false};
    std::atomic<std::uint32_t> parked_{0};
    std::atomic<std::uint64_t> inline_pqs_{0};

    std::uint64_t trigger_threshold_ = 0;
    std::function<void()> trigger_fn_;
    bool trigger_fired_ = false;  // thread 0 private
};

}  // namespace lmq
