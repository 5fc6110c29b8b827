#include "lmq/runner.hpp"

#include <cstdlib>
#include <cstring>

#if defined(__linux__)
#include <pthread.h>
#include <sched.h>
#endif

namespace lmq {

bool pinning_enabled_from_env() {
    const char* v = std::getenv("LMQ_PIN");
    return !(v && std::strcmp(v, "0") == 0);
}

namespace {

void pin_to_core(std::uint32_t index) {
#if defined(__linux__)
    const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
    cpu_set_t set;
    CPU_ZERO(&set);
    CPU_SET(index % cores, &set);
    pthread_setaffinity_np(pthread_self(), sizeof(set), &set);
#else
    (void)index;
#endif
}

}  // namespace

UpdateRunner::UpdateRunner(LmqSketch& sketch, std::vector<std::vector<Tuple>> substreams,
                           RunnerOptions options)
    : sketch_(sketch), subs_(std::move(substreams)), opt_(options) {
    logs_ = std::make_unique<ThreadLog[]>(subs_.size());
}

UpdateRunner::~UpdateRunner() {
    stop_and_join();
}

void UpdateRunner::set_trigger(std::uint64_t threshold, std::function<void()> on_fire) {
    trigger_threshold_ = threshold;
    trigger_fn_ = std::move(on_fire);
}

void UpdateRunner::start() {
    threads_.reserve(subs_.size());
    for (std::uint32_t t = 0; t < subs_.size(); ++t) {
        threads_.emplace_back([this, t] { worker(t); });
    }
    go_.store(true, std::memory_order_release);
}

void UpdateRunner::park_if_paused(std::uint32_t t) {
    if (!pause_.load(std::memory_order_acquire)) return;
    parked_.fetch_add(1, std::memory_order_acq_rel);
    while (pause_.load(std::memory_order_acquire) && !stop_.load(std::memory_order_acquire)) {
        std::this_thread::yield();
    }
    parked_.fetch_sub(1, std::memory_order_acq_rel);
    (void)t;
}

void UpdateRunner::worker(std::uint32_t t) {
    if (opt_.pin_threads && pinning_enabled_from_env()) pin_to_core(t);
    while (!go_.load(std::memory_order_acquire)) std::this_thread::yield();

    ThreadLog& log = logs_[t];
    const std::vector<Tuple>& sub = subs_[t];
    const std::uint64_t pq_every =
        opt_.pq_fraction > 0.0 ? static_cast<std::uint64_t>(1.0 / opt_.pq_fraction) : 0;

    std::uint64_t since_pq = 0;
    std::uint64_t last_owned_key = 0;
    bool have_owned_key = false;
    std::uint64_t tuples = 0;
    std::uint64_t weight = 0;
    std::uint64_t trigger_check = 0;

    const auto t0 = std::chrono::steady_clock::now();
    bool timed = false;

    std::size_t idx = 0;
    while (!stop_.load(std::memory_order_relaxed)) {
        park_if_paused(t);
        if (stop_.load(std::memory_order_relaxed)) break;
        if (idx >= sub.size()) {
            if (opt_.loop_stream && !sub.empty()) {
                idx = 0;
            } else {
                if (!timed) {
                    log.duration_ns.store(
                        std::chrono::duration_cast<std::chrono::nanoseconds>(
                            std::chrono::steady_clock::now() - t0)
                            .count(),
                        std::memory_order_relaxed);
                    log.consumed.store(true, std::memory_order_release);
                    timed = true;
                }
                sketch_.idle_tick(t);
                if (t == 0 && trigger_fn_ && !trigger_fired_ &&
                    sketch_.f1_query() >= trigger_threshold_) {
                    trigger_fired_ = true;
                    trigger_fn_();
                }
                std::this_thread::yield();
                continue;
            }
        }

        const Tuple tuple = sub[idx++];
        if (opt_.instrument_weights) {
            log.started.store(log.started.load(std::memory_order_relaxed) + tuple.value,
                              std::memory_order_relaxed);
        }
        sketch_.update(t, tuple.key, tuple.value);
        if (opt_.instrument_weights) {
            log.completed.store(log.completed.load(std::memory_order_relaxed) + tuple.value,
                                std::memory_order_release);
        }
        ++tuples;
        weight += tuple.value;
        log.tuples.store(tuples, std::memory_order_relaxed);
        log.weight.store(weight, std::memory_order_relaxed);

        if (pq_every) {
            if (sketch_.owner(tuple.key) == t) {
                last_owned_key = tuple.key;
                have_owned_key = true;
            }
            if (++since_pq >= pq_every) {
                since_pq = 0;
                if (have_owned_key) {
                    sketch_.point_query_owner(t, last_owned_key);
                    inline_pqs_.fetch_add(1, std::memory_order_relaxed);
                }
            }
        }

        if (t == 0 && trigger_fn_ && !trigger_fired_ && ++trigger_check >= 128) {
            trigger_check = 0;
            if (sketch_.f1_query() >= trigger_threshold_) {
                trigger_fired_ = true;
                trigger_fn_();
            }
        }
    }

    if (!timed) {
        log.duration_ns.store(std::chrono::duration_cast<std::chrono::nanoseconds>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count(),
                              std::memory_order_relaxed);
    }
}

void UpdateRunner::pause() {
    request_pause();
    wait_paused();
}

void UpdateRunner::request_pause() {
    pause_.store(true, std::memory_order_release);
}

void UpdateRunner::wait_paused() {
    const std::uint32_t live = static_cast<std::uint32_t>(threads_.size());
    while (parked_.load(std::memory_order_acquire) < live &&
           !stop_.load(std::memory_order_acquire)) {
        std::this_thread::yield();
    }
}

void UpdateRunner::resume() {
    pause_.store(false, std::memory_order_release);
    while (parked_.load(std::memory_order_acquire) != 0) std::this_thread::yield();
}

void UpdateRunner::stop_and_join() {
    stop_.store(true, std::memory_order_release);
    pause_.store(false, std::memory_order_release);
    go_.store(true, std::memory_order_release);
    for (auto& th : threads_) {
        if (th.joinable()) th.join();
    }
    threads_.clear();
}

bool UpdateRunner::all_streams_consumed() const {
    for (std::uint32_t t = 0; t < subs_.size(); ++t) {
        if (!logs_[t].consumed.load(std::memory_order_acquire)) return false;
    }
    return true;
}

void UpdateRunner::wait_streams_consumed() const {
    while (!all_streams_consumed()) std::this_thread::yield();
}

std::uint64_t UpdateRunner::started_weight() const {
    std::uint64_t s = 0;
    for (std::uint32_t t = 0; t < subs_.size(); ++t) {
        s += logs_[t].started.load(std::memory_order_acquire);
    }
    return s;
}

std::uint64_t UpdateRunner::completed_weight() const {
    std::uint64_t s = 0;
    for (std::uint32_t t = 0; t < subs_.size(); ++t) {
        s += logs_[t].completed.load(std::memory_order_acquire);
    }
    return s;
}

std::uint64_t UpdateRunner::processed_tuples(std::uint32_t t) const {
    return logs_[t].tuples.load(std::memory_order_relaxed);
}

std::uint64_t UpdateRunner::processed_weight(std::uint32_t t) const {
    return logs_[t].weight.load(std::memory_order_relaxed);
}

std::chrono::nanoseconds UpdateRunner::thread_duration(std::uint32_t t) const {
    return std::chrono::nanoseconds(logs_[t].duration_ns.load(std::memory_order_relaxed));
}

std::uint64_t UpdateRunner::inline_pq_count() const {
    return inline_pqs_.load(std::memory_order_relaxed);
}

}  // namespace lmq
