#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace aquadapt {

/// Runs fn(i) for i in [0, count) on at most `max_workers` threads. The first
/// exception thrown by any call is rethrown after all workers finish.
template <typename Fn>
void bounded_parallel_for(std::size_t count, std::size_t max_workers, Fn&& fn) {
    max_workers = std::clamp<std::size_t>(max_workers, 1, std::max<std::size_t>(count, 1));
    if (max_workers == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    workers.reserve(max_workers);
    for (std::size_t w = 0; w < max_workers; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) {
                        first_error = std::current_exception();
                    }
                }
            }
        });
    }
    for (auto& worker : workers) {
        worker.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

/// Spaces calls at least `min_interval` apart.
class RateLimiter {
public:
    explicit RateLimiter(std::chrono::milliseconds min_interval) : interval_(min_interval) {}

    void acquire() {
        if (interval_.count() <= 0) {
            return;
        }
        std::chrono::steady_clock::time_point slot;
        {
            std::lock_guard lock(mutex_);
            auto now = std::chrono::steady_clock::now();
            slot = std::max(now, next_slot_);
            next_slot_ = slot + interval_;
        }
        std::this_thread::sleep_until(slot);
    }

private:
    std::chrono::milliseconds interval_;
    std::chrono::steady_clock::time_point next_slot_{};
    std::mutex mutex_;
};

}  // namespace aquadapt
