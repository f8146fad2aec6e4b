#include "qstoch/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace qstoch {

int thread_budget() {
    unsigned hw = std::thread::hardware_concurrency();
    int budget = hw > 0 ? static_cast<int>(hw) : 1;
    if (const char* cap = std::getenv("QSTOCH_THREADS")) {
        char* end = nullptr;
        long v = std::strtol(cap, &end, 10);
        if (end != cap && *end == '\0') {
            if (v < 1) v = 1;
            if (v < budget) budget = static_cast<int>(v);
        }
    }
    return budget;
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    std::size_t workers = static_cast<std::size_t>(thread_budget());
    if (workers > count) workers = count;
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto drain = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(drain);
    drain();
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace qstoch
