#include "mfa/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mfa {

namespace {
std::atomic<std::size_t> g_max_threads{0};
thread_local bool t_worker = false;
}  // namespace

WorkerScope::WorkerScope() : previous_(t_worker) { t_worker = true; }
WorkerScope::~WorkerScope() { t_worker = previous_; }

void set_max_threads(std::size_t n) { g_max_threads.store(n); }

std::size_t max_threads() {
    std::size_t n = g_max_threads.load();
    if (n == 0) n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    return n;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    std::size_t workers = t_worker ? 1 : std::min(max_threads(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }

    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        std::size_t begin = w * chunk;
        std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        pool.emplace_back([&, begin, end] {
            WorkerScope scope;
            try {
                for (std::size_t i = begin; i < end; ++i) body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mfa
