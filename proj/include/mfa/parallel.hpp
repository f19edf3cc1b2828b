#pragma once

#include <cstddef>
#include <functional>

namespace mfa {

/// Upper bound on worker threads used inside library calls. 0 restores the
/// default (hardware concurrency).
void set_max_threads(std::size_t n);
std::size_t max_threads();

/// Runs body(i) for i in [0, n). Work is split into contiguous chunks, one per
/// thread; body must only write state owned by index i.
/// Nested calls (from inside a worker) run inline on the calling thread.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Marks the current thread as a worker for its lifetime, so library calls
/// made from it do not spawn further threads.
class WorkerScope {
public:
    WorkerScope();
    ~WorkerScope();
    WorkerScope(const WorkerScope&) = delete;
    WorkerScope& operator=(const WorkerScope&) = delete;

private:
    bool previous_;
};

}  // namespace mfa
