#include "steerlab/numerics/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

#include "steerlab/numerics/errors.hpp"

namespace steerlab {

namespace {
std::atomic<std::size_t> gThreads{1};
}

std::size_t threadCount() { return gThreads.load(); }

void setThreadCount(std::size_t n) {
    if (n == 0) throw ConfigError("thread count must be at least 1");
    gThreads.store(n);
}

void parallelFor(std::size_t n, const std::function<void(std::size_t)>& body) {
    const std::size_t workers = std::min(threadCount(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    auto run = [&](std::size_t w) {
        try {
            for (std::size_t i = n * w / workers; i < n * (w + 1) / workers; ++i) body(i);
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run, w);
    run(0);
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace steerlab
