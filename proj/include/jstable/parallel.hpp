#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace jstable {

// Runs fn(i) for i in [0,n) on up to `workers` threads. Each index writes only
// its own slot, so results never depend on scheduling. The first exception (by
// index) is rethrown after all tasks finish.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    auto body = [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    std::size_t w = std::min<std::size_t>(std::max(workers, 1), n);
    if (w <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(w);
        for (std::size_t t = 0; t < w; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) body(i);
            });
        for (auto& th : pool) th.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// like parallel_for but keeps per-index exceptions instead of rethrowing
template <class Fn>
std::vector<std::exception_ptr> parallel_for_collect(std::size_t n, int workers, Fn&& fn) {
    std::vector<std::exception_ptr> errors(n);
    parallel_for(n, workers, [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    });
    return errors;
}

}  // namespace jstable
