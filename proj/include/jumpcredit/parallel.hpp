#ifndef JUMPCREDIT_PARALLEL_HPP
#define JUMPCREDIT_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace jumpcredit::detail {

    //! Runs body(i) for i in [0, n) on up to hardware_concurrency threads.
    //! Each index is written by exactly one task, so results do not depend on the thread count.
    template <class Body>
    void parallel_for(std::size_t n, Body&& body, unsigned max_threads = 0) {
        unsigned hw = std::max(1u, std::thread::hardware_concurrency());
        if (max_threads) hw = std::min(hw, max_threads);
        const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(hw, n));
        if (workers <= 1) {
            for (std::size_t i = 0; i < n; ++i) body(i);
            return;
        }
        std::atomic<std::size_t> next{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        const auto work = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = n;
                    return;
                }
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(workers - 1);
        for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
        work();
        for (auto& t : pool) t.join();
        if (error) std::rethrow_exception(error);
    }

}

#endif
