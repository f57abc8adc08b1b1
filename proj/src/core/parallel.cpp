// SPDX-License-Identifier: Apache-2.0
#include "core/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace kenforge {

static unsigned read_thread_cap() {
    const char* env = std::getenv("KENFORGE_THREADS");
    if (env != nullptr && *env != '\0') {
        char* end = nullptr;
        unsigned long v = std::strtoul(env, &end, 10);
        if (end != nullptr && *end == '\0' && v > 0) {
            return static_cast<unsigned>(std::min<unsigned long>(v, 1024));
        }
        // 0 or unparsable falls through to auto
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

unsigned max_threads() {
    static unsigned cap = read_thread_cap();
    return cap;
}

void parallel_for(std::uint64_t count,
                  const std::function<void(std::uint64_t, std::uint64_t)>& body) {
    if (count == 0) {
        return;
    }
    std::uint64_t workers = std::min<std::uint64_t>(max_threads(), count);
    if (workers <= 1) {
        body(0, count);
        return;
    }

    const std::uint64_t chunk = (count + workers - 1) / workers;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::uint64_t w = 0; w < workers; ++w) {
        const std::uint64_t begin = w * chunk;
        const std::uint64_t end = std::min(begin + chunk, count);
        if (begin >= end) {
            break;
        }
        threads.emplace_back([&, begin, end] {
            try {
                body(begin, end);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) {
                    first_error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
}

}  // namespace kenforge
