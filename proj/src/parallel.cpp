#include "serfati/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace serfati {

namespace {

std::atomic<int> g_threads{0};

int default_threads() {
    if (const char* env = std::getenv("SERFATI_THREADS")) {
        try {
            int n = std::stoi(env);
            if (n > 0) return n;
        } catch (...) {
        }
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

}  // namespace

int thread_count() {
    int n = g_threads.load();
    if (n <= 0) {
        n = default_threads();
        g_threads.store(n);
    }
    return n;
}

void set_thread_count(int n) { g_threads.store(n > 0 ? n : default_threads()); }

void parallel_chunks(std::size_t n,
                     const std::function<void(std::size_t, std::size_t, int)>& f) {
    if (n == 0) return;
    int workers = static_cast<int>(std::min<std::size_t>(thread_count(), n));
    if (workers <= 1) {
        f(0, n, 0);
        return;
    }
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        std::size_t b = n * w / workers, e = n * (w + 1) / workers;
        pool.emplace_back([&, b, e, w] {
            try {
                f(b, e, w);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!err) err = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f) {
    if (n == 0) return;
    int workers = static_cast<int>(std::min<std::size_t>(thread_count(), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    // dynamic scheduling in small blocks; each index still runs exactly once
    std::atomic<std::size_t> next{0};
    const std::size_t block = std::max<std::size_t>(1, n / (static_cast<std::size_t>(workers) * 16));
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            try {
                for (;;) {
                    std::size_t b = next.fetch_add(block);
                    if (b >= n) break;
                    std::size_t e = std::min(n, b + block);
                    for (std::size_t i = b; i < e; ++i) f(i);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!err) err = std::current_exception();
                next.store(n);
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace serfati
