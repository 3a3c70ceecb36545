#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace rankpower::detail {

// Runs fn(chunk_index) for every chunk in [0, n_chunks) on up to `threads`
// workers. Chunk indices are handed out atomically; callers that need
// deterministic results must write into per-chunk slots and reduce in
// chunk order afterwards.
inline void parallel_chunks(std::uint64_t n_chunks, int threads,
                            const std::function<void(std::uint64_t)>& fn) {
    if (threads < 1) threads = 1;
    if (threads == 1 || n_chunks <= 1) {
        for (std::uint64_t c = 0; c < n_chunks; ++c) fn(c);
        return;
    }
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        while (true) {
            std::uint64_t c = next.fetch_add(1);
            if (c >= n_chunks) return;
            try {
                fn(c);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    int workers = static_cast<int>(std::min<std::uint64_t>(threads, n_chunks));
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

} // namespace rankpower::detail
