#pragma once

#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace rhythmlab {

/// Fixed-size worker pool for index-parallel loops. Worker count is
/// min(hardware_concurrency, RHYTHMLAB_THREADS) when the env var is set.
/// parallel_for blocks until all indices complete; results must be written
/// to per-index slots so the outcome is independent of scheduling order.
class ThreadPool {
public:
    static ThreadPool& global();

    std::size_t size() const { return workers_.size() + 1; } // workers + caller

    void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

    ~ThreadPool();

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

private:
    explicit ThreadPool(std::size_t n_workers);

    struct Job {
        std::atomic<std::size_t> next{0};
        std::size_t total = 0;
        const std::function<void(std::size_t)>* fn = nullptr;
        std::atomic<std::size_t> done{0};
    };

    void worker_loop();
    static void run_share(Job& job);

    std::vector<std::thread> workers_;
    std::mutex mu_;
    std::condition_variable cv_start_;
    std::condition_variable cv_done_;
    Job* job_ = nullptr;
    std::uint64_t generation_ = 0;
    bool stop_ = false;
};

} // namespace rhythmlab
