#include "rhythmlab/thread_pool.hpp"

#include <cstdlib>
#include <string>

namespace rhythmlab {

namespace {

std::size_t configured_workers() {
    std::size_t n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("RHYTHMLAB_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) n = static_cast<std::size_t>(v);
    }
    return n;
}

thread_local bool inside_pool = false;

} // namespace

ThreadPool& ThreadPool::global() {
    static ThreadPool pool(configured_workers() - 1);
    return pool;
}

ThreadPool::ThreadPool(std::size_t n_workers) {
    workers_.reserve(n_workers);
    for (std::size_t i = 0; i < n_workers; ++i) {
        workers_.emplace_back([this] { worker_loop(); });
    }
}

ThreadPool::~ThreadPool() {
    {
        std::lock_guard<std::mutex> lk(mu_);
        stop_ = true;
    }
    cv_start_.notify_all();
    for (auto& w : workers_) w.join();
}

void ThreadPool::run_share(Job& job) {
    for (;;) {
        const std::size_t i = job.next.fetch_add(1, std::memory_order_relaxed);
        if (i >= job.total) break;
        (*job.fn)(i);
        job.done.fetch_add(1, std::memory_order_release);
    }
}

void ThreadPool::worker_loop() {
    inside_pool = true;
    std::uint64_t seen = 0;
    for (;;) {
        Job* job = nullptr;
        {
            std::unique_lock<std::mutex> lk(mu_);
            cv_start_.wait(lk, [&] { return stop_ || generation_ != seen; });
            if (stop_) return;
            seen = generation_;
            job = job_;
        }
        if (job) {
            run_share(*job);
            cv_done_.notify_one();
        }
    }
}

void ThreadPool::parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    // Nested or single-threaded use degrades to an inline loop.
    if (workers_.empty() || inside_pool || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    Job job;
    job.total = n;
    job.fn = &fn;
    {
        std::lock_guard<std::mutex> lk(mu_);
        job_ = &job;
        ++generation_;
    }
    cv_start_.notify_all();
    run_share(job);
    {
        std::unique_lock<std::mutex> lk(mu_);
        cv_done_.wait(lk, [&] { return job.done.load(std::memory_order_acquire) >= n; });
        job_ = nullptr;
    }
}

} // namespace rhythmlab
