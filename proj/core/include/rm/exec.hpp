#pragma once

#include <condition_variable>
#include <functional>
#include <mutex>
#include <queue>
#include <thread>
#include <vector>

namespace rm::exec {

/// Minimal fixed-size worker pool. Modules receive a pointer to one of these
/// and never spawn threads of their own; a null pool means run inline.
class ThreadPool {
  public:
    explicit ThreadPool(int threads) {
        for (int i = 0; i < std::max(1, threads); ++i)
            workers_.emplace_back([this] { work(); });
    }

    ~ThreadPool() {
        {
            std::unique_lock lock(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& w : workers_) w.join();
    }

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    int size() const { return static_cast<int>(workers_.size()); }

    /// Runs fn(0..n-1), blocking until all complete. Results must be written
    /// to caller-owned slots indexed by i so reduction order stays
    /// deterministic.
    void parallel_for(int n, const std::function<void(int)>& fn) {
        if (n <= 0) return;
        std::mutex done_mu;
        std::condition_variable done_cv;
        int remaining = n;
        {
            std::unique_lock lock(mu_);
            for (int i = 0; i < n; ++i) {
                tasks_.push([&, i] {
                    fn(i);
                    std::unique_lock dl(done_mu);
                    if (--remaining == 0) done_cv.notify_one();
                });
            }
        }
        cv_.notify_all();
        std::unique_lock dl(done_mu);
        done_cv.wait(dl, [&] { return remaining == 0; });
    }

  private:
    void work() {
        while (true) {
            std::function<void()> task;
            {
                std::unique_lock lock(mu_);
                cv_.wait(lock, [this] { return stop_ || !tasks_.empty(); });
                if (stop_ && tasks_.empty()) return;
                task = std::move(tasks_.front());
                tasks_.pop();
            }
            task();
        }
    }

    std::vector<std::thread> workers_;
    std::queue<std::function<void()>> tasks_;
    std::mutex mu_;
    std::condition_variable cv_;
    bool stop_ = false;
};

/// Inline fallback used when no pool is supplied.
inline void parallel_for(ThreadPool* pool, int n, const std::function<void(int)>& fn) {
    if (pool) {
        pool->parallel_for(n, fn);
    } else {
        for (int i = 0; i < n; ++i) fn(i);
    }
}

} // namespace rm::exec
