#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <latch>
#include <mutex>
#include <thread>
#include <vector>

#include "lawin/threading.hpp"

namespace lawin {

namespace {

int read_worker_count() {
    const char* env = std::getenv("LAWIN_THREADS");
    if (env == nullptr) return 1;
    const long v = std::strtol(env, nullptr, 10);
    if (v <= 0) return 1;
    return static_cast<int>(v);
}

// Lazily started pool of worker_count()-1 threads; the calling thread
// always takes the first chunk. Completion is tracked per call with a
// latch, so independent callers do not interfere.
class Pool {
public:
    explicit Pool(int extra_workers) {
        for (int i = 0; i < extra_workers; ++i)
            threads_.emplace_back([this] { run(); });
    }

    ~Pool() {
        {
            std::lock_guard<std::mutex> lk(m_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : threads_) t.join();
    }

    void submit(std::function<void()> task) {
        {
            std::lock_guard<std::mutex> lk(m_);
            tasks_.push_back(std::move(task));
        }
        cv_.notify_one();
    }

private:
    void run() {
        for (;;) {
            std::function<void()> task;
            {
                std::unique_lock<std::mutex> lk(m_);
                cv_.wait(lk, [this] { return stop_ || !tasks_.empty(); });
                if (stop_ && tasks_.empty()) return;
                task = std::move(tasks_.front());
                tasks_.pop_front();
            }
            task();
        }
    }

    std::mutex m_;
    std::condition_variable cv_;
    std::deque<std::function<void()>> tasks_;
    std::vector<std::thread> threads_;
    bool stop_ = false;
};

Pool* pool_instance(int workers) {
    static Pool pool(workers - 1);
    return &pool;
}

}  // namespace

int worker_count() {
    static const int n = read_worker_count();
    return n;
}

void parallel_for(index_t begin, index_t end, index_t grain,
                  const std::function<void(index_t, index_t)>& body) {
    const index_t n = end - begin;
    if (n <= 0) return;
    const int workers = worker_count();
    if (workers <= 1 || n < 2 * grain) {
        body(begin, end);
        return;
    }
    const index_t chunks = std::min<index_t>(workers, ceil_div(n, grain));
    const index_t step = ceil_div(n, chunks);
    Pool* pool = pool_instance(workers);
    std::latch done(chunks - 1);
    for (index_t c = 1; c < chunks; ++c) {
        const index_t lo = begin + c * step;
        const index_t hi = std::min(end, lo + step);
        pool->submit([&body, &done, lo, hi] {
            if (lo < hi) body(lo, hi);
            done.count_down();
        });
    }
    body(begin, std::min(end, begin + step));
    done.wait();
}

}  // namespace lawin
