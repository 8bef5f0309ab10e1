#include "giorom/threading.hpp"

#include <atomic>
#include <condition_variable>
#include <mutex>
#include <thread>
#include <vector>

namespace giorom {
namespace {

class Pool {
public:
    explicit Pool(int n) : target_(n) {
        for (int i = 1; i < n; ++i) {
            workers_.emplace_back([this, i] { worker_loop(i); });
        }
    }

    ~Pool() {
        {
            std::unique_lock<std::mutex> lk(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : workers_) t.join();
    }

    int size() const { return target_; }

    void run(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
        const int nw = target_;
        const std::size_t chunk = (n + nw - 1) / nw;
        {
            std::unique_lock<std::mutex> lk(mu_);
            job_fn_ = &fn;
            job_n_ = n;
            job_chunk_ = chunk;
            pending_ = 0;
            for (int i = 1; i < nw; ++i) {
                if (static_cast<std::size_t>(i) * chunk < n) ++pending_;
            }
            ++generation_;
        }
        cv_.notify_all();
        // worker 0 is the calling thread
        fn(0, std::min(chunk, n));
        std::unique_lock<std::mutex> lk(mu_);
        done_cv_.wait(lk, [this] { return pending_ == 0; });
        job_fn_ = nullptr;
    }

private:
    void worker_loop(int index) {
        std::uint64_t seen = 0;
        for (;;) {
            const std::function<void(std::size_t, std::size_t)>* fn = nullptr;
            std::size_t lo = 0, hi = 0;
            {
                std::unique_lock<std::mutex> lk(mu_);
                cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
                if (stop_) return;
                seen = generation_;
                lo = static_cast<std::size_t>(index) * job_chunk_;
                if (lo >= job_n_) continue;  // no share of this job
                hi = std::min(lo + job_chunk_, job_n_);
                fn = job_fn_;
            }
            (*fn)(lo, hi);
            {
                std::unique_lock<std::mutex> lk(mu_);
                if (--pending_ == 0) done_cv_.notify_all();
            }
        }
    }

    std::mutex mu_;
    std::condition_variable cv_, done_cv_;
    std::vector<std::thread> workers_;
    const std::function<void(std::size_t, std::size_t)>* job_fn_ = nullptr;
    std::size_t job_n_ = 0, job_chunk_ = 0;
    int pending_ = 0;
    std::uint64_t generation_ = 0;
    bool stop_ = false;
    int target_ = 1;
};

std::mutex g_pool_mu;
Pool* g_pool = nullptr;
int g_requested = 0;

Pool& pool() {
    std::unique_lock<std::mutex> lk(g_pool_mu);
    if (!g_pool) {
        int n = g_requested;
        if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
        if (n <= 0) n = 1;
        g_pool = new Pool(n);
    }
    return *g_pool;
}

}  // namespace

void set_num_threads(int n) {
    std::unique_lock<std::mutex> lk(g_pool_mu);
    if (g_pool) {
        if (g_pool->size() == n) return;
        Pool* old = g_pool;
        g_pool = nullptr;
        lk.unlock();
        delete old;
        lk.lock();
    }
    g_requested = n;
}

int num_threads() { return pool().size(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn,
                  std::size_t min_per_thread) {
    if (n == 0) return;
    Pool& p = pool();
    if (p.size() <= 1 || n <= min_per_thread) {
        fn(0, n);
        return;
    }
    p.run(n, fn);
}

}  // namespace giorom
