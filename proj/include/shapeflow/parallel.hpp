#pragma once

#include <algorithm>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace shapeflow {

// Worker count: OMNI_THREADS caps it; unset means single-threaded.
inline int max_threads() {
  static int cached = [] {
    const char* env = std::getenv("OMNI_THREADS");
    if (!env) return 1;
    int v = std::atoi(env);
    if (v < 1) return 1;
    return std::min(v, 64);
  }();
  return cached;
}

namespace detail {

// set while a thread executes inside a parallel region; nested parallel_for
// calls then run serially instead of re-entering the pool
inline thread_local bool tl_in_parallel_region = false;

class ThreadPool {
 public:
  explicit ThreadPool(int workers) {
    for (int i = 0; i < workers; ++i)
      threads_.emplace_back([this] { worker_loop(); });
  }

  ~ThreadPool() {
    {
      std::unique_lock lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  // Runs fn(lo, hi) over a partition of [0, n); blocks until all chunks done.
  void run(int64_t n, int chunks, const std::function<void(int64_t, int64_t)>& fn) {
    std::unique_lock lk(mu_);
    job_ = &fn;
    job_n_ = n;
    job_chunks_ = chunks;
    next_chunk_ = 0;
    done_chunks_ = 0;
    ++generation_;
    cv_.notify_all();
    // participate from the calling thread
    lk.unlock();
    work_on_job();
    lk.lock();
    done_cv_.wait(lk, [this] { return done_chunks_ == job_chunks_; });
    job_ = nullptr;
  }

 private:
  void worker_loop() {
    uint64_t seen = 0;
    for (;;) {
      std::unique_lock lk(mu_);
      cv_.wait(lk, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      lk.unlock();
      work_on_job();
    }
  }

  void work_on_job() {
    tl_in_parallel_region = true;
    for (;;) {
      int chunk = next_chunk_.fetch_add(1);
      if (chunk >= job_chunks_) break;
      int64_t lo = job_n_ * chunk / job_chunks_;
      int64_t hi = job_n_ * (chunk + 1) / job_chunks_;
      if (lo < hi) (*job_)(lo, hi);
      std::unique_lock lk(mu_);
      if (++done_chunks_ == job_chunks_) done_cv_.notify_all();
    }
    tl_in_parallel_region = false;
  }

  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_, done_cv_;
  bool stop_ = false;
  uint64_t generation_ = 0;
  const std::function<void(int64_t, int64_t)>* job_ = nullptr;
  int64_t job_n_ = 0;
  int job_chunks_ = 0;
  std::atomic<int> next_chunk_{0};
  int done_chunks_ = 0;
};

}  // namespace detail

// Partitioned parallel loop. Each index lands in exactly one chunk and each
// chunk runs sequentially, so per-element results are identical for any
// worker count; only eligible when iterations are independent.
inline void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn) {
  int workers = max_threads();
  if (n <= 0) return;
  if (workers <= 1 || n == 1 || detail::tl_in_parallel_region) {
    fn(0, n);
    return;
  }
  static detail::ThreadPool pool(max_threads() - 1);
  int chunks = std::min<int64_t>(n, workers);
  pool.run(n, chunks, fn);
}

}  // namespace shapeflow
