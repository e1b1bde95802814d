#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace gx {

// Work is always split into a fixed number of chunks regardless of how many
// threads execute them, so per-chunk partial results folded in chunk order
// give bit-identical reductions for any pool size.
class ThreadPool {
 public:
  explicit ThreadPool(int threads = 1) {
    if (threads < 1) threads = 1;
    for (int i = 0; i + 1 < threads; ++i) workers_.emplace_back([this] { worker_loop(); });
  }

  ~ThreadPool() {
    {
      std::unique_lock lk(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& w : workers_) w.join();
  }

  int size() const { return static_cast<int>(workers_.size()) + 1; }

  // Runs fn(chunk_index, begin, end) over [0,n) split into `chunks`
  // contiguous ranges. Blocks until all chunks finish.
  void for_chunks(std::int64_t n, int chunks, const std::function<void(int, std::int64_t, std::int64_t)>& fn) {
    if (n <= 0) return;
    if (chunks > n) chunks = static_cast<int>(n);
    if (chunks < 1) chunks = 1;
    if (workers_.empty()) {
      for (int c = 0; c < chunks; ++c) fn(c, c * n / chunks, (c + 1) * n / chunks);
      return;
    }
    {
      std::unique_lock lk(mu_);
      job_ = &fn;
      job_n_ = n;
      job_chunks_ = chunks;
      next_chunk_ = 0;
      pending_ = chunks;
    }
    cv_.notify_all();
    run_chunks();
    std::unique_lock lk(mu_);
    done_cv_.wait(lk, [this] { return pending_ == 0; });
    job_ = nullptr;
  }

 private:
  void run_chunks() {
    for (;;) {
      int c;
      {
        std::unique_lock lk(mu_);
        if (job_ == nullptr || next_chunk_ >= job_chunks_) return;
        c = next_chunk_++;
      }
      (*job_)(c, c * job_n_ / job_chunks_, (c + 1) * job_n_ / job_chunks_);
      std::unique_lock lk(mu_);
      if (--pending_ == 0) done_cv_.notify_all();
    }
  }

  void worker_loop() {
    for (;;) {
      {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [this] { return stop_ || (job_ != nullptr && next_chunk_ < job_chunks_); });
        if (stop_) return;
      }
      run_chunks();
    }
  }

  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_, done_cv_;
  const std::function<void(int, std::int64_t, std::int64_t)>* job_ = nullptr;
  std::int64_t job_n_ = 0;
  int job_chunks_ = 0;
  int next_chunk_ = 0;
  int pending_ = 0;
  bool stop_ = false;
};

}  // namespace gx
