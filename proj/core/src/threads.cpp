#include "mv3d/threads.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace mv3d {
namespace {

int env_thread_count() {
  if (const char* env = std::getenv("MV3D_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

// One job at a time; workers grab contiguous chunks via an atomic cursor.
struct Job {
  const std::function<void(std::int64_t, std::int64_t)>* fn = nullptr;
  std::int64_t n = 0;
  std::int64_t chunk = 0;
  std::atomic<std::int64_t> next{0};
  std::atomic<int> pending{0};
};

class Pool {
 public:
  explicit Pool(int workers) {
    for (int i = 0; i < workers; ++i) {
      threads_.emplace_back([this] { worker_loop(); });
    }
  }

  ~Pool() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

  void run(Job& job) {
    std::lock_guard<std::mutex> serial(run_mu_);
    job.pending.store(static_cast<int>(threads_.size()));
    {
      std::lock_guard<std::mutex> lock(mu_);
      job_ = &job;
      ++generation_;
    }
    cv_.notify_all();
    drain(job);  // calling thread participates
    {
      std::unique_lock<std::mutex> lock(mu_);
      done_cv_.wait(lock, [&] { return job.pending.load() == 0; });
      job_ = nullptr;
    }
  }

 private:
  static void drain(Job& job) {
    for (;;) {
      std::int64_t begin = job.next.fetch_add(job.chunk);
      if (begin >= job.n) break;
      std::int64_t end = std::min(begin + job.chunk, job.n);
      (*job.fn)(begin, end);
    }
  }

  void worker_loop() {
    std::uint64_t seen = 0;
    for (;;) {
      Job* job = nullptr;
      {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
        if (stop_) return;
        seen = generation_;
        job = job_;
      }
      if (job) drain(*job);
      {
        std::lock_guard<std::mutex> lock(mu_);
        job->pending.fetch_sub(1);
      }
      done_cv_.notify_all();
    }
  }

  std::vector<std::thread> threads_;
  std::mutex run_mu_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable done_cv_;
  Job* job_ = nullptr;
  std::uint64_t generation_ = 0;
  bool stop_ = false;
};

std::mutex g_mu;
int g_thread_count = 0;
Pool* g_pool = nullptr;
thread_local bool t_in_pool = false;

}  // namespace

int thread_count() {
  std::lock_guard<std::mutex> lock(g_mu);
  if (g_thread_count == 0) g_thread_count = env_thread_count();
  return g_thread_count;
}

void set_thread_count(int n) {
  std::lock_guard<std::mutex> lock(g_mu);
  delete g_pool;
  g_pool = nullptr;
  g_thread_count = n > 0 ? n : 1;
}

void parallel_for(std::int64_t n,
                  const std::function<void(std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  int workers = thread_count();
  // Nested calls and tiny ranges run inline.
  if (workers <= 1 || n < 256 || t_in_pool) {
    fn(0, n);
    return;
  }
  Pool* pool;
  {
    std::lock_guard<std::mutex> lock(g_mu);
    if (!g_pool) g_pool = new Pool(g_thread_count - 1);
    pool = g_pool;
  }
  Job job;
  job.fn = &fn;
  job.n = n;
  job.chunk = std::max<std::int64_t>(64, n / (workers * 4));
  t_in_pool = true;
  pool->run(job);
  t_in_pool = false;
}

}  // namespace mv3d
