// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace parrep {

/// Fixed set of threads running index-parallel loops. The calling thread
/// takes part, so a pool of one worker runs everything inline.
class WorkerPool {
 public:
  explicit WorkerPool(std::size_t workers);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t workers() const noexcept { return threads_.size() + 1; }

  /// Calls body(i) for every i in [0, count); rethrows the first exception.
  void for_each(std::size_t count, const std::function<void(std::size_t)>& body);

 private:
  void worker_loop(std::size_t slot);
  void run_slice(std::size_t slot);

  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  const std::function<void(std::size_t)>* body_ = nullptr;
  std::size_t count_ = 0;
  std::size_t generation_ = 0;
  std::size_t pending_ = 0;
  bool stopping_ = false;
  std::exception_ptr error_;
};

/// 0 means one worker per hardware thread.
std::size_t resolve_workers(std::size_t requested) noexcept;

}  // namespace parrep
