// Copyright 2026 The parrep authors
// SPDX-License-Identifier: Apache-2.0

#include "parrep/parallel.hpp"

#include <algorithm>

namespace parrep {

std::size_t resolve_workers(std::size_t requested) noexcept {
  if (requested > 0) return requested;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

WorkerPool::WorkerPool(std::size_t workers) {
  const std::size_t n = std::max<std::size_t>(workers, 1);
  threads_.reserve(n - 1);
  for (std::size_t slot = 1; slot < n; ++slot) threads_.emplace_back([this, slot] { worker_loop(slot); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  start_cv_.notify_all();
  for (auto& t : threads_) t.join();
}

void WorkerPool::run_slice(std::size_t slot) {
  // Static interleaved partition: slot s handles s, s + W, s + 2W, ...
  const std::size_t stride = workers();
  try {
    for (std::size_t i = slot; i < count_; i += stride) (*body_)(i);
  } catch (...) {
    std::lock_guard lock(mutex_);
    if (!error_) error_ = std::current_exception();
  }
}

void WorkerPool::worker_loop(std::size_t slot) {
  std::size_t seen = 0;
  for (;;) {
    {
      std::unique_lock lock(mutex_);
      start_cv_.wait(lock, [&] { return stopping_ || generation_ != seen; });
      if (stopping_) return;
      seen = generation_;
    }
    run_slice(slot);
    {
      std::lock_guard lock(mutex_);
      if (--pending_ == 0) done_cv_.notify_one();
    }
  }
}

void WorkerPool::for_each(std::size_t count, const std::function<void(std::size_t)>& body) {
  if (threads_.empty() || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  {
    std::lock_guard lock(mutex_);
    body_ = &body;
    count_ = count;
    pending_ = threads_.size();
    error_ = nullptr;
    ++generation_;
  }
  start_cv_.notify_all();
  run_slice(0);
  std::unique_lock lock(mutex_);
  done_cv_.wait(lock, [&] { return pending_ == 0; });
  body_ = nullptr;
  if (error_) std::rethrow_exception(error_);
}

}  // namespace parrep
