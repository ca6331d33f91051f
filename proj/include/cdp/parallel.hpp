// Copyright 2026 The cdpbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <condition_variable>
#include <cstdlib>
#include <functional>
#include <mutex>
#include <thread>

namespace cdp {

// Two-lane work splitter. A range [0, n) is cut into two contiguous
// halves; the helper thread runs lane 0, the caller lane 1. Each index is
// processed by exactly one lane, and lanes never share mutable state, so
// callers that keep per-index outputs and reduce them in index order get
// results bitwise independent of whether the helper lane exists.
// CDPBENCH_THREADS=1 disables the helper.

class WorkerLane {
 public:
  using RangeFn = std::function<void(int lane, int begin, int end)>;

  static WorkerLane& instance() {
    static WorkerLane lane;
    return lane;
  }

  bool enabled() const { return enabled_; }

  void split(int n, const RangeFn& fn) {
    if (!enabled_ || n < 2) {
      fn(1, 0, n);
      return;
    }
    const int mid = n / 2;
    {
      std::unique_lock<std::mutex> lock(mu_);
      task_ = [&fn, mid] { fn(0, 0, mid); };
      has_task_ = true;
    }
    cv_.notify_one();
    fn(1, mid, n);
    std::unique_lock<std::mutex> lock(mu_);
    done_cv_.wait(lock, [this] { return !has_task_ && !running_; });
  }

  ~WorkerLane() {
    {
      std::unique_lock<std::mutex> lock(mu_);
      stop_ = true;
    }
    cv_.notify_one();
    if (worker_.joinable()) worker_.join();
  }

 private:
  WorkerLane() {
    const char* env = std::getenv("CDPBENCH_THREADS");
    const unsigned hw = std::thread::hardware_concurrency();
    enabled_ = (env ? std::atoi(env) : static_cast<int>(hw)) >= 2;
    if (enabled_) worker_ = std::thread([this] { loop(); });
  }

  void loop() {
    for (;;) {
      std::function<void()> task;
      {
        std::unique_lock<std::mutex> lock(mu_);
        cv_.wait(lock, [this] { return has_task_ || stop_; });
        if (stop_) return;
        task = std::move(task_);
        has_task_ = false;
        running_ = true;
      }
      task();
      {
        std::unique_lock<std::mutex> lock(mu_);
        running_ = false;
      }
      done_cv_.notify_one();
    }
  }

  std::thread worker_;
  std::mutex mu_;
  std::condition_variable cv_, done_cv_;
  std::function<void()> task_;
  bool has_task_ = false;
  bool running_ = false;
  bool stop_ = false;
  bool enabled_ = false;
};

}  // namespace cdp
