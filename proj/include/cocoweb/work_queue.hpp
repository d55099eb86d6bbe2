#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>
#include <thread>

namespace cocoweb {

/// A single worker thread draining a FIFO of jobs. Jobs run one at a time in
/// submission order; the destructor finishes the queue before joining.
class WorkQueue {
public:
  using Job = std::function<void()>;

  WorkQueue();
  ~WorkQueue();
  WorkQueue(const WorkQueue&) = delete;
  WorkQueue& operator=(const WorkQueue&) = delete;

  void submit(Job job);

  /// Blocks until every job submitted so far has finished.
  void drain();

  std::size_t pending() const;

private:
  void loop();

  mutable std::mutex mutex_;
  std::condition_variable wake_;
  std::condition_variable idle_;
  std::deque<Job> jobs_;
  bool busy_ = false;
  bool stopping_ = false;
  std::thread worker_;
};

}  // namespace cocoweb
