#pragma once

#include "cocoweb/compatibility.hpp"
#include "cocoweb/engine.hpp"
#include "cocoweb/problem.hpp"

#include <chrono>
#include <cstddef>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace cocoweb {

struct ProblemSource {
  enum class Kind { Inline, Upload, Database };

  Kind kind = Kind::Inline;
  std::string filename;  // Upload only
  int number = 0;        // Database only
};

std::string_view to_string(ProblemSource::Kind kind);

enum class JobState { Queued, Running, Done };

std::string_view to_string(JobState state);

struct Job {
  std::string id;
  ProblemSource source;
  /// Parsed when possible; raw_source is always the submitted text.
  Problem problem;
  FormatCategory category = FormatCategory::Unknown;
  std::optional<std::string> parse_error;
  std::vector<SelectionWarning> warnings;
  std::vector<std::string> selected_tools;
  TimeoutPolicy policy;
  JobState state = JobState::Queued;
  std::vector<RunResult> results;
  std::chrono::system_clock::time_point created_at;

  /// Index of the running tool; meaningful while state == Running.
  std::size_t current_tool() const { return results.size(); }
};

/// 128 random bits, hex encoded.
std::string generate_job_id();

/// Whole-Job granularity: readers get a consistent copy, writers mutate under
/// the store's lock.
class JobStore {
public:
  virtual ~JobStore() = default;

  virtual void put(Job job) = 0;
  virtual std::optional<Job> get(const std::string& id) const = 0;
  /// False if the job is gone (unknown or evicted).
  virtual bool update(const std::string& id, const std::function<void(Job&)>& fn) = 0;
  virtual std::size_t size() const = 0;
};

class InMemoryJobStore : public JobStore {
public:
  using Clock = std::function<std::chrono::system_clock::time_point()>;

  explicit InMemoryJobStore(std::size_t capacity = 500,
                            std::chrono::seconds retention = std::chrono::hours(24),
                            Clock now = [] { return std::chrono::system_clock::now(); });

  void put(Job job) override;
  std::optional<Job> get(const std::string& id) const override;
  bool update(const std::string& id, const std::function<void(Job&)>& fn) override;
  std::size_t size() const override;

private:
  // Only finished jobs are evicted; queued and running ones stay until done.
  void evict_locked();

  std::size_t capacity_;
  std::chrono::seconds retention_;
  Clock now_;
  mutable std::mutex mutex_;
  std::map<std::string, Job> jobs_;
};

}  // namespace cocoweb
