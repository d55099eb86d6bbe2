#include "cocoweb/job_store.hpp"

#include <algorithm>
#include <cstdint>
#include <random>

namespace cocoweb {

std::string_view to_string(ProblemSource::Kind kind) {
  switch (kind) {
    case ProblemSource::Kind::Inline: return "INLINE";
    case ProblemSource::Kind::Upload: return "UPLOAD";
    case ProblemSource::Kind::Database: return "DATABASE";
  }
  return "INLINE";
}

std::string_view to_string(JobState state) {
  switch (state) {
    case JobState::Queued: return "QUEUED";
    case JobState::Running: return "RUNNING";
    case JobState::Done: return "DONE";
  }
  return "QUEUED";
}

std::string generate_job_id() {
  static constexpr char hex[] = "0123456789abcdef";
  std::random_device rd;
  std::string id;
  for (int i = 0; i < 4; ++i) {
    std::uint32_t word = rd();
    for (int j = 0; j < 8; ++j) {
      id += hex[word & 0xf];
      word >>= 4;
    }
  }
  return id;
}

InMemoryJobStore::InMemoryJobStore(std::size_t capacity, std::chrono::seconds retention,
                                   Clock now)
    : capacity_(capacity), retention_(retention), now_(std::move(now)) {}

void InMemoryJobStore::put(Job job) {
  std::lock_guard lock(mutex_);
  std::string id = job.id;
  jobs_.insert_or_assign(std::move(id), std::move(job));
  evict_locked();
}

std::optional<Job> InMemoryJobStore::get(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second;
}

bool InMemoryJobStore::update(const std::string& id,
                              const std::function<void(Job&)>& fn) {
  std::lock_guard lock(mutex_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) return false;
  fn(it->second);
  return true;
}

std::size_t InMemoryJobStore::size() const {
  std::lock_guard lock(mutex_);
  return jobs_.size();
}

void InMemoryJobStore::evict_locked() {
  const auto cutoff = now_() - retention_;
  std::erase_if(jobs_, [&](const auto& entry) {
    return entry.second.state == JobState::Done && entry.second.created_at < cutoff;
  });

  if (jobs_.size() <= capacity_) return;
  std::vector<std::map<std::string, Job>::iterator> done;
  for (auto it = jobs_.begin(); it != jobs_.end(); ++it) {
    if (it->second.state == JobState::Done) done.push_back(it);
  }
  std::sort(done.begin(), done.end(), [](const auto& a, const auto& b) {
    return a->second.created_at < b->second.created_at;
  });
  for (auto it : done) {
    if (jobs_.size() <= capacity_) break;
    jobs_.erase(it);
  }
}

}  // namespace cocoweb
