#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <exception>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>

namespace cocoweb {

class FetchError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CopsCacheEntry {
  int number = 0;
  std::string text;
  std::chrono::system_clock::time_point fetched_at;
};

/// Fetches problems from the Cops database by number and caches them for the
/// lifetime of the client. Concurrent requests for the same number share a
/// single upstream request. Failures are never cached.
class CopsClient {
public:
  /// `path_template` contains "{number}", e.g. "/cops/{number}.trs".
  CopsClient(std::string base_url, std::string path_template,
             std::chrono::seconds timeout = std::chrono::seconds(10));

  /// Throws FetchError on transport failure, non-200 status, or empty body,
  /// and std::invalid_argument for numbers below 1.
  std::string fetch(int number);

  std::optional<CopsCacheEntry> cached(int number) const;
  std::size_t upstream_requests() const;

  std::string url_for(int number) const;

private:
  struct Flight {
    bool done = false;
    std::string text;
    std::exception_ptr error;
  };

  std::string path_for(int number) const;
  std::string fetch_upstream(int number);

  std::string base_url_;
  std::string path_template_;
  std::chrono::seconds timeout_;

  mutable std::mutex mutex_;
  std::condition_variable landed_;
  std::map<int, CopsCacheEntry> cache_;
  std::map<int, std::shared_ptr<Flight>> in_flight_;
  std::size_t upstream_requests_ = 0;
};

}  // namespace cocoweb
