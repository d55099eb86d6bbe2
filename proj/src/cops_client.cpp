#include "cocoweb/cops_client.hpp"

#include <httplib.h>

namespace cocoweb {

CopsClient::CopsClient(std::string base_url, std::string path_template,
                       std::chrono::seconds timeout)
    : base_url_(std::move(base_url)),
      path_template_(std::move(path_template)),
      timeout_(timeout) {
  while (base_url_.ends_with('/')) base_url_.pop_back();
}

std::string CopsClient::url_for(int number) const { return base_url_ + path_for(number); }

std::string CopsClient::path_for(int number) const {
  std::string path = path_template_;
  const std::string key = "{number}";
  for (auto pos = path.find(key); pos != std::string::npos; pos = path.find(key, pos)) {
    path.replace(pos, key.size(), std::to_string(number));
  }
  return path;
}

std::optional<CopsCacheEntry> CopsClient::cached(int number) const {
  std::lock_guard lock(mutex_);
  auto it = cache_.find(number);
  if (it == cache_.end()) return std::nullopt;
  return it->second;
}

std::size_t CopsClient::upstream_requests() const {
  std::lock_guard lock(mutex_);
  return upstream_requests_;
}

std::string CopsClient::fetch(int number) {
  if (number < 1) throw std::invalid_argument("Cops problem numbers start at 1");

  std::shared_ptr<Flight> flight;
  {
    std::unique_lock lock(mutex_);
    if (auto it = cache_.find(number); it != cache_.end()) return it->second.text;
    if (auto it = in_flight_.find(number); it != in_flight_.end()) {
      flight = it->second;
      landed_.wait(lock, [&] { return flight->done; });
      if (flight->error) std::rethrow_exception(flight->error);
      return flight->text;
    }
    flight = std::make_shared<Flight>();
    in_flight_[number] = flight;
    ++upstream_requests_;
  }

  std::string text;
  std::exception_ptr error;
  try {
    text = fetch_upstream(number);
  } catch (...) {
    error = std::current_exception();
  }

  {
    std::lock_guard lock(mutex_);
    if (!error) {
      cache_[number] = CopsCacheEntry{number, text, std::chrono::system_clock::now()};
    }
    flight->done = true;
    flight->text = text;
    flight->error = error;
    in_flight_.erase(number);
  }
  landed_.notify_all();
  if (error) std::rethrow_exception(error);
  return text;
}

std::string CopsClient::fetch_upstream(int number) {
  const std::string path = path_for(number);
  httplib::Client client(base_url_);
  if (!client.is_valid()) throw FetchError("invalid Cops base URL: " + base_url_);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  client.set_follow_location(true);

  auto res = client.Get(path);
  if (!res) {
    throw FetchError("fetching Cops #" + std::to_string(number) + " from " + base_url_ +
                     path + " failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw FetchError("fetching Cops #" + std::to_string(number) + " from " + base_url_ +
                     path + " returned HTTP " + std::to_string(res->status));
  }
  if (res->body.empty()) {
    throw FetchError("Cops #" + std::to_string(number) + " came back empty");
  }
  return res->body;
}

}  // namespace cocoweb
