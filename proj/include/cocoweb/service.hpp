#pragma once

#include "cocoweb/cops_client.hpp"
#include "cocoweb/engine.hpp"
#include "cocoweb/job_store.hpp"
#include "cocoweb/registry.hpp"
#include "cocoweb/work_queue.hpp"

#include <json.hpp>

#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace cocoweb {

struct ServiceConfig {
  std::filesystem::path config_root = "config";
  std::filesystem::path bin_root = "bin";
  std::filesystem::path scratch_dir;
  /// Web UI assets served at "/" when set.
  std::filesystem::path static_dir;
  std::string cops_base_url = "https://cops.uibk.ac.at";
  std::string cops_path_template = "/cops/{number}.trs";
  int max_soft_timeout = 59;
  /// Reloading is refused while this is empty.
  std::string reload_secret;
  std::string listen_addr = "127.0.0.1:8080";
  std::size_t upload_limit = 256 * 1024;
  std::size_t output_limit = 1 << 20;
  std::size_t job_capacity = 500;
  std::chrono::seconds job_retention = std::chrono::hours(24);

  /// Overrides defaults from CONFIG_ROOT, BIN_ROOT, SCRATCH_DIR, STATIC_DIR,
  /// COPS_BASE_URL, COPS_PATH_TEMPLATE, MAX_SOFT_TIMEOUT, RELOAD_SECRET and
  /// LISTEN_ADDR.
  static ServiceConfig from_environment();

  EngineOptions engine_options() const;
};

/// A failed request: HTTP status plus a JSON body with at least "error".
class ApiError : public std::runtime_error {
public:
  ApiError(int status, const std::string& message, nlohmann::json extra = {});
  int status() const { return status_; }
  nlohmann::json body() const;

private:
  int status_;
  nlohmann::json extra_;
};

struct SubmitRequest {
  ProblemSource source;
  std::string text;  // Inline and Upload
  std::vector<std::string> tool_ids;
  std::optional<TimeoutPolicy> policy;
};

struct ReloadSummary {
  std::size_t tools = 0;
  std::vector<std::string> warnings;
};

/// Registry, job store, Cops cache and the single execution worker, plus the
/// HTTP routes over them. All tool processes of all jobs run one at a time
/// in submission order.
class Service {
public:
  /// Scans the registry; throws RegistryError if the config root is missing.
  explicit Service(ServiceConfig config);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  std::shared_ptr<const RegistryTree> registry() const;
  const std::vector<std::string>& startup_warnings() const { return startup_warnings_; }

  /// Enqueues a job and returns the submit response document. Throws ApiError.
  nlohmann::json submit(const SubmitRequest& request);
  /// Reads the JSON submit document. Throws ApiError.
  static SubmitRequest parse_submit(const nlohmann::json& body);

  std::optional<Job> job(const std::string& id) const;

  /// Rescans and swaps the tree; the old tree stays on failure.
  ReloadSummary reload();

  CopsClient& cops() { return cops_; }
  JobStore& jobs() { return *jobs_; }

  /// Blocks until every queued job has finished.
  void wait_idle();

  void install_routes(httplib::Server& server);

  /// Binds (port 0 picks a free one) and serves on a background thread.
  /// Returns the bound port.
  int start(const std::string& host, int port);
  /// Serves on config().listen_addr in the calling thread.
  void serve_forever();
  void stop();

  const ServiceConfig& config() const { return config_; }

private:
  TimeoutPolicy effective_policy(const std::optional<TimeoutPolicy>& requested) const;
  void execute_job(const std::string& id, const std::vector<ToolSpec>& specs,
                   const Problem& problem, const TimeoutPolicy& policy);

  ServiceConfig config_;
  mutable std::mutex registry_mutex_;
  std::shared_ptr<const RegistryTree> registry_;
  std::vector<std::string> startup_warnings_;
  std::unique_ptr<JobStore> jobs_;
  CopsClient cops_;
  std::unique_ptr<httplib::Server> server_;
  std::thread server_thread_;
  // Last member: its destructor finishes outstanding jobs first.
  WorkQueue queue_;
};

}  // namespace cocoweb
