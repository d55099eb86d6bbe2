#include "cocoweb/service.hpp"

#include "cocoweb/compatibility.hpp"
#include "cocoweb/json_io.hpp"

#include <httplib.h>

#include <cstdlib>

namespace fs = std::filesystem;
using nlohmann::json;

namespace cocoweb {

namespace {

std::optional<std::string> env(const char* name) {
  const char* value = std::getenv(name);
  if (value == nullptr || *value == '\0') return std::nullopt;
  return std::string(value);
}

std::pair<std::string, int> split_listen_addr(const std::string& addr) {
  auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw std::invalid_argument("LISTEN_ADDR must be host:port");
  std::string host = addr.substr(0, colon);
  int port = std::stoi(addr.substr(colon + 1));
  return {host.empty() ? "0.0.0.0" : host, port};
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

bool constant_time_equal(const std::string& a, const std::string& b) {
  if (a.size() != b.size()) return false;
  unsigned char diff = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff |= static_cast<unsigned char>(a[i] ^ b[i]);
  }
  return diff == 0;
}

std::optional<int> form_int(const httplib::Request& req, const std::string& key) {
  if (!req.has_file(key)) return std::nullopt;
  const std::string value = req.get_file_value(key).content;
  if (value.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    int n = std::stoi(value, &used);
    if (used != value.size()) throw std::invalid_argument(key);
    return n;
  } catch (const std::exception&) {
    throw ApiError(400, "form field '" + key + "' must be an integer");
  }
}

std::optional<TimeoutPolicy> policy_from(std::optional<int> soft, std::optional<int> term,
                                         std::optional<int> kill) {
  if (!soft && !term && !kill) return std::nullopt;
  if (!soft) throw ApiError(400, "timeout_policy needs soft_s");
  TimeoutPolicy p = TimeoutPolicy::from_soft(*soft);
  if (term) p.term_s = *term;
  p.kill_s = kill ? *kill : p.term_s + 2;
  return p;
}

SubmitRequest parse_multipart(const httplib::Request& req) {
  SubmitRequest out;
  for (const auto& field : req.get_file_values("tool_ids")) {
    std::string_view rest = field.content;
    while (!rest.empty()) {
      auto comma = rest.find(',');
      std::string id(rest.substr(0, comma));
      if (!id.empty()) out.tool_ids.push_back(std::move(id));
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
  }

  if (req.has_file("file") && !req.get_file_value("file").filename.empty()) {
    const auto file = req.get_file_value("file");
    out.source.kind = ProblemSource::Kind::Upload;
    out.source.filename = file.filename;
    out.text = file.content;
  } else if (auto number = form_int(req, "number")) {
    out.source.kind = ProblemSource::Kind::Database;
    out.source.number = *number;
  } else {
    out.source.kind = ProblemSource::Kind::Inline;
    out.text = req.has_file("text") ? req.get_file_value("text").content : std::string{};
  }
  out.policy = policy_from(form_int(req, "soft_s"), form_int(req, "term_s"),
                           form_int(req, "kill_s"));
  return out;
}

}  // namespace

ServiceConfig ServiceConfig::from_environment() {
  ServiceConfig c;
  if (auto v = env("CONFIG_ROOT")) c.config_root = *v;
  if (auto v = env("BIN_ROOT")) c.bin_root = *v;
  if (auto v = env("SCRATCH_DIR")) c.scratch_dir = *v;
  if (auto v = env("STATIC_DIR")) c.static_dir = *v;
  if (auto v = env("COPS_BASE_URL")) c.cops_base_url = *v;
  if (auto v = env("COPS_PATH_TEMPLATE")) c.cops_path_template = *v;
  if (auto v = env("MAX_SOFT_TIMEOUT")) c.max_soft_timeout = std::stoi(*v);
  if (auto v = env("RELOAD_SECRET")) c.reload_secret = *v;
  if (auto v = env("LISTEN_ADDR")) c.listen_addr = *v;
  return c;
}

EngineOptions ServiceConfig::engine_options() const {
  EngineOptions o;
  o.bin_root = bin_root;
  o.scratch_dir = scratch_dir;
  o.output_limit = output_limit;
  return o;
}

ApiError::ApiError(int status, const std::string& message, json extra)
    : std::runtime_error(message), status_(status), extra_(std::move(extra)) {}

json ApiError::body() const {
  json b = extra_.is_object() ? extra_ : json::object();
  b["error"] = what();
  return b;
}

Service::Service(ServiceConfig config)
    : config_(std::move(config)),
      jobs_(std::make_unique<InMemoryJobStore>(config_.job_capacity, config_.job_retention)),
      cops_(config_.cops_base_url, config_.cops_path_template) {
  ScanResult scan = scan_registry(config_.config_root);
  registry_ = std::make_shared<const RegistryTree>(std::move(scan.tree));
  startup_warnings_ = std::move(scan.warnings);
}

Service::~Service() { stop(); }

std::shared_ptr<const RegistryTree> Service::registry() const {
  std::lock_guard lock(registry_mutex_);
  return registry_;
}

ReloadSummary Service::reload() {
  ScanResult scan = scan_registry(config_.config_root);
  ReloadSummary summary{scan.tree.tool_count(), std::move(scan.warnings)};
  auto tree = std::make_shared<const RegistryTree>(std::move(scan.tree));
  std::lock_guard lock(registry_mutex_);
  registry_ = std::move(tree);
  return summary;
}

SubmitRequest Service::parse_submit(const json& body) {
  if (!body.is_object()) throw ApiError(400, "request body must be a JSON object");
  SubmitRequest out;
  try {
    if (body.contains("tool_ids")) {
      out.tool_ids = body.at("tool_ids").get<std::vector<std::string>>();
    }
    if (!body.contains("problem_source") || !body.at("problem_source").is_object()) {
      throw ApiError(400, "problem_source missing");
    }
    const json& src = body.at("problem_source");
    std::string kind = src.value("kind", "");
    for (auto& c : kind) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (kind == "INLINE") {
      out.source.kind = ProblemSource::Kind::Inline;
      out.text = src.value("text", "");
    } else if (kind == "UPLOAD") {
      out.source.kind = ProblemSource::Kind::Upload;
      out.source.filename = src.value("filename", "upload");
      out.text = src.value("text", "");
    } else if (kind == "DATABASE") {
      out.source.kind = ProblemSource::Kind::Database;
      if (!src.contains("number") || !src.at("number").is_number_integer()) {
        throw ApiError(400, "DATABASE problem_source needs an integer number");
      }
      out.source.number = src.at("number").get<int>();
    } else {
      throw ApiError(400, "problem_source.kind must be INLINE, UPLOAD or DATABASE");
    }
    if (body.contains("timeout_policy") && !body.at("timeout_policy").is_null()) {
      const json& p = body.at("timeout_policy");
      auto field = [&](const char* key) -> std::optional<int> {
        if (!p.contains(key) || p.at(key).is_null()) return std::nullopt;
        return p.at(key).get<int>();
      };
      out.policy = policy_from(field("soft_s"), field("term_s"), field("kill_s"));
    }
  } catch (const json::exception& e) {
    throw ApiError(400, std::string("malformed submission: ") + e.what());
  }
  return out;
}

TimeoutPolicy Service::effective_policy(const std::optional<TimeoutPolicy>& requested) const {
  TimeoutPolicy policy = requested.value_or(TimeoutPolicy{});
  if (!requested && policy.soft_s > config_.max_soft_timeout) {
    policy = TimeoutPolicy::from_soft(config_.max_soft_timeout);
  }
  try {
    policy.validate();
  } catch (const std::invalid_argument& e) {
    throw ApiError(400, e.what());
  }
  if (policy.soft_s > config_.max_soft_timeout) {
    throw ApiError(400, "soft timeout " + std::to_string(policy.soft_s) +
                            " exceeds the server maximum of " +
                            std::to_string(config_.max_soft_timeout));
  }
  return policy;
}

json Service::submit(const SubmitRequest& request) {
  if (request.tool_ids.empty()) throw ApiError(400, "no tools selected");

  std::vector<ToolSpec> specs;
  try {
    specs = resolve_tools(request.tool_ids, *registry());
  } catch (const LookupError& e) {
    throw ApiError(400, e.what(), json{{"unknown_tools", e.unknown_ids()}});
  }
  const TimeoutPolicy policy = effective_policy(request.policy);

  std::string text;
  if (request.source.kind == ProblemSource::Kind::Database) {
    if (request.source.number < 1) throw ApiError(400, "Cops numbers start at 1");
    try {
      text = cops_.fetch(request.source.number);
    } catch (const FetchError& e) {
      throw ApiError(502, e.what());
    }
  } else {
    text = request.text;
    if (text.size() > config_.upload_limit) {
      throw ApiError(413, "problem exceeds the upload limit of " +
                              std::to_string(config_.upload_limit) + " bytes");
    }
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
      throw ApiError(400, "problem text is empty");
    }
  }

  Job job;
  job.id = generate_job_id();
  job.source = request.source;
  job.category = infer_category(text);
  if (job.category != FormatCategory::HigherOrder) {
    try {
      job.problem = parse_problem(text);
    } catch (const ParseError& e) {
      job.parse_error = e.what();
    }
  }
  job.problem.raw_source = text;
  job.warnings = validate_selection(job.category, specs);
  for (const auto& s : specs) job.selected_tools.push_back(s.id);
  job.policy = policy;
  job.created_at = std::chrono::system_clock::now();

  json response{{"id", job.id},
                {"state", to_string(job.state)},
                {"category", to_string(job.category)},
                {"parse_error", job.parse_error ? json(*job.parse_error) : json(nullptr)},
                {"warnings", json::array()},
                {"selected_tools", job.selected_tools},
                {"timeout_policy", to_json(policy)}};
  for (const auto& w : job.warnings) response["warnings"].push_back(to_json(w));

  Problem problem = job.problem;
  std::string id = job.id;
  jobs_->put(std::move(job));
  queue_.submit([this, id, specs, problem = std::move(problem), policy] {
    execute_job(id, specs, problem, policy);
  });
  return response;
}

void Service::execute_job(const std::string& id, const std::vector<ToolSpec>& specs,
                          const Problem& problem, const TimeoutPolicy& policy) {
  jobs_->update(id, [](Job& j) { j.state = JobState::Running; });
  run_selection(specs, problem, policy, config_.engine_options(),
                [&](std::size_t, const RunResult& result) {
                  jobs_->update(id, [&](Job& j) {
                    j.results.push_back(result);
                    if (j.results.size() == j.selected_tools.size()) j.state = JobState::Done;
                  });
                });
}

std::optional<Job> Service::job(const std::string& id) const { return jobs_->get(id); }

void Service::wait_idle() { queue_.drain(); }

void Service::install_routes(httplib::Server& server) {
  server.set_payload_max_length(config_.upload_limit * 8 + 64 * 1024);

  server.Get("/api/registry", [this](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, to_json(*registry()));
  });

  server.Post("/api/registry/reload", [this](const httplib::Request& req,
                                             httplib::Response& res) {
    const std::string given = req.get_header_value("X-Reload-Secret");
    if (config_.reload_secret.empty() || !constant_time_equal(given, config_.reload_secret)) {
      send_json(res, 401, json{{"error", "reload requires a valid X-Reload-Secret header"}});
      return;
    }
    try {
      ReloadSummary summary = reload();
      send_json(res, 200, json{{"tools", summary.tools}, {"warnings", summary.warnings}});
    } catch (const std::exception& e) {
      send_json(res, 500, json{{"error", e.what()}});
    }
  });

  server.Post("/api/jobs", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      SubmitRequest request;
      if (req.is_multipart_form_data()) {
        request = parse_multipart(req);
      } else {
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded()) throw ApiError(400, "request body is not valid JSON");
        request = parse_submit(body);
      }
      send_json(res, 202, submit(request));
    } catch (const ApiError& e) {
      send_json(res, e.status(), e.body());
    } catch (const std::exception& e) {
      send_json(res, 500, json{{"error", e.what()}});
    }
  });

  server.Get(R"(/api/jobs/([0-9A-Za-z]+))",
             [this](const httplib::Request& req, httplib::Response& res) {
               auto found = job(req.matches[1].str());
               if (!found) {
                 send_json(res, 404, json{{"error", "unknown job"}});
                 return;
               }
               send_json(res, 200, to_json(*found));
             });

  if (!config_.static_dir.empty()) server.set_mount_point("/", config_.static_dir.string());
}

int Service::start(const std::string& host, int port) {
  server_ = std::make_unique<httplib::Server>();
  install_routes(*server_);
  int bound = port == 0 ? server_->bind_to_any_port(host)
                        : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
  server_thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void Service::serve_forever() {
  auto [host, port] = split_listen_addr(config_.listen_addr);
  server_ = std::make_unique<httplib::Server>();
  install_routes(*server_);
  if (!server_->listen(host, port)) {
    throw std::runtime_error("cannot listen on " + config_.listen_addr);
  }
}

void Service::stop() {
  if (server_) server_->stop();
  if (server_thread_.joinable()) server_thread_.join();
}

}  // namespace cocoweb
