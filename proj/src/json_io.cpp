#include "cocoweb/json_io.hpp"

#include <cstdio>
#include <ctime>

namespace cocoweb {

using nlohmann::json;

namespace {

std::string iso8601(std::chrono::system_clock::time_point t) {
  std::time_t secs = std::chrono::system_clock::to_time_t(t);
  std::tm utc{};
  gmtime_r(&secs, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

}  // namespace

json to_json(const RunResult& result) {
  return json{
      {"tool_id", result.tool_id},
      {"answer", to_string(result.answer)},
      {"output", result.output},
      {"exit_code", result.exit_code ? json(*result.exit_code) : json(nullptr)},
      {"elapsed_s", result.elapsed_s},
      {"terminated_by", to_string(result.terminated_by)},
  };
}

json to_json(const RegistryTree& tree) {
  json years = json::array();
  for (const auto& year : tree.years) {
    json groups = json::array();
    for (const auto& group : year.groups) {
      json tools = json::array();
      for (const auto& tool : group.tools) {
        tools.push_back({{"id", tool.id},
                         {"name", tool.display_name},
                         {"year", tool.year},
                         {"group", tool.category_group}});
      }
      groups.push_back({{"label", group.label}, {"tools", std::move(tools)}});
    }
    years.push_back({{"label", year.label}, {"groups", std::move(groups)}});
  }
  return json{{"years", std::move(years)}};
}

json to_json(const SelectionWarning& warning) {
  return json{{"tool_id", warning.tool_id},
              {"tool_group", warning.tool_group},
              {"problem_category", to_string(warning.problem_category)},
              {"message", warning.message}};
}

json to_json(const TimeoutPolicy& policy) {
  return json{{"soft_s", policy.soft_s}, {"term_s", policy.term_s}, {"kill_s", policy.kill_s}};
}

json to_json(const Job& job) {
  json source{{"kind", to_string(job.source.kind)}};
  if (job.source.kind == ProblemSource::Kind::Upload) source["filename"] = job.source.filename;
  if (job.source.kind == ProblemSource::Kind::Database) source["number"] = job.source.number;

  json warnings = json::array();
  for (const auto& w : job.warnings) warnings.push_back(to_json(w));
  json results = json::array();
  for (const auto& r : job.results) results.push_back(to_json(r));

  json doc{
      {"id", job.id},
      {"state", to_string(job.state)},
      {"problem_source", std::move(source)},
      {"problem_text", job.problem.raw_source},
      {"category", to_string(job.category)},
      {"parse_error", job.parse_error ? json(*job.parse_error) : json(nullptr)},
      {"warnings", std::move(warnings)},
      {"selected_tools", job.selected_tools},
      {"timeout_policy", to_json(job.policy)},
      {"results", std::move(results)},
      {"created_at", iso8601(job.created_at)},
  };
  if (job.state == JobState::Running) doc["current_tool"] = job.current_tool();
  return doc;
}

}  // namespace cocoweb
