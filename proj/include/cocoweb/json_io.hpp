#pragma once

#include "cocoweb/compatibility.hpp"
#include "cocoweb/engine.hpp"
#include "cocoweb/job_store.hpp"
#include "cocoweb/registry.hpp"

#include <json.hpp>

namespace cocoweb {

nlohmann::json to_json(const RunResult& result);
nlohmann::json to_json(const RegistryTree& tree);
nlohmann::json to_json(const SelectionWarning& warning);
nlohmann::json to_json(const TimeoutPolicy& policy);
nlohmann::json to_json(const Job& job);

}  // namespace cocoweb
