#pragma once

#include "cocoweb/problem.hpp"
#include "cocoweb/registry.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cocoweb {

struct SelectionWarning {
  std::string tool_id;
  std::string tool_group;
  FormatCategory problem_category;
  std::string message;
};

/// The problem category a tool group is restricted to, judged by its label
/// ("trs", "CTRS", "hrs", ...). Empty for groups that accept anything, such
/// as commutation.
std::optional<FormatCategory> group_restriction(std::string_view group_label);

/// One warning per tool whose group cannot handle `category`. Advisory only;
/// UNKNOWN problems never warn.
std::vector<SelectionWarning> validate_selection(FormatCategory category,
                                                 const std::vector<ToolSpec>& tools);

}  // namespace cocoweb
