#include "cocoweb/compatibility.hpp"

#include <cctype>

namespace cocoweb {

std::optional<FormatCategory> group_restriction(std::string_view group_label) {
  std::string key;
  for (char c : group_label) {
    unsigned char u = static_cast<unsigned char>(c);
    if (std::isalnum(u)) key += static_cast<char>(std::tolower(u));
  }
  if (key == "trs") return FormatCategory::TRS;
  if (key == "ctrs") return FormatCategory::CTRS;
  if (key == "hrs" || key == "ho" || key == "hotrs" || key == "higherorder") {
    return FormatCategory::HigherOrder;
  }
  return std::nullopt;
}

std::vector<SelectionWarning> validate_selection(FormatCategory category,
                                                 const std::vector<ToolSpec>& tools) {
  std::vector<SelectionWarning> warnings;
  if (category == FormatCategory::Unknown) return warnings;
  for (const auto& tool : tools) {
    auto accepts = group_restriction(tool.category_group);
    if (!accepts || *accepts == category) continue;
    warnings.push_back(SelectionWarning{
        tool.id, tool.category_group, category,
        "tool " + tool.id + " belongs to group " + tool.category_group +
            " (" + std::string(to_string(*accepts)) + ") but the problem is " +
            std::string(to_string(category))});
  }
  return warnings;
}

}  // namespace cocoweb
