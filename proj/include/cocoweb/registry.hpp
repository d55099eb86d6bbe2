#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cocoweb {

/// One registered tool. `id` is the menu path "year/group/name".
struct ToolSpec {
  std::string id;
  std::string display_name;
  std::string year;
  std::string category_group;
  std::string tool_dir;
  std::string command_template;

  friend bool operator==(const ToolSpec&, const ToolSpec&) = default;
};

struct MenuPath {
  std::string year;
  std::string group;
  std::string name;
};

struct GroupNode {
  std::string label;
  std::vector<ToolSpec> tools;

  friend bool operator==(const GroupNode&, const GroupNode&) = default;
};

struct YearNode {
  std::string label;
  std::vector<GroupNode> groups;

  friend bool operator==(const YearNode&, const YearNode&) = default;
};

/// The tool menu: years newest first, groups and tools lexicographic.
struct RegistryTree {
  std::vector<YearNode> years;

  const ToolSpec* find(std::string_view id) const;
  /// All tools in menu order.
  std::vector<ToolSpec> tools() const;
  std::size_t tool_count() const;

  friend bool operator==(const RegistryTree&, const RegistryTree&) = default;
};

struct ScanResult {
  RegistryTree tree;
  /// One entry per skipped configuration file.
  std::vector<std::string> warnings;
};

class RegistryError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class LookupError : public std::runtime_error {
public:
  explicit LookupError(std::vector<std::string> unknown);
  const std::vector<std::string>& unknown_ids() const { return unknown_; }

private:
  std::vector<std::string> unknown_;
};

/// Reads TOOLDIR and TOOL from KEY="value" lines. No shell evaluation: only
/// the $TO and $FILE placeholders carry meaning, and they are expanded by the
/// execution engine, not here.
ToolSpec parse_tool_config(std::string_view contents, const MenuPath& path);

/// Builds the menu from <config_root>/<year>/<group>/<tool>.conf.
/// Malformed configs are skipped and reported in ScanResult::warnings.
ScanResult scan_registry(const std::filesystem::path& config_root);

/// Specs in request order with duplicates dropped; throws LookupError naming
/// every unknown id.
std::vector<ToolSpec> resolve_tools(const std::vector<std::string>& ids,
                                    const RegistryTree& tree);

/// Whether `text` references the named placeholder as $NAME or ${NAME}.
bool references_placeholder(std::string_view text, std::string_view name);

}  // namespace cocoweb
