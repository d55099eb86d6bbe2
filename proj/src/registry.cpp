#include "cocoweb/registry.hpp"

#include "cocoweb/placeholders.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace cocoweb {

const ToolSpec* RegistryTree::find(std::string_view id) const {
  for (const auto& year : years) {
    for (const auto& group : year.groups) {
      for (const auto& tool : group.tools) {
        if (tool.id == id) return &tool;
      }
    }
  }
  return nullptr;
}

std::vector<ToolSpec> RegistryTree::tools() const {
  std::vector<ToolSpec> out;
  for (const auto& year : years) {
    for (const auto& group : year.groups) {
      out.insert(out.end(), group.tools.begin(), group.tools.end());
    }
  }
  return out;
}

std::size_t RegistryTree::tool_count() const {
  std::size_t n = 0;
  for (const auto& year : years) {
    for (const auto& group : year.groups) n += group.tools.size();
  }
  return n;
}

namespace {

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += sep;
    out += items[i];
  }
  return out;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(),
                                    [](char c) { return c >= '0' && c <= '9'; });
}

// Newest first. Numeric labels compare by value so "2019" sorts after "999".
bool year_newer(const std::string& a, const std::string& b) {
  if (all_digits(a) && all_digits(b) && a.size() != b.size()) {
    return a.size() > b.size();
  }
  return a > b;
}

std::string read_all(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(dir, ec)) {
    bool is_dir = entry.is_directory(ec);
    if (directories ? is_dir : (entry.is_regular_file(ec) &&
                                entry.path().extension() == ".conf")) {
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

LookupError::LookupError(std::vector<std::string> unknown)
    : std::runtime_error("unknown tool id(s): " + join(unknown, ", ")),
      unknown_(std::move(unknown)) {}

bool references_placeholder(std::string_view text, std::string_view name) {
  for (const auto& piece : split_placeholders(text)) {
    if (piece.is_placeholder && piece.text == name) return true;
  }
  return false;
}

ToolSpec parse_tool_config(std::string_view contents, const MenuPath& path) {
  static const std::regex assignment(
      R"re(^\s*([A-Za-z_][A-Za-z0-9_]*)=(?:"([^"]*)"|'([^']*)'|([^\s"'#]*))\s*(?:#.*)?$)re");
  std::map<std::string, std::string> values;
  std::istringstream lines{std::string(contents)};
  for (std::string line; std::getline(lines, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::smatch m;
    if (!std::regex_match(line, m, assignment)) continue;
    std::string value = m[2].matched ? m[2].str()
                        : m[3].matched ? m[3].str()
                                       : m[4].str();
    values[m[1].str()] = std::move(value);
  }

  auto tool_dir = values.find("TOOLDIR");
  if (tool_dir == values.end()) throw ConfigError("TOOLDIR missing");
  auto tool = values.find("TOOL");
  if (tool == values.end()) throw ConfigError("TOOL missing");
  if (!references_placeholder(tool->second, "FILE")) {
    throw ConfigError("TOOL does not reference $FILE");
  }

  ToolSpec spec;
  spec.id = path.year + "/" + path.group + "/" + path.name;
  spec.display_name = path.name;
  spec.year = path.year;
  spec.category_group = path.group;
  spec.tool_dir = tool_dir->second;
  spec.command_template = tool->second;
  return spec;
}

ScanResult scan_registry(const fs::path& config_root) {
  std::error_code ec;
  if (!fs::is_directory(config_root, ec)) {
    throw RegistryError("configuration root is not a directory: " +
                        config_root.string());
  }

  ScanResult result;
  auto year_dirs = sorted_entries(config_root, true);
  std::sort(year_dirs.begin(), year_dirs.end(),
            [](const fs::path& a, const fs::path& b) {
              return year_newer(a.filename().string(), b.filename().string());
            });

  for (const auto& year_dir : year_dirs) {
    YearNode year{year_dir.filename().string(), {}};
    for (const auto& group_dir : sorted_entries(year_dir, true)) {
      GroupNode group{group_dir.filename().string(), {}};
      for (const auto& file : sorted_entries(group_dir, false)) {
        MenuPath path{year.label, group.label, file.stem().string()};
        try {
          group.tools.push_back(parse_tool_config(read_all(file), path));
        } catch (const ConfigError& e) {
          result.warnings.push_back(file.string() + ": " + e.what());
        }
      }
      if (!group.tools.empty()) year.groups.push_back(std::move(group));
    }
    if (!year.groups.empty()) result.tree.years.push_back(std::move(year));
  }
  return result;
}

std::vector<ToolSpec> resolve_tools(const std::vector<std::string>& ids,
                                    const RegistryTree& tree) {
  std::vector<ToolSpec> out;
  std::vector<std::string> unknown;
  std::set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) continue;
    if (const ToolSpec* spec = tree.find(id)) {
      out.push_back(*spec);
    } else {
      unknown.push_back(id);
    }
  }
  if (!unknown.empty()) throw LookupError(std::move(unknown));
  return out;
}

}  // namespace cocoweb
