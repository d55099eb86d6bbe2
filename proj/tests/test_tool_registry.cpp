#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cocoweb/placeholders.hpp"
#include "cocoweb/registry.hpp"
#include "test_support.hpp"

#include <algorithm>

using namespace cocoweb;
using namespace cocoweb::testing;
namespace fs = std::filesystem;

namespace {

const char* kSaigawaConfig =
    "TOOLDIR=\"Saigawa-2012/bin\"\n"
    "TOOL=\"./starexec_run_saigawa -t $TO $FILE\"\n";

}  // namespace

TEST_SUITE("parse_tool_config") {
  TEST_CASE("the Saigawa configuration") {
    ToolSpec spec = parse_tool_config(kSaigawaConfig, {"2012", "trs", "saigawa"});
    CHECK(spec.id == "2012/trs/saigawa");
    CHECK(spec.display_name == "saigawa");
    CHECK(spec.year == "2012");
    CHECK(spec.category_group == "trs");
    CHECK(spec.tool_dir == "Saigawa-2012/bin");
    CHECK(spec.command_template == "./starexec_run_saigawa -t $TO $FILE");
  }

  TEST_CASE("missing keys") {
    try {
      parse_tool_config("TOOLDIR=\"x\"\n", {"2012", "trs", "t"});
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()) == "TOOL missing");
    }
    CHECK_THROWS_WITH_AS(parse_tool_config("TOOL=\"cat $FILE\"\n", {"y", "g", "t"}),
                         "TOOLDIR missing", ConfigError);
  }

  TEST_CASE("TOOL must reference $FILE") {
    CHECK_THROWS_WITH_AS(parse_tool_config("TOOLDIR=\".\"\nTOOL=\"cat $TO\"\n", {"y", "g", "t"}),
                         "TOOL does not reference $FILE", ConfigError);
    // $FILENAME is a different variable.
    CHECK_THROWS_AS(parse_tool_config("TOOLDIR=\".\"\nTOOL=\"cat $FILENAME\"\n", {"y", "g", "t"}),
                    ConfigError);
  }

  TEST_CASE("$TO is optional and single quotes are accepted") {
    ToolSpec spec = parse_tool_config("TOOLDIR=.\nTOOL='cat $FILE'\n", {"y", "g", "cat"});
    CHECK(spec.command_template == "cat $FILE");
    CHECK(spec.tool_dir == ".");
  }

  TEST_CASE("other lines are ignored, no shell evaluation") {
    ToolSpec spec = parse_tool_config(
        "# comment\n"
        "export PATH=/evil\n"
        "  TOOLDIR=\"a b/bin\"   # trailing\n"
        "echo $(rm -rf /)\n"
        "TOOL=\"./run ${FILE} $(whoami)\"\r\n",
        {"y", "g", "t"});
    CHECK(spec.tool_dir == "a b/bin");
    CHECK(spec.command_template == "./run ${FILE} $(whoami)");
  }
}

TEST_CASE("placeholder splitting") {
  auto pieces = split_placeholders("-t $TO ${FILE}x $TOT $ $1");
  std::vector<std::pair<std::string, bool>> got;
  for (const auto& p : pieces) got.emplace_back(p.text, p.is_placeholder);
  std::vector<std::pair<std::string, bool>> want{
      {"-t ", false}, {"TO", true}, {" ", false}, {"FILE", true},
      {"x ", false}, {"TOT", true}, {" $ $1", false}};
  CHECK(got == want);
}

TEST_SUITE("scan_registry") {
  TEST_CASE("missing root is an error") {
    TempDir dir;
    CHECK_THROWS_AS(scan_registry(dir / "nope"), RegistryError);
  }

  TEST_CASE("empty directory gives an empty tree") {
    TempDir dir;
    ScanResult r = scan_registry(dir.path());
    CHECK(r.tree.years.empty());
    CHECK(r.warnings.empty());
  }

  TEST_CASE("bundled fixture tree") {
    ScanResult r = scan_registry(kTestData / "registry");
    REQUIRE(r.tree.years.size() == 1);
    CHECK(r.tree.years[0].label == "2012");
    REQUIRE(r.tree.years[0].groups.size() == 1);
    CHECK(r.tree.years[0].groups[0].label == "trs");
    REQUIRE(r.tree.years[0].groups[0].tools.size() == 1);
    const ToolSpec& spec = r.tree.years[0].groups[0].tools[0];
    CHECK(spec.tool_dir == "Saigawa-2012/bin");
    CHECK(spec.command_template == "./starexec_run_saigawa -t $TO $FILE");
  }

  TEST_CASE("ordering matches an independent walk") {
    TempDir dir;
    const std::vector<std::array<std::string, 3>> layout{
        {"2015", "trs", "csi"},  {"2015", "trs", "acp"},   {"2015", "ctrs", "conCon"},
        {"2016", "trs", "acph"}, {"2016", "com", "fort"},  {"2016", "trs", "CSI_ho"},
        {"2012", "trs", "saigawa"}};
    for (const auto& [y, g, t] : layout) {
      write_file(dir / y / g / (t + ".conf"), "TOOLDIR=\".\"\nTOOL=\"./x $FILE\"\n");
    }
    write_file(dir / "2016" / "trs" / "README", "not a config");
    write_file(dir / "2016" / "trs" / "broken.conf", "TOOLDIR=\".\"\n");
    fs::create_directories(dir / "2017" / "trs");  // no configs

    ScanResult r = scan_registry(dir.path());

    // Oracle: collect every depth-3 .conf path, then sort by
    // (year descending, group, tool).
    std::vector<std::array<std::string, 3>> expected;
    for (auto it = fs::recursive_directory_iterator(dir.path());
         it != fs::recursive_directory_iterator(); ++it) {
      if (it.depth() != 2 || it->path().extension() != ".conf") continue;
      if (it->path().stem() == "broken") continue;
      fs::path rel = fs::relative(it->path(), dir.path());
      auto part = rel.begin();
      std::string year = (part++)->string();
      std::string group = (part++)->string();
      expected.push_back({year, group, it->path().stem().string()});
    }
    std::sort(expected.begin(), expected.end(), [](const auto& a, const auto& b) {
      if (a[0] != b[0]) return a[0] > b[0];
      if (a[1] != b[1]) return a[1] < b[1];
      return a[2] < b[2];
    });
    std::vector<std::string> expected_ids;
    for (const auto& e : expected) expected_ids.push_back(e[0] + "/" + e[1] + "/" + e[2]);

    std::vector<std::string> ids;
    for (const auto& t : r.tree.tools()) ids.push_back(t.id);
    CHECK(ids == expected_ids);

    std::vector<std::string> years;
    for (const auto& y : r.tree.years) years.push_back(y.label);
    CHECK(years == std::vector<std::string>{"2016", "2015", "2012"});
    CHECK(r.tree.years[0].groups[0].label == "com");

    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].find("broken.conf") != std::string::npos);
    CHECK(r.warnings[0].find("TOOL missing") != std::string::npos);
  }

  TEST_CASE("scanning is idempotent") {
    ScanResult a = scan_registry(kTestData / "registry");
    ScanResult b = scan_registry(kTestData / "registry");
    CHECK(a.tree == b.tree);
  }
}

TEST_SUITE("resolve_tools") {
  TEST_CASE("examples") {
    RegistryTree tree = scan_registry(kTestData / "registry").tree;
    CHECK(resolve_tools({}, tree).empty());
    auto specs = resolve_tools({"2012/trs/saigawa"}, tree);
    REQUIRE(specs.size() == 1);
    CHECK(specs[0] == *tree.find("2012/trs/saigawa"));
    try {
      resolve_tools({"nope", "2012/trs/saigawa", "also-nope"}, tree);
      FAIL("expected LookupError");
    } catch (const LookupError& e) {
      CHECK(e.unknown_ids() == std::vector<std::string>{"nope", "also-nope"});
    }
  }

  TEST_CASE("request order kept, duplicates dropped, every id round-trips") {
    TempDir dir;
    for (const char* t : {"a", "b", "c"}) {
      write_file(dir / "2020" / "trs" / (std::string(t) + ".conf"),
                 "TOOLDIR=\".\"\nTOOL=\"./x $FILE\"\n");
    }
    RegistryTree tree = scan_registry(dir.path()).tree;
    auto specs = resolve_tools({"2020/trs/c", "2020/trs/a", "2020/trs/c"}, tree);
    REQUIRE(specs.size() == 2);
    CHECK(specs[0].id == "2020/trs/c");
    CHECK(specs[1].id == "2020/trs/a");
    for (const auto& t : tree.tools()) {
      CHECK(resolve_tools({t.id}, tree).front() == t);
    }
  }
}
