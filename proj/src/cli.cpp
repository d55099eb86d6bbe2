#include "cocoweb/cli.hpp"

#include "cocoweb/compatibility.hpp"
#include "cocoweb/cops_client.hpp"
#include "cocoweb/engine.hpp"
#include "cocoweb/json_io.hpp"
#include "cocoweb/problem.hpp"
#include "cocoweb/registry.hpp"
#include "cocoweb/service.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace cocoweb {

namespace {

struct PathOptions {
  std::string config_root = "config";
  std::string bin_root = "bin";
  std::string scratch_dir;
  std::string cops_base_url = ServiceConfig{}.cops_base_url;
  std::string cops_path_template = ServiceConfig{}.cops_path_template;
};

void add_path_options(CLI::App& cmd, PathOptions& paths) {
  cmd.add_option("--config-root", paths.config_root, "Tool configuration tree")
      ->envname("CONFIG_ROOT");
  cmd.add_option("--bin-root", paths.bin_root, "Directory holding the TOOLDIRs")
      ->envname("BIN_ROOT");
  cmd.add_option("--scratch-dir", paths.scratch_dir, "Temporary problem files")
      ->envname("SCRATCH_DIR");
  cmd.add_option("--cops-base-url", paths.cops_base_url, "Cops database base URL")
      ->envname("COPS_BASE_URL");
  cmd.add_option("--cops-path-template", paths.cops_path_template,
                 "Path with {number} placeholder")
      ->envname("COPS_PATH_TEMPLATE");
}

std::optional<std::string> read_problem(const std::string& where, std::istream& in) {
  if (where == "-") {
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  std::ifstream file(where, std::ios::binary);
  if (!file) return std::nullopt;
  return std::string(std::istreambuf_iterator<char>(file), std::istreambuf_iterator<char>());
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void print_table(std::ostream& out, const std::vector<RunResult>& results) {
  std::size_t width = 4;
  for (const auto& r : results) width = std::max(width, r.tool_id.size());
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(s.size(), w), ' ');
    return s;
  };
  out << pad("TOOL", width) << "  " << pad("ANSWER", 7) << "  TIME\n";
  for (const auto& r : results) {
    out << pad(r.tool_id, width) << "  " << pad(std::string(to_string(r.answer)), 7) << "  "
        << fixed2(r.elapsed_s) << "\n";
  }
}

struct RunOptions {
  PathOptions paths;
  std::string problem;
  std::optional<int> cops_number;
  std::vector<std::string> tools;
  std::optional<int> soft;
  std::optional<int> term;
  std::optional<int> kill;
  std::string format = "plain";
};

int cmd_run(const RunOptions& opt, std::istream& in, std::ostream& out, std::ostream& err) {
  if (opt.problem.empty() == !opt.cops_number) {
    err << "cocoweb run: give exactly one of a problem file ('-' for stdin) or --cops N\n";
    return kUsageError;
  }

  TimeoutPolicy policy;
  if (opt.soft) policy = TimeoutPolicy::from_soft(*opt.soft);
  if (opt.term) policy.term_s = *opt.term;
  if (opt.kill) policy.kill_s = *opt.kill;
  else if (opt.term) policy.kill_s = policy.term_s + 2;
  try {
    policy.validate();
  } catch (const std::invalid_argument& e) {
    err << "cocoweb run: " << e.what() << "\n";
    return kUsageError;
  }

  RegistryTree tree;
  try {
    ScanResult scan = scan_registry(opt.paths.config_root);
    for (const auto& w : scan.warnings) err << "warning: " << w << "\n";
    tree = std::move(scan.tree);
  } catch (const RegistryError& e) {
    err << "cocoweb run: " << e.what() << "\n";
    return kUsageError;
  }

  std::vector<std::string> ids;
  for (const auto& entry : opt.tools) {
    std::stringstream parts(entry);
    for (std::string id; std::getline(parts, id, ',');) {
      if (id == "all") {
        for (const auto& t : tree.tools()) ids.push_back(t.id);
      } else if (!id.empty()) {
        ids.push_back(id);
      }
    }
  }
  if (ids.empty()) {
    err << "cocoweb run: no tools selected\n";
    return kUsageError;
  }
  std::vector<ToolSpec> specs;
  try {
    specs = resolve_tools(ids, tree);
  } catch (const LookupError& e) {
    err << "cocoweb run: " << e.what() << "\n";
    return kUsageError;
  }

  std::string text;
  json source;
  if (opt.cops_number) {
    try {
      CopsClient cops(opt.paths.cops_base_url, opt.paths.cops_path_template);
      text = cops.fetch(*opt.cops_number);
    } catch (const std::exception& e) {
      err << "cocoweb run: " << e.what() << "\n";
      return kUsageError;
    }
    source = {{"kind", "DATABASE"}, {"number", *opt.cops_number}};
  } else {
    auto read = read_problem(opt.problem, in);
    if (!read) {
      err << "cocoweb run: cannot read " << opt.problem << "\n";
      return kUsageError;
    }
    text = std::move(*read);
    source = {{"kind", opt.problem == "-" ? "INLINE" : "UPLOAD"}};
    if (opt.problem != "-") source["filename"] = fs::path(opt.problem).filename().string();
  }

  Problem problem;
  problem.raw_source = text;
  const FormatCategory category = infer_category(text);
  const auto warnings = validate_selection(category, specs);
  if (opt.format != "json") {
    for (const auto& w : warnings) err << "warning: " << w.message << "\n";
  }

  EngineOptions engine;
  engine.bin_root = opt.paths.bin_root;
  engine.scratch_dir = opt.paths.scratch_dir;

  const bool plain = opt.format == "plain";
  auto results = run_selection(specs, problem, policy, engine,
                               [&](std::size_t, const RunResult& r) {
                                 if (!plain) return;
                                 out << "==> " << r.tool_id << ": " << to_string(r.answer)
                                     << "\n"
                                     << r.output;
                                 out.flush();
                               });

  if (opt.format == "table") {
    print_table(out, results);
  } else if (opt.format == "json") {
    json doc{{"problem_source", source},
             {"category", to_string(category)},
             {"timeout_policy", to_json(policy)},
             {"warnings", json::array()},
             {"results", json::array()}};
    for (const auto& w : warnings) doc["warnings"].push_back(to_json(w));
    for (const auto& r : results) doc["results"].push_back(to_json(r));
    out << doc.dump(2) << "\n";
  }

  for (const auto& r : results) {
    if (r.answer != Answer::Yes && r.answer != Answer::No) return kUndecided;
  }
  return kAllDecided;
}

int cmd_categorize(const std::string& file, std::istream& in, std::ostream& out,
                   std::ostream& err) {
  auto text = read_problem(file, in);
  if (!text) {
    err << "cocoweb categorize: cannot read " << file << "\n";
    return kUsageError;
  }
  out << to_string(infer_category(*text)) << "\n";
  return 0;
}

int cmd_registry(const PathOptions& paths, std::ostream& out, std::ostream& err) {
  try {
    ScanResult scan = scan_registry(paths.config_root);
    for (const auto& w : scan.warnings) err << "warning: " << w << "\n";
    for (const auto& t : scan.tree.tools()) out << t.id << "\n";
    return 0;
  } catch (const RegistryError& e) {
    err << "cocoweb registry: " << e.what() << "\n";
    return kUsageError;
  }
}

int cmd_serve(ServiceConfig config, std::ostream& out, std::ostream& err) {
  std::signal(SIGPIPE, SIG_IGN);
  try {
    Service service(std::move(config));
    for (const auto& w : service.startup_warnings()) err << "warning: " << w << "\n";
    out << "cocoweb: " << service.registry()->tool_count() << " tools, listening on "
        << service.config().listen_addr << std::endl;
    service.serve_forever();
    return 0;
  } catch (const std::exception& e) {
    err << "cocoweb serve: " << e.what() << "\n";
    return kUsageError;
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Run confluence tools on rewrite-system problems"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run selected tools on one problem");
  add_path_options(*run_cmd, run.paths);
  run_cmd->add_option("problem", run.problem, "Problem file, or '-' for stdin");
  run_cmd->add_option("--cops", run.cops_number, "Fetch the problem from Cops by number")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("-t,--tools", run.tools, "Tool ids (comma separated) or 'all'")
      ->required();
  run_cmd->add_option("--soft", run.soft, "Timeout passed to the tool as $TO");
  run_cmd->add_option("--term", run.term, "Seconds until SIGTERM");
  run_cmd->add_option("--kill", run.kill, "Seconds until SIGKILL");
  run_cmd->add_option("-f,--format", run.format, "Output mode")
      ->check(CLI::IsMember({"plain", "table", "json"}));

  std::string categorize_file;
  auto* cat_cmd = app.add_subcommand("categorize", "Print the format category of a problem");
  cat_cmd->add_option("file", categorize_file, "Problem file, or '-' for stdin")->required();

  PathOptions registry_paths;
  auto* reg_cmd = app.add_subcommand("registry", "List registered tool ids in menu order");
  add_path_options(*reg_cmd, registry_paths);

  ServiceConfig serve = ServiceConfig::from_environment();
  std::string config_root = serve.config_root.string();
  std::string bin_root = serve.bin_root.string();
  std::string scratch_dir = serve.scratch_dir.string();
  std::string static_dir = serve.static_dir.string();
  auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP service");
  serve_cmd->add_option("--config-root", config_root)->envname("CONFIG_ROOT");
  serve_cmd->add_option("--bin-root", bin_root)->envname("BIN_ROOT");
  serve_cmd->add_option("--scratch-dir", scratch_dir)->envname("SCRATCH_DIR");
  serve_cmd->add_option("--static-dir", static_dir)->envname("STATIC_DIR");
  serve_cmd->add_option("--listen", serve.listen_addr)->envname("LISTEN_ADDR");
  serve_cmd->add_option("--cops-base-url", serve.cops_base_url)->envname("COPS_BASE_URL");
  serve_cmd->add_option("--cops-path-template", serve.cops_path_template)
      ->envname("COPS_PATH_TEMPLATE");
  serve_cmd->add_option("--max-soft-timeout", serve.max_soft_timeout)
      ->envname("MAX_SOFT_TIMEOUT");
  serve_cmd->add_option("--reload-secret", serve.reload_secret)->envname("RELOAD_SECRET");

  std::vector<std::string> argv_storage{"cocoweb"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "cocoweb: " << e.what() << "\n";
    if (!app.get_subcommands().empty()) {
      err << app.get_subcommands().front()->help();
    }
    return kUsageError;
  }

  if (run_cmd->parsed()) return cmd_run(run, in, out, err);
  if (cat_cmd->parsed()) return cmd_categorize(categorize_file, in, out, err);
  if (reg_cmd->parsed()) return cmd_registry(registry_paths, out, err);
  serve.config_root = config_root;
  serve.bin_root = bin_root;
  serve.scratch_dir = scratch_dir;
  serve.static_dir = static_dir;
  return cmd_serve(std::move(serve), out, err);
}

}  // namespace cocoweb
