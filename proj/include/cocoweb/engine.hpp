#pragma once

#include "cocoweb/problem.hpp"
#include "cocoweb/registry.hpp"

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cocoweb {

/// Three-tier deadlines in whole seconds, measured from spawn. `soft_s` is
/// only advertised to the tool through $TO; at `term_s` the process group
/// gets SIGTERM and at `kill_s` SIGKILL.
struct TimeoutPolicy {
  int soft_s = 59;
  int term_s = 61;
  int kill_s = 63;

  /// Throws std::invalid_argument unless 0 < soft < term < kill.
  void validate() const;

  /// Soft timeout with the default 2 s spacing between tiers.
  static TimeoutPolicy from_soft(int soft_s);

  friend bool operator==(const TimeoutPolicy&, const TimeoutPolicy&) = default;
};

enum class Answer { Yes, No, Maybe, Timeout, Error };
enum class Termination { Exit, TermSignal, KillSignal };

std::string_view to_string(Answer answer);
std::string_view to_string(Termination termination);

struct RunResult {
  std::string tool_id;
  Answer answer = Answer::Error;
  /// Merged stdout/stderr followed by the timing line.
  std::string output;
  std::optional<int> exit_code;
  double elapsed_s = 0.0;
  Termination terminated_by = Termination::Exit;

  friend bool operator==(const RunResult&, const RunResult&) = default;
};

struct CommandLine {
  std::vector<std::string> argv;
  std::filesystem::path working_dir;
};

class ExpansionError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EngineOptions {
  std::filesystem::path bin_root = ".";
  /// Temporary problem files and the host-wide execution lock live here.
  std::filesystem::path scratch_dir;
  std::size_t output_limit = 1 << 20;
};

/// Tokenizes the template on whitespace, then substitutes $TO and $FILE in
/// each token. The program token must be literal text.
CommandLine expand_command(const ToolSpec& spec, const TimeoutPolicy& policy,
                           const std::filesystem::path& problem_file,
                           const std::filesystem::path& bin_root = {});

/// Verdict from the first non-empty output line, case-insensitive.
Answer classify_answer(std::string_view output, Termination terminated_by,
                       std::optional<int> exit_code);

/// "\nTook <seconds, two decimals> seconds\n"
std::string timing_line(double elapsed_s);

/// Runs one tool on the problem's raw source. Never throws: spawn failures
/// and the like come back as Answer::Error with a diagnostic in `output`.
RunResult run_tool(const ToolSpec& spec, const Problem& problem,
                   const TimeoutPolicy& policy, const EngineOptions& options);

using ResultCallback = std::function<void(std::size_t index, const RunResult&)>;

/// Runs the tools one after another; a tool starts only once the previous
/// one has been reaped. `on_result` fires as each tool finishes.
std::vector<RunResult> run_selection(const std::vector<ToolSpec>& specs,
                                     const Problem& problem,
                                     const TimeoutPolicy& policy,
                                     const EngineOptions& options,
                                     const ResultCallback& on_result = {});

}  // namespace cocoweb
