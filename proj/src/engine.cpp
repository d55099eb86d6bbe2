#include "cocoweb/engine.hpp"

#include "cocoweb/placeholders.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/file.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>

extern char** environ;

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace cocoweb {

void TimeoutPolicy::validate() const {
  if (!(0 < soft_s && soft_s < term_s && term_s < kill_s)) {
    throw std::invalid_argument(
        "timeout policy must satisfy 0 < soft < term < kill, got (" +
        std::to_string(soft_s) + ", " + std::to_string(term_s) + ", " +
        std::to_string(kill_s) + ")");
  }
}

TimeoutPolicy TimeoutPolicy::from_soft(int soft_s) {
  return TimeoutPolicy{soft_s, soft_s + 2, soft_s + 4};
}

std::string_view to_string(Answer answer) {
  switch (answer) {
    case Answer::Yes: return "YES";
    case Answer::No: return "NO";
    case Answer::Maybe: return "MAYBE";
    case Answer::Timeout: return "TIMEOUT";
    case Answer::Error: return "ERROR";
  }
  return "ERROR";
}

std::string_view to_string(Termination termination) {
  switch (termination) {
    case Termination::Exit: return "EXIT";
    case Termination::TermSignal: return "TERM_SIGNAL";
    case Termination::KillSignal: return "KILL_SIGNAL";
  }
  return "EXIT";
}

CommandLine expand_command(const ToolSpec& spec, const TimeoutPolicy& policy,
                           const fs::path& problem_file, const fs::path& bin_root) {
  std::vector<std::string> tokens;
  {
    std::string current;
    for (char c : spec.command_template) {
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!current.empty()) tokens.push_back(std::move(current));
        current.clear();
      } else {
        current += c;
      }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
  }

  CommandLine cmd;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::string arg;
    bool has_literal = false;
    for (const auto& piece : split_placeholders(tokens[i])) {
      if (!piece.is_placeholder) {
        arg += piece.text;
        has_literal = true;
      } else if (piece.text == "TO") {
        arg += std::to_string(policy.soft_s);
      } else if (piece.text == "FILE") {
        arg += problem_file.string();
      } else {
        // Unknown placeholders are passed through untouched.
        arg += "$" + piece.text;
        has_literal = true;
      }
    }
    if (i == 0 && !has_literal) {
      throw ExpansionError("command template of " + spec.id +
                           " has no program before its placeholders");
    }
    cmd.argv.push_back(std::move(arg));
  }
  if (cmd.argv.empty() || cmd.argv.front().empty()) {
    throw ExpansionError("command template of " + spec.id + " is empty");
  }
  cmd.working_dir = bin_root.empty() ? fs::path(spec.tool_dir) : bin_root / spec.tool_dir;
  return cmd;
}

Answer classify_answer(std::string_view output, Termination terminated_by,
                       std::optional<int> exit_code) {
  if (terminated_by != Termination::Exit) return Answer::Timeout;

  std::string first;
  while (!output.empty()) {
    std::size_t nl = output.find('\n');
    std::string_view line = output.substr(0, nl);
    output = nl == std::string_view::npos ? std::string_view{} : output.substr(nl + 1);
    auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    while (!line.empty() && is_space(line.front())) line.remove_prefix(1);
    while (!line.empty() && is_space(line.back())) line.remove_suffix(1);
    if (line.empty()) continue;
    for (char c : line) first += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    break;
  }
  if (first == "YES") return Answer::Yes;
  if (first == "NO") return Answer::No;
  if (first == "MAYBE") return Answer::Maybe;
  return exit_code.value_or(0) != 0 ? Answer::Error : Answer::Maybe;
}

std::string timing_line(double elapsed_s) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "\nTook %.2f seconds\n", elapsed_s);
  return buf;
}

namespace {

class UniqueFd {
public:
  UniqueFd() = default;
  explicit UniqueFd(int fd) : fd_(fd) {}
  UniqueFd(UniqueFd&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
  UniqueFd& operator=(UniqueFd&& other) noexcept {
    if (this != &other) {
      reset();
      fd_ = std::exchange(other.fd_, -1);
    }
    return *this;
  }
  ~UniqueFd() { reset(); }

  int get() const { return fd_; }
  explicit operator bool() const { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

private:
  int fd_ = -1;
};

// Serializes tool processes across every engine sharing a scratch directory,
// including separate processes such as the CLI next to the service.
class HostLock {
public:
  explicit HostLock(const fs::path& scratch_dir)
      : fd_(::open((scratch_dir / ".cocoweb-exec.lock").c_str(),
                   O_RDWR | O_CREAT | O_CLOEXEC, 0644)) {
    if (fd_) {
      while (::flock(fd_.get(), LOCK_EX) != 0 && errno == EINTR) {
      }
    }
  }
  ~HostLock() {
    if (fd_) ::flock(fd_.get(), LOCK_UN);
  }
  HostLock(const HostLock&) = delete;
  HostLock& operator=(const HostLock&) = delete;

private:
  UniqueFd fd_;
};

class TempProblemFile {
public:
  TempProblemFile(const fs::path& dir, std::string_view bytes) {
    std::string pattern = (dir / "problem-XXXXXX.trs").string();
    UniqueFd fd(::mkstemps(pattern.data(), 4));
    if (!fd) {
      throw std::runtime_error("cannot create temporary problem file in " +
                               dir.string() + ": " + std::strerror(errno));
    }
    path_ = pattern;
    std::size_t written = 0;
    while (written < bytes.size()) {
      ssize_t n = ::write(fd.get(), bytes.data() + written, bytes.size() - written);
      if (n < 0 && errno == EINTR) continue;
      if (n < 0) {
        std::string why = std::strerror(errno);
        ::unlink(path_.c_str());
        throw std::runtime_error("cannot write temporary problem file: " + why);
      }
      written += static_cast<std::size_t>(n);
    }
  }
  ~TempProblemFile() {
    if (!path_.empty()) ::unlink(path_.c_str());
  }
  TempProblemFile(const TempProblemFile&) = delete;
  TempProblemFile& operator=(const TempProblemFile&) = delete;

  const fs::path& path() const { return path_; }

private:
  fs::path path_;
};

fs::path effective_scratch(const EngineOptions& options) {
  fs::path dir = options.scratch_dir.empty() ? fs::temp_directory_path() / "cocoweb"
                                             : options.scratch_dir;
  fs::create_directories(dir);
  return fs::absolute(dir);
}

double seconds_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

struct Capture {
  std::string text;
  std::size_t limit;
  bool truncated = false;

  void append(const char* data, std::size_t n) {
    std::size_t room = limit > text.size() ? limit - text.size() : 0;
    if (n > room) truncated = true;
    text.append(data, std::min(n, room));
  }
};

struct SpawnAttributes {
  posix_spawn_file_actions_t actions;
  posix_spawnattr_t attr;

  SpawnAttributes() {
    posix_spawn_file_actions_init(&actions);
    posix_spawnattr_init(&attr);
  }
  ~SpawnAttributes() {
    posix_spawn_file_actions_destroy(&actions);
    posix_spawnattr_destroy(&attr);
  }
  SpawnAttributes(const SpawnAttributes&) = delete;
  SpawnAttributes& operator=(const SpawnAttributes&) = delete;
};

RunResult failed_run(const ToolSpec& spec, std::string message, double elapsed_s,
                     std::optional<int> exit_code = std::nullopt) {
  RunResult r;
  r.tool_id = spec.id;
  r.answer = Answer::Error;
  r.exit_code = exit_code;
  r.terminated_by = Termination::Exit;
  r.elapsed_s = elapsed_s;
  r.output = "cocoweb: " + std::move(message) + "\n" + timing_line(elapsed_s);
  return r;
}

RunResult execute(const ToolSpec& spec, const CommandLine& cmd,
                  const TimeoutPolicy& policy, std::size_t output_limit) {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) {
    return failed_run(spec, std::string("pipe: ") + std::strerror(errno), 0.0);
  }
  UniqueFd read_end(fds[0]);
  UniqueFd write_end(fds[1]);

  SpawnAttributes sa;
  posix_spawn_file_actions_addopen(&sa.actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
  posix_spawn_file_actions_adddup2(&sa.actions, write_end.get(), STDOUT_FILENO);
  posix_spawn_file_actions_adddup2(&sa.actions, write_end.get(), STDERR_FILENO);
  posix_spawn_file_actions_addchdir_np(&sa.actions, cmd.working_dir.c_str());

  sigset_t defaults;
  sigfillset(&defaults);
  sigdelset(&defaults, SIGKILL);
  sigdelset(&defaults, SIGSTOP);
  sigset_t empty;
  sigemptyset(&empty);
  posix_spawnattr_setsigdefault(&sa.attr, &defaults);
  posix_spawnattr_setsigmask(&sa.attr, &empty);
  posix_spawnattr_setpgroup(&sa.attr, 0);
  posix_spawnattr_setflags(&sa.attr, POSIX_SPAWN_SETPGROUP | POSIX_SPAWN_SETSIGDEF |
                                         POSIX_SPAWN_SETSIGMASK);

  std::vector<char*> argv;
  for (const auto& a : cmd.argv) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);

  const auto start = Clock::now();
  pid_t pid = -1;
  int rc = ::posix_spawnp(&pid, argv[0], &sa.actions, &sa.attr, argv.data(), environ);
  if (rc != 0) {
    return failed_run(spec,
                      "cannot execute '" + cmd.argv.front() + "' in " +
                          cmd.working_dir.string() + ": " + std::strerror(rc),
                      seconds_between(start, Clock::now()),
                      rc == ENOENT ? 127 : 126);
  }
  write_end.reset();

  const auto term_at = start + std::chrono::seconds(policy.term_s);
  const auto kill_at = start + std::chrono::seconds(policy.kill_s);
  Capture capture{{}, output_limit};
  bool sent_term = false;
  bool sent_kill = false;
  bool eof = false;
  bool reaped = false;
  int status = 0;
  Clock::time_point finished{};
  std::optional<Clock::time_point> drain_until;

  while (!reaped || !eof) {
    auto now = Clock::now();
    if (!reaped && !sent_term && now >= term_at) {
      ::kill(-pid, SIGTERM);
      sent_term = true;
    }
    if (!reaped && !sent_kill && now >= kill_at) {
      ::kill(-pid, SIGKILL);
      sent_kill = true;
    }
    if (reaped && drain_until && now >= *drain_until) break;

    auto wait = std::chrono::milliseconds(eof ? 2 : 50);
    if (!reaped) {
      auto next = !sent_term ? term_at : kill_at;
      if (!sent_kill) {
        auto until = std::chrono::ceil<std::chrono::milliseconds>(next - now);
        wait = std::clamp(until, std::chrono::milliseconds(0), wait);
      }
    }

    if (!eof) {
      pollfd pfd{read_end.get(), POLLIN, 0};
      int ready = ::poll(&pfd, 1, static_cast<int>(wait.count()));
      if (ready > 0) {
        char buf[8192];
        ssize_t n = ::read(read_end.get(), buf, sizeof buf);
        if (n > 0) {
          capture.append(buf, static_cast<std::size_t>(n));
        } else if (n == 0 || (errno != EINTR && errno != EAGAIN)) {
          eof = true;
        }
      }
    } else {
      ::poll(nullptr, 0, static_cast<int>(wait.count()));
    }

    if (!reaped) {
      pid_t w = ::waitpid(pid, &status, WNOHANG);
      if (w == pid || (w < 0 && errno == ECHILD)) {
        reaped = true;
        finished = Clock::now();
        // Stragglers left behind by wrapper scripts would keep the pipe open.
        ::kill(-pid, SIGKILL);
        drain_until = finished + std::chrono::seconds(1);
      }
    }
  }

  RunResult r;
  r.tool_id = spec.id;
  r.elapsed_s = seconds_between(start, finished);
  r.terminated_by = sent_kill   ? Termination::KillSignal
                    : sent_term ? Termination::TermSignal
                                : Termination::Exit;
  if (WIFEXITED(status)) {
    r.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status) && r.terminated_by == Termination::Exit) {
    r.exit_code = 128 + WTERMSIG(status);
  }
  r.answer = classify_answer(capture.text, r.terminated_by, r.exit_code);
  r.output = std::move(capture.text);
  if (capture.truncated) {
    if (!r.output.empty() && r.output.back() != '\n') r.output += '\n';
    r.output += "[cocoweb: output truncated at " + std::to_string(output_limit) +
                " bytes]\n";
  }
  r.output += timing_line(r.elapsed_s);
  return r;
}

}  // namespace

RunResult run_tool(const ToolSpec& spec, const Problem& problem,
                   const TimeoutPolicy& policy, const EngineOptions& options) {
  try {
    policy.validate();
    const fs::path scratch = effective_scratch(options);
    TempProblemFile file(scratch, problem.raw_source);
    CommandLine cmd = expand_command(spec, policy, fs::weakly_canonical(file.path()),
                                     options.bin_root);
    std::error_code ec;
    if (!fs::is_directory(cmd.working_dir, ec)) {
      return failed_run(spec, "tool directory does not exist: " + cmd.working_dir.string(),
                        0.0);
    }
    HostLock lock(scratch);
    return execute(spec, cmd, policy, options.output_limit);
  } catch (const std::exception& e) {
    return failed_run(spec, e.what(), 0.0);
  }
}

std::vector<RunResult> run_selection(const std::vector<ToolSpec>& specs,
                                     const Problem& problem,
                                     const TimeoutPolicy& policy,
                                     const EngineOptions& options,
                                     const ResultCallback& on_result) {
  if (specs.empty()) throw std::invalid_argument("run_selection needs at least one tool");
  std::vector<RunResult> results;
  results.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    results.push_back(run_tool(specs[i], problem, policy, options));
    if (on_result) on_result(i, results.back());
  }
  return results;
}

}  // namespace cocoweb
