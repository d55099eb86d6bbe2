#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cocoweb/engine.hpp"
#include "cocoweb/work_queue.hpp"
#include "test_support.hpp"

#include <atomic>
#include <chrono>
#include <sstream>

using namespace cocoweb;
using namespace cocoweb::testing;
namespace fs = std::filesystem;

namespace {

Problem trivial_problem() {
  Problem p;
  p.raw_source = "(VAR x) (RULES f(x) -> x)";
  return p;
}

double now_epoch() {
  return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

TEST_SUITE("timeout policy") {
  TEST_CASE("defaults and validation") {
    TimeoutPolicy p;
    CHECK(p == TimeoutPolicy{59, 61, 63});
    CHECK_NOTHROW(p.validate());
    CHECK(TimeoutPolicy::from_soft(2) == TimeoutPolicy{2, 4, 6});
    CHECK_THROWS_AS((TimeoutPolicy{0, 1, 2}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((TimeoutPolicy{3, 3, 4}).validate(), std::invalid_argument);
    CHECK_THROWS_AS((TimeoutPolicy{1, 3, 2}).validate(), std::invalid_argument);
  }
}

TEST_SUITE("expand_command") {
  TEST_CASE("Saigawa template with defaults") {
    ToolSpec spec;
    spec.id = "2012/trs/saigawa";
    spec.tool_dir = "Saigawa-2012/bin";
    spec.command_template = "./starexec_run_saigawa -t $TO $FILE";
    CommandLine cmd = expand_command(spec, TimeoutPolicy{}, "/tmp/p.trs", "/opt/coco/bin");
    CHECK(cmd.argv == std::vector<std::string>{"./starexec_run_saigawa", "-t", "59", "/tmp/p.trs"});
    CHECK(cmd.working_dir == fs::path("/opt/coco/bin/Saigawa-2012/bin"));
  }

  TEST_CASE("no $TO") {
    CommandLine cmd = expand_command(mock_tool("t", "cat $FILE"), TimeoutPolicy{}, "/tmp/p.trs");
    CHECK(cmd.argv == std::vector<std::string>{"cat", "/tmp/p.trs"});
  }

  TEST_CASE("placeholders inside tokens and braces") {
    CommandLine cmd = expand_command(mock_tool("t", "run  --timeout=$TO\t${FILE}.out $TOT"),
                                     TimeoutPolicy{5, 6, 7}, "/p");
    CHECK(cmd.argv == std::vector<std::string>{"run", "--timeout=5", "/p.out", "$TOT"});
  }

  TEST_CASE("a path with spaces stays one argument") {
    CommandLine cmd = expand_command(mock_tool("t", "cat $FILE"), TimeoutPolicy{}, "/tmp/a b.trs");
    CHECK(cmd.argv == std::vector<std::string>{"cat", "/tmp/a b.trs"});
  }

  TEST_CASE("degenerate templates") {
    CHECK_THROWS_AS(expand_command(mock_tool("t", "$FILE"), TimeoutPolicy{}, "/tmp/p.trs"),
                    ExpansionError);
    CHECK_THROWS_AS(expand_command(mock_tool("t", "   "), TimeoutPolicy{}, "/tmp/p.trs"),
                    ExpansionError);
    CHECK_THROWS_AS(expand_command(mock_tool("t", "${TO}${FILE} x"), TimeoutPolicy{}, "/p"),
                    ExpansionError);
  }
}

TEST_SUITE("classify_answer") {
  TEST_CASE("examples") {
    CHECK(classify_answer("YES\nproof...", Termination::Exit, 0) == Answer::Yes);
    CHECK(classify_answer("", Termination::KillSignal, std::nullopt) == Answer::Timeout);
    CHECK(classify_answer("segfault", Termination::Exit, 139) == Answer::Error);
  }

  TEST_CASE("first non-empty line, trimmed, case-insensitive") {
    CHECK(classify_answer("\n\n  no \r\nYES", Termination::Exit, 0) == Answer::No);
    CHECK(classify_answer("Yes", Termination::Exit, 0) == Answer::Yes);
    CHECK(classify_answer("maybe\n", Termination::Exit, 0) == Answer::Maybe);
    CHECK(classify_answer("YES, obviously", Termination::Exit, 0) == Answer::Maybe);
    CHECK(classify_answer("", Termination::Exit, 0) == Answer::Maybe);
    CHECK(classify_answer("", Termination::Exit, 1) == Answer::Error);
    CHECK(classify_answer("YES", Termination::Exit, 1) == Answer::Yes);
  }

  TEST_CASE("any signal termination is a timeout") {
    CHECK(classify_answer("YES", Termination::TermSignal, 0) == Answer::Timeout);
    CHECK(classify_answer("NO", Termination::KillSignal, std::nullopt) == Answer::Timeout);
  }
}

TEST_CASE("timing line format") {
  CHECK(timing_line(0.0) == "\nTook 0.00 seconds\n");
  CHECK(timing_line(4.004) == "\nTook 4.00 seconds\n");
  CHECK(timing_line(61.126) == "\nTook 61.13 seconds\n");
}

TEST_SUITE("run_tool") {
  TEST_CASE("instant tool") {
    TempDir scratch;
    RunResult r = run_tool(mock_tool("echo-yes", "./echo-yes $FILE"), trivial_problem(),
                           TimeoutPolicy{}, mock_engine(scratch.path()));
    CHECK(r.tool_id == "echo-yes");
    CHECK(r.answer == Answer::Yes);
    CHECK(r.terminated_by == Termination::Exit);
    CHECK(r.exit_code == 0);
    CHECK(r.elapsed_s < 1.0);
    CHECK(r.output.starts_with("YES\nmock proof for "));
    CHECK(has_single_trailing_timing_line(r.output));
    CHECK(scratch_leftovers(scratch.path()).empty());
  }

  TEST_CASE("tool receives soft timeout and an absolute, byte-identical file") {
    TempDir scratch;
    Problem p;
    p.raw_source = std::string("(VAR x)\t\r\n(RULES f(x) -> x)  \n") + '\0' + "tail\xff";
    const fs::path copy = scratch / "copy.trs";
    RunResult r = run_tool(mock_tool("copy", "./copy-input $FILE " + copy.string()), p,
                           TimeoutPolicy{7, 8, 9}, mock_engine(scratch / "work"));
    CHECK(r.answer == Answer::Maybe);
    CHECK(read_file(copy) == p.raw_source);

    RunResult args = run_tool(mock_tool("args", "./echo-args -t $TO $FILE"), p,
                              TimeoutPolicy{7, 8, 9}, mock_engine(scratch.path()));
    std::istringstream lines(args.output);
    std::vector<std::string> got;
    for (std::string line; std::getline(lines, line);) {
      if (line.starts_with("arg: ")) got.push_back(line.substr(5));
    }
    REQUIRE(got.size() == 3);
    CHECK(got[0] == "-t");
    CHECK(got[1] == "7");
    CHECK(fs::path(got[2]).is_absolute());
    CHECK(fs::path(got[2]).extension() == ".trs");
  }

  TEST_CASE("missing binary and missing directory are ERROR results") {
    TempDir scratch;
    RunResult r = run_tool(mock_tool("ghost", "./does-not-exist $FILE"), trivial_problem(),
                           TimeoutPolicy{}, mock_engine(scratch.path()));
    CHECK(r.answer == Answer::Error);
    CHECK(r.output.find("cannot execute './does-not-exist'") != std::string::npos);
    CHECK(has_single_trailing_timing_line(r.output));

    ToolSpec nodir = mock_tool("nodir", "./echo-yes $FILE");
    nodir.tool_dir = "no/such/dir";
    r = run_tool(nodir, trivial_problem(), TimeoutPolicy{}, mock_engine(scratch.path()));
    CHECK(r.answer == Answer::Error);
    CHECK(r.output.find("tool directory does not exist") != std::string::npos);
    CHECK(has_single_trailing_timing_line(r.output));

    r = run_tool(mock_tool("degenerate", "$FILE"), trivial_problem(), TimeoutPolicy{},
                 mock_engine(scratch.path()));
    CHECK(r.answer == Answer::Error);
    CHECK(scratch_leftovers(scratch.path()).empty());
  }

  TEST_CASE("invalid policy is an ERROR result, not an exception") {
    TempDir scratch;
    RunResult r = run_tool(mock_tool("echo-yes", "./echo-yes $FILE"), trivial_problem(),
                           TimeoutPolicy{3, 2, 1}, mock_engine(scratch.path()));
    CHECK(r.answer == Answer::Error);
    CHECK(has_single_trailing_timing_line(r.output));
  }

  TEST_CASE("garbage output with nonzero exit") {
    TempDir scratch;
    RunResult r = run_tool(mock_tool("garbage", "./garbage-exit $FILE"), trivial_problem(),
                           TimeoutPolicy{}, mock_engine(scratch.path()));
    CHECK(r.answer == Answer::Error);
    CHECK(r.exit_code == 139);
    CHECK(r.terminated_by == Termination::Exit);
  }

  TEST_CASE("stdout and stderr are merged in arrival order") {
    TempDir scratch;
    RunResult r = run_tool(mock_tool("mixed", "./mixed-streams $FILE"), trivial_problem(),
                           TimeoutPolicy{}, mock_engine(scratch.path()));
    CHECK(r.output.starts_with("YES\nto stderr\nto stdout\n"));
  }

  TEST_CASE("output is capped with a marker") {
    TempDir scratch;
    EngineOptions options = mock_engine(scratch.path());
    options.output_limit = 4096;
    RunResult r = run_tool(mock_tool("flood", "./flood $FILE"), trivial_problem(),
                           TimeoutPolicy{}, options);
    CHECK(r.answer == Answer::Yes);
    CHECK(r.output.size() < 4096 + 200);
    CHECK(r.output.find("[cocoweb: output truncated at 4096 bytes]") != std::string::npos);
    CHECK(has_single_trailing_timing_line(r.output));
  }

  TEST_CASE("background children of the tool are cleaned up") {
    TempDir scratch;
    RunResult r = run_tool(mock_tool("orphan", "./orphan-maker $FILE"), trivial_problem(),
                           TimeoutPolicy{}, mock_engine(scratch.path()));
    CHECK(r.answer == Answer::Yes);
    CHECK(r.terminated_by == Termination::Exit);
    CHECK(r.elapsed_s < 2.0);
  }

  TEST_CASE("graceful signal is not sent before term_s, kill not before kill_s") {
    TempDir scratch;
    const fs::path log = scratch / "signals.log";
    const double spawned = now_epoch();
    RunResult r = run_tool(mock_tool("siglog", "./signal-logger " + log.string() + " $FILE"),
                           trivial_problem(), TimeoutPolicy{1, 2, 3},
                           mock_engine(scratch / "work"));
    CHECK(r.terminated_by == Termination::KillSignal);
    CHECK(r.answer == Answer::Timeout);
    CHECK_FALSE(r.exit_code.has_value());
    CHECK(r.elapsed_s >= 3.0);
    CHECK(r.elapsed_s <= 3.0 + 2.0);

    std::istringstream lines(read_file(log));
    std::string what;
    double t = 0, started = 0;
    std::vector<double> terms;
    while (lines >> what >> t) {
      if (what == "start") started = t;
      if (what == "TERM") terms.push_back(t);
    }
    REQUIRE(started > 0);
    REQUIRE(terms.size() == 1);
    // The mock starts after spawn, so measuring from `spawned` is conservative.
    CHECK(terms[0] - spawned >= 2.0);
    CHECK(terms[0] - spawned < 3.0);
  }

  TEST_CASE("sleeper that dies on SIGTERM") {
    TempDir scratch;
    RunResult r = run_tool(mock_tool("sleeper", "./sleeper-exit-on-term $FILE"),
                           trivial_problem(), TimeoutPolicy{1, 2, 3}, mock_engine(scratch.path()));
    CHECK(r.terminated_by == Termination::TermSignal);
    CHECK(r.answer == Answer::Timeout);
    CHECK(r.elapsed_s >= 2.0);
    CHECK(r.elapsed_s < 3.0);
    CHECK(r.output.starts_with("sleeping\n"));
    CHECK(has_single_trailing_timing_line(r.output));
    CHECK(scratch_leftovers(scratch.path()).empty());
  }
}

TEST_SUITE("run_selection") {
  TEST_CASE("results in order, streamed, intervals disjoint") {
    TempDir scratch;
    const fs::path log = scratch / "stamps.log";
    const std::string logger = "./timestamp-logger " + log.string() + " 0.3 $FILE";
    std::vector<ToolSpec> specs{mock_tool("a", logger), mock_tool("yes", "./echo-yes $FILE"),
                                mock_tool("b", logger), mock_tool("no", "./echo-no $FILE")};
    std::vector<std::size_t> streamed;
    auto results = run_selection(specs, trivial_problem(), TimeoutPolicy{},
                                 mock_engine(scratch / "work"),
                                 [&](std::size_t i, const RunResult& r) {
                                   streamed.push_back(i);
                                   CHECK(r.tool_id == specs[i].id);
                                 });
    CHECK(streamed == std::vector<std::size_t>{0, 1, 2, 3});
    REQUIRE(results.size() == 4);
    CHECK(results[1].answer == Answer::Yes);
    CHECK(results[3].answer == Answer::No);
    auto intervals = read_intervals(log);
    CHECK(intervals.size() == 2);
    CHECK(pairwise_disjoint(intervals));
    CHECK(scratch_leftovers(scratch / "work").empty());
  }

  TEST_CASE("empty selection is rejected") {
    TempDir scratch;
    CHECK_THROWS_AS(run_selection({}, trivial_problem(), TimeoutPolicy{},
                                  mock_engine(scratch.path())),
                    std::invalid_argument);
  }

  TEST_CASE("errors stay inside their result") {
    TempDir scratch;
    auto results = run_selection({mock_tool("ghost", "./nope $FILE"),
                                  mock_tool("yes", "./echo-yes $FILE")},
                                 trivial_problem(), TimeoutPolicy{}, mock_engine(scratch.path()));
    REQUIRE(results.size() == 2);
    CHECK(results[0].answer == Answer::Error);
    CHECK(results[1].answer == Answer::Yes);
  }

  TEST_CASE("separate engines sharing a scratch dir never overlap") {
    TempDir scratch;
    const fs::path log = scratch / "stamps.log";
    const std::string logger = "./timestamp-logger " + log.string() + " 0.3 $FILE";
    auto work = [&] {
      run_selection({mock_tool("a", logger), mock_tool("b", logger)}, trivial_problem(),
                    TimeoutPolicy{}, mock_engine(scratch / "work"));
    };
    std::thread t1(work), t2(work);
    t1.join();
    t2.join();
    auto intervals = read_intervals(log);
    CHECK(intervals.size() == 4);
    CHECK(pairwise_disjoint(intervals));
  }
}

TEST_SUITE("work queue") {
  TEST_CASE("jobs run one at a time in submission order") {
    std::vector<int> order;
    std::atomic<int> running{0};
    std::atomic<int> max_running{0};
    {
      WorkQueue q;
      for (int i = 0; i < 20; ++i) {
        q.submit([&, i] {
          int now = ++running;
          max_running = std::max(max_running.load(), now);
          std::this_thread::sleep_for(std::chrono::milliseconds(2));
          order.push_back(i);
          --running;
        });
      }
      q.drain();
      CHECK(q.pending() == 0);
    }
    CHECK(max_running == 1);
    std::vector<int> expected(20);
    for (int i = 0; i < 20; ++i) expected[i] = i;
    CHECK(order == expected);
  }

  TEST_CASE("a throwing job does not stop the worker") {
    WorkQueue q;
    bool ran = false;
    q.submit([] { throw std::runtime_error("boom"); });
    q.submit([&] { ran = true; });
    q.drain();
    CHECK(ran);
  }
}
