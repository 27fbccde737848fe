#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>

#include "chtbench/io.hpp"

namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int code = -1;
    std::string output;
};

CmdResult run_cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " + std::string(CHTBENCH_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    CmdResult r;
    if (!pipe) return r;
    char buf[4096];
    while (std::size_t n = std::fread(buf, 1, sizeof(buf), pipe)) r.output.append(buf, n);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("chtbench_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text) n += c == '\n';
    return n;
}

} // namespace

TEST(Cli, RunHappyPathWritesResultsAndAggregate) {
    const fs::path dir = fresh_dir("run");
    const auto r = run_cli("run --problem g24 --cht qpc --runs 3 --max-fes 2000 --seed 42 --out " +
                           dir.string());
    ASSERT_EQ(r.code, 0) << r.output;
    ASSERT_TRUE(fs::exists(dir / "results.csv"));
    ASSERT_TRUE(fs::exists(dir / "aggregate.json"));
    const std::string csv = chtbench::read_file(dir / "results.csv");
    EXPECT_EQ(count_lines(csv), 4); // header + one row per run
    EXPECT_NE(csv.find("g24,qpc,0,42,"), std::string::npos);
    EXPECT_NE(r.output.find("\"fr\""), std::string::npos);
    fs::remove_all(dir);
}

TEST(Cli, UnknownProblemIsConfigError) {
    EXPECT_EQ(run_cli("run --problem nosuch --runs 1 --max-fes 200").code, 2);
}

TEST(Cli, UnknownSubcommandRejectedBeforeWork) {
    EXPECT_EQ(run_cli("frobnicate").code, 2);
    EXPECT_EQ(run_cli("").code, 2); // a subcommand is required
}

TEST(Cli, MalformedConfigGivesDiagnosticAndExit2) {
    const fs::path dir = fresh_dir("badconfig");
    {
        std::ofstream out(dir / "bad.json");
        out << "{ \"problem\": \"g24\", \"runs\": }";
    }
    const auto r = run_cli("run --config " + (dir / "bad.json").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("config error"), std::string::npos);

    {
        std::ofstream out(dir / "unknown_key.json");
        out << "{ \"problem\": \"g24\", \"runz\": 3 }";
    }
    const auto r2 = run_cli("run --config " + (dir / "unknown_key.json").string());
    EXPECT_EQ(r2.code, 2);
    EXPECT_NE(r2.output.find("runz"), std::string::npos);
    fs::remove_all(dir);
}

TEST(Cli, FlagsOverrideConfigFile) {
    const fs::path dir = fresh_dir("override");
    {
        std::ofstream out(dir / "cfg.json");
        out << R"({ "problem": "g24", "runs": 2, "seed": 7,
                    "cht": { "cht": "frules" },
                    "de": { "np": 10, "max_fes": 500 } })";
    }
    const auto r = run_cli("run --config " + (dir / "cfg.json").string() + " --runs 4 --out " +
                           dir.string());
    ASSERT_EQ(r.code, 0) << r.output;
    const std::string csv = chtbench::read_file(dir / "results.csv");
    EXPECT_EQ(count_lines(csv), 5); // flag value 4 wins over config value 2
    EXPECT_NE(csv.find("g24,frules,"), std::string::npos);
    fs::remove_all(dir);
}

TEST(Cli, EnvVarFallbackForOutputDir) {
    const fs::path dir = fresh_dir("envout");
    const auto r = run_cli("run --problem ring2 --runs 1 --max-fes 400 --np 8 --seed 1",
                           "CHTBENCH_OUT=" + dir.string());
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_TRUE(fs::exists(dir / "results.csv"));
    fs::remove_all(dir);
}

TEST(Cli, VerifySmallCleanRun) {
    const auto r = run_cli("verify --pairs 500");
    EXPECT_EQ(r.code, 0) << r.output;
    EXPECT_NE(r.output.find("mismatches: 0"), std::string::npos);
}

TEST(Cli, RelaxSmallRun) {
    const auto r = run_cli("relax --points 5000 --c 2 --xi 1");
    EXPECT_EQ(r.code, 0) << r.output;
    EXPECT_NE(r.output.find("mu: 0.0625"), std::string::npos);
}

TEST(Cli, SortbenchWritesCsv) {
    const fs::path dir = fresh_dir("sortbench");
    const auto r = run_cli("sortbench --repeats 1 --out " + dir.string());
    ASSERT_EQ(r.code, 0) << r.output;
    const std::string csv = chtbench::read_file(dir / "sortbench.csv");
    EXPECT_EQ(count_lines(csv), 21); // header + 20 sizes
    EXPECT_NE(csv.find("size,eval_sort_time,pairwise_sort_time,eval_calls,compare_calls"),
              std::string::npos);
    fs::remove_all(dir);
}

TEST(Cli, SweepWritesOneTracePerXi) {
    const fs::path dir = fresh_dir("sweep");
    const auto r = run_cli("sweep --problem g24 --np 10 --max-fes 300 --seed 2 --out " +
                           dir.string());
    ASSERT_EQ(r.code, 0) << r.output;
    int traces = 0;
    for (const auto& entry : fs::directory_iterator(dir))
        traces += entry.path().filename().string().rfind("sweep_g24_xi", 0) == 0;
    EXPECT_EQ(traces, 6); // the default xi grid
    fs::remove_all(dir);
}

TEST(Cli, ListShowsRegistry) {
    const auto r = run_cli("list");
    EXPECT_EQ(r.code, 0);
    for (const char* name : {"g06", "g08", "g11", "g12", "g24", "ring5", "eqline"})
        EXPECT_NE(r.output.find(name), std::string::npos) << name;
}

TEST(Cli, RepeatInvocationsAreByteIdentical) {
    const fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b");
    const std::string flags = "run --problem ring2 --runs 4 --max-fes 1000 --np 10 --seed 5";
    ASSERT_EQ(run_cli(flags + " --out " + a.string()).code, 0);
    ASSERT_EQ(run_cli(flags + " --out " + b.string()).code, 0);
    EXPECT_EQ(chtbench::read_file(a / "results.csv"), chtbench::read_file(b / "results.csv"));
    EXPECT_EQ(chtbench::read_file(a / "aggregate.json"),
              chtbench::read_file(b / "aggregate.json"));
    fs::remove_all(a);
    fs::remove_all(b);
}
