#include "finsler_flow/parallel.hpp"
#include "finsler_flow/run.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace finsler_flow;
namespace fs = std::filesystem;

namespace {

const char* kMetzler = R"js({
    "system": {"builtin": "metzler_linear"},
    "tasks": [{"type": "structure", "samples": 32},
              {"id": "attractor", "type": "classify_level", "level": 1, "samples": 6},
              {"type": "finsler", "x0": [1, 0], "t_final": 3},
              {"type": "ordered_equilibria", "levels": [0, 1, 2]}]})js";

class TempDir {
public:
    TempDir()
    {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("finsler_flow_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }

    fs::path write(const std::string& name, const std::string& text) const
    {
        const fs::path p = path_ / name;
        std::ofstream(p) << text;
        return p;
    }

private:
    fs::path path_;
};

RunReport without_timing(RunReport r)
{
    for (auto& t : r.tasks)
        t.wall_time_s = 0.0;
    return r;
}

class ScopedEnv {
public:
    ScopedEnv(const char* name, const char* value)
        : name_(name)
    {
        if (const char* old = std::getenv(name))
            old_ = old;
        if (value)
            ::setenv(name, value, 1);
        else
            ::unsetenv(name);
    }
    ~ScopedEnv()
    {
        if (old_.empty())
            ::unsetenv(name_);
        else
            ::setenv(name_, old_.c_str(), 1);
    }

private:
    const char* name_;
    std::string old_;
};

} // namespace

TEST(Config, ParsesTasksAndDefaults)
{
    const RunConfig cfg = parse_config(kMetzler);
    ASSERT_EQ(cfg.tasks.size(), 4u);
    EXPECT_EQ(cfg.tasks[0].id, "structure_0");
    EXPECT_EQ(cfg.tasks[1].id, "attractor");
    EXPECT_EQ(cfg.output.directory, ".");
    EXPECT_TRUE(cfg.output.write_json);
    EXPECT_FALSE(cfg.output.write_csv);
    EXPECT_FALSE(cfg.parallel);
    EXPECT_EQ(cfg.system.name(), "metzler_linear");
    EXPECT_EQ(task_types().size(), 8u);
}

TEST(Config, IntegratorOverrides)
{
    const RunConfig cfg = parse_config(R"js({"system": {"builtin": "metzler_linear"}, "integrator": {"rtol": 1e-6},
        "tasks": [{"type": "simulate", "x0": [1, 0], "t_final": 1, "integrator": {"atol": 1e-8}}]})js");
    EXPECT_EQ(cfg.tasks[0].integrator.rtol, 1e-6);
    EXPECT_EQ(cfg.tasks[0].integrator.atol, 1e-8);
    EXPECT_THROW(integrator_from_json(json{{"rtol", -1.0}}), SpecError);
    EXPECT_THROW(integrator_from_json(json{{"order", 5}}), SpecError);
}

TEST(Config, MalformedJsonReportsPosition)
{
    try {
        parse_config("{\n  \"system\": {\"builtin\": \"metzler_linear\"},\n  \"tasks\": [,]\n}");
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3);
        EXPECT_GT(e.column(), 0);
    }
}

TEST(Config, RejectsInvalidDocuments)
{
    const char* bad[] = {
        R"js([])js",
        R"js({"tasks": []})js",
        R"js({"system": {"builtin": "lotka_volterra"}})js",
        R"js({"system": {"builtin": "cyclic_compartment", "params": {"n": 1}}})js",
        R"js({"system": {"builtin": "metzler_linear"}, "extra": 1})js",
        R"js({"system": {"builtin": "metzler_linear"}, "tasks": [{"type": "bogus"}]})js",
        R"js({"system": {"builtin": "metzler_linear"}, "tasks": [{"type": "structure", "colour": 1}]})js",
        R"js({"system": {"builtin": "metzler_linear"}, "tasks": [{"type": "simulate", "x0": [1], "t_final": 1}]})js",
        R"js({"system": {"builtin": "metzler_linear"}, "tasks": [{"type": "simulate", "x0": [1, 0]}]})js",
        R"js({"system": {"builtin": "metzler_linear"}, "tasks": [{"type": "contraction", "x0": [1, 0], "v": [1, 0], "t_final": 1}]})js",
        R"js({"system": {"builtin": "metzler_linear"}, "tasks": [{"type": "ordered_equilibria", "levels": [1]}]})js",
        R"js({"system": {"builtin": "metzler_linear"}, "tasks": [{"type": "order_path", "y": [1, -1], "z": [1, -1]}]})js",
        R"js({"system": {"builtin": "metzler_linear"}, "tasks": [{"type": "classify_level", "level": 1, "expect": "maybe"}]})js",
        R"js({"system": {"builtin": "metzler_linear"}, "tasks": [{"id": "a", "type": "structure"}, {"id": "a", "type": "structure"}]})js",
        R"js({"system": {"builtin": "metzler_linear"}, "tasks": [{"type": "structure", "seed": -1}]})js",
        R"js({"system": {"builtin": "metzler_linear"}, "output": {"formats": ["xml"]}})js",
        R"js({"system": {"builtin": "metzler_linear"}, "parallel": "yes"})js",
    };
    for (const char* text : bad)
        EXPECT_THROW(parse_config(text), std::exception) << text;
}

TEST(Execute, MetzlerHolds)
{
    const RunReport r = execute(parse_config(kMetzler));
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_EQ(r.schema_version, kSchemaVersion);
    EXPECT_EQ(r.system.at("name"), "metzler_linear");
    ASSERT_EQ(r.tasks.size(), 4u);
    EXPECT_EQ(r.tasks[1].verdict, "unique_attractor");
    const Vector eq = vector_from_json(r.tasks[1].result.at("equilibrium").at("coords"));
    EXPECT_NEAR(eq[0], 0.5, 1e-9);
    EXPECT_NEAR(eq[1], 0.5, 1e-9);
    EXPECT_EQ(r.tasks[2].verdict, "holds");
    EXPECT_EQ(r.tasks[3].verdict, "holds");
}

TEST(Execute, ExpectedOutcomeControlsExitCode)
{
    const RunReport wrong = execute(parse_config(R"js({"system": {"builtin": "metzler_linear"},
        "tasks": [{"type": "classify_level", "level": 1, "samples": 4, "expect": "no_equilibrium"}]})js"));
    EXPECT_FALSE(wrong.tasks[0].passed);
    EXPECT_EQ(wrong.exit_code, 2);
    const RunReport driftless = execute(parse_config(R"js({"system": {"builtin": "driftless_exchange"},
        "tasks": [{"type": "classify_level", "level": 0, "samples": 4, "expect": "no_equilibrium"}]})js"));
    EXPECT_EQ(driftless.tasks[0].verdict, "no_equilibrium");
    EXPECT_EQ(driftless.exit_code, 0);
}

TEST(Execute, DeterministicAndOrderIndependent)
{
    RunConfig cfg = parse_config(kMetzler);
    const RunReport a = without_timing(execute(cfg));
    const RunReport b = without_timing(execute(cfg));
    EXPECT_EQ(serialize(a), serialize(b));
    cfg.parallel = true;
    ScopedEnv env("FINSLER_FLOW_THREADS", "3");
    const RunReport c = without_timing(execute(cfg));
    EXPECT_EQ(a.tasks, c.tasks);
}

TEST(Parallel, WorkerCountHonoursEnvironment)
{
    {
        ScopedEnv env("FINSLER_FLOW_THREADS", "3");
        EXPECT_EQ(worker_count(), 3u);
    }
    {
        ScopedEnv env("FINSLER_FLOW_THREADS", "0");
        EXPECT_GE(worker_count(), 1u);
    }
    {
        ScopedEnv env("FINSLER_FLOW_THREADS", "many");
        EXPECT_GE(worker_count(), 1u);
    }
}

TEST(Parallel, VisitsEveryIndexOnceAndRethrows)
{
    ScopedEnv env("FINSLER_FLOW_THREADS", "4");
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits)
        EXPECT_EQ(h.load(), 1);
    EXPECT_THROW(parallel_for(50,
                              [](std::size_t i) {
                                  if (i == 17)
                                      throw std::runtime_error("boom");
                              }),
                 std::runtime_error);
    parallel_for(0, [](std::size_t) { FAIL(); });
}

TEST(Command, RunWritesReportAndCsv)
{
    TempDir dir;
    const std::string out_dir = (dir.path() / "out").string();
    json doc = json::parse(kMetzler);
    doc["output"] = {{"directory", out_dir}, {"formats", {"json", "csv"}}};
    const auto cfg = dir.write("metzler.json", doc.dump());
    std::ostringstream out, err;
    EXPECT_EQ(run_command(cfg.string(), out, err), 0) << err.str();
    EXPECT_TRUE(err.str().empty());
    std::ifstream in(fs::path(out_dir) / "report.json");
    std::stringstream text;
    text << in.rdbuf();
    const RunReport r = parse_report(text.str());
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_EQ(r.config, doc);
    EXPECT_TRUE(fs::exists(fs::path(out_dir) / "finsler_2.csv"));
    EXPECT_FALSE(fs::exists(fs::path(out_dir) / "structure_0.csv"));
}

TEST(Command, ExitCodes)
{
    TempDir dir;
    const std::string out_dir = (dir.path() / "out").string();
    std::ostringstream out, err;

    const auto unknown = dir.write("unknown.json", R"js({"system": {"builtin": "lotka_volterra"}})js");
    EXPECT_EQ(run_command(unknown.string(), out, err), 1);
    EXPECT_NE(err.str().find("lotka_volterra"), std::string::npos);

    err.str("");
    const auto malformed = dir.write("malformed.json", "{\n\"system\": }");
    EXPECT_EQ(run_command(malformed.string(), out, err), 1);
    EXPECT_NE(err.str().find("line 2"), std::string::npos) << err.str();

    err.str("");
    EXPECT_EQ(run_command((dir.path() / "missing.json").string(), out, err), 1);

    json fails = {{"system", {{"builtin", "metzler_linear"}}},
                  {"tasks", {{{"type", "classify_level"}, {"level", 1}, {"samples", 4}, {"expect", "no_equilibrium"}}}},
                  {"output", {{"directory", out_dir}}}};
    EXPECT_EQ(run_command(dir.write("fails.json", fails.dump()).string(), out, err), 2);

    // Execution errors (no equilibrium on a level) exit 1.
    json error = {{"system", {{"builtin", "driftless_exchange"}}},
                  {"tasks", {{{"type", "ordered_equilibria"}, {"levels", {0, 1}}, {"multistarts", 2}}}},
                  {"output", {{"directory", out_dir}}}};
    err.str("");
    EXPECT_EQ(run_command(dir.write("error.json", error.dump()).string(), out, err), 1);
    EXPECT_FALSE(err.str().empty());
}

TEST(Command, CheckPrintsStructure)
{
    TempDir dir;
    std::ostringstream out, err;
    const auto cfg = dir.write("c.json", R"js({"system": {"builtin": "cyclic_compartment", "params": {"n": 3}}})js");
    EXPECT_EQ(check_command(cfg.string(), out, err), 0) << err.str();
    const json j = json::parse(out.str());
    EXPECT_EQ(j.at("verdict"), "holds");

    std::ostringstream out2;
    const auto reducible = dir.write("r.json", R"js({"system": {"dim": 4,
        "field": ["x2 - x1", "x1 - x2", "x4 - x3", "x3 - x4"], "integral": "x1 + x2 + x3 + x4"}})js");
    EXPECT_EQ(check_command(reducible.string(), out2, err), 2);
    EXPECT_EQ(json::parse(out2.str()).at("verdict"), "fails");
}
