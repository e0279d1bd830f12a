#pragma once

#include "finsler_flow/report.hpp"
#include "finsler_flow/systems.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace finsler_flow {

/// Task types accepted in a run configuration.
const std::vector<std::string>& task_types();

struct TaskSpec {
    std::string id;
    std::string type;
    json params; // the task object as written
    IntegratorConfig integrator;
    std::uint64_t seed = 0;
};

struct OutputSpec {
    std::string directory = ".";
    bool write_json = true;
    bool write_csv = false;
};

struct RunConfig {
    json document;
    SystemSpec system;
    std::vector<TaskSpec> tasks;
    OutputSpec output;
    bool parallel = false;
};

/// Parses and validates a configuration document. Every task's parameters
/// are checked against its preconditions here, before anything is
/// integrated. Throws ParseError for malformed JSON and SpecError otherwise.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

IntegratorConfig integrator_from_json(const json& j, const IntegratorConfig& base = {});

/// Runs one validated task.
TaskRecord run_task(const SystemSpec& sys, const TaskSpec& task);

/// Runs every task (concurrently when `parallel` is set) and assembles the report.
RunReport execute(const RunConfig& cfg);

/// Writes `<directory>/<task_id>.csv` and returns its path.
std::string emit_plot_data(const RunReport& report, const std::string& task_id, const std::string& directory);

/// `finsler-flow run`: exit 0 when every verdict-bearing task holds or has
/// its expected outcome, 2 otherwise, 1 on configuration or execution errors.
int run_command(const std::string& config_path, std::ostream& out, std::ostream& err);

/// `finsler-flow check`: structure report only, printed as JSON.
int check_command(const std::string& config_path, std::ostream& out, std::ostream& err);

} // namespace finsler_flow
