#pragma once

#include "finsler_flow/finsler.hpp"
#include "finsler_flow/flow.hpp"
#include "finsler_flow/levelset.hpp"
#include "finsler_flow/structure.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace finsler_flow {

using nlohmann::json;

/// Version of the report layout; bumped on incompatible changes.
inline constexpr int kSchemaVersion = 1;

/// Library version string.
const char* artifact_version();

/// The report JSON schema shipped with the library.
const char* report_schema();

/// Finite doubles as numbers, non-finite ones as "inf", "-inf" or "nan".
json number_json(double v);
double number_from_json(const json& j);

json vector_json(const Vector& v);
Vector vector_from_json(const json& j);

json to_json(const StructureReport& r);
StructureReport structure_from_json(const json& j);

json to_json(const FinslerReport& r);
FinslerReport finsler_from_json(const json& j);

json to_json(const LevelPath& p);
LevelPath path_from_json(const json& j);

json to_json(const LevelSetAnalysis& a);
LevelSetAnalysis analysis_from_json(const json& j);

json to_json(const DistanceEstimate& d);
DistanceEstimate distance_from_json(const json& j);

json to_json(const OrderedEquilibria& o);
OrderedEquilibria ordered_from_json(const json& j);

/// A trajectory resampled on a uniform time grid through dense output.
struct TrajectorySamples {
    FlowStatus status = FlowStatus::Complete;
    double status_time = 0.0;
    double integral_drift = 0.0;
    long accepted_steps = 0;
    long rejected_steps = 0;
    std::vector<double> times;
    std::vector<Vector> states;
    std::vector<Matrix> fundamentals; // empty unless integrated with the variational equation
};

/// `samples` >= 2 equally spaced times over the covered interval.
TrajectorySamples sample_trajectory(const SystemSpec& sys, const Trajectory<double>& traj, int samples);

json to_json(const TrajectorySamples& t);
TrajectorySamples trajectory_from_json(const json& j);

FlowStatus flow_status_from_string(const std::string& s);

struct TaskRecord {
    std::string id;
    std::string type;
    std::optional<std::string> verdict; // absent for tasks without a verdict
    bool passed = true;                 // holds / expected outcome
    json result;
    double wall_time_s = 0.0;

    bool operator==(const TaskRecord&) const = default;
};

struct RunReport {
    std::string artifact_version;
    int schema_version = kSchemaVersion;
    json config;
    json system;
    std::vector<TaskRecord> tasks;
    int exit_code = 0;

    bool operator==(const RunReport&) const = default;
};

json to_json(const RunReport& r);
RunReport run_report_from_json(const json& j);

/// Serialized report: sorted keys, two-space indentation, trailing newline.
std::string serialize(const RunReport& r);
RunReport parse_report(const std::string& text);

/// CSV for a task's plottable payload: `t,value` for finsler and
/// contraction tasks, `t,x1..xn[,m..]` for simulate, `lambda,x1..xn` for
/// order_path and distance. Throws std::invalid_argument("no plottable
/// payload") for other tasks and std::out_of_range for unknown ids.
std::string plot_csv(const RunReport& report, const std::string& task_id);

} // namespace finsler_flow
