#include "finsler_flow/report.hpp"

#include "finsler_flow/csv.hpp"
#include "finsler_flow/schema_text.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace finsler_flow {

const char* artifact_version() { return FINSLER_FLOW_VERSION; }

const char* report_schema() { return generated::kReportSchema; }

json number_json(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return v;
}

double number_from_json(const json& j)
{
    if (j.is_number())
        return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf")
            return std::numeric_limits<double>::infinity();
        if (s == "-inf")
            return -std::numeric_limits<double>::infinity();
        if (s == "nan")
            return std::numeric_limits<double>::quiet_NaN();
    }
    throw std::invalid_argument("expected a number, got " + j.dump());
}

json vector_json(const Vector& v)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out.push_back(number_json(v[i]));
    return out;
}

Vector vector_from_json(const json& j)
{
    if (!j.is_array())
        throw std::invalid_argument("expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = number_from_json(j[i]);
    return v;
}

namespace {

json numbers_json(const std::vector<double>& v)
{
    json out = json::array();
    for (double x : v)
        out.push_back(number_json(x));
    return out;
}

std::vector<double> numbers_from_json(const json& j)
{
    std::vector<double> out;
    for (const auto& x : j)
        out.push_back(number_from_json(x));
    return out;
}

json vectors_json(const std::vector<Vector>& v)
{
    json out = json::array();
    for (const auto& x : v)
        out.push_back(vector_json(x));
    return out;
}

std::vector<Vector> vectors_from_json(const json& j)
{
    std::vector<Vector> out;
    for (const auto& x : j)
        out.push_back(vector_from_json(x));
    return out;
}

json matrix_json(const Matrix& m)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        out.push_back(vector_json(m.row(i).transpose()));
    return out;
}

Matrix matrix_from_json(const json& j)
{
    const auto rows = vectors_from_json(j);
    if (rows.empty())
        return {};
    Matrix m(static_cast<Eigen::Index>(rows.size()), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    return m;
}

Verdict overall(const StructureReport& r)
{
    if (r.any_fails())
        return Verdict::Fails;
    return r.all_hold() ? Verdict::Holds : Verdict::Inconclusive;
}

} // namespace

json to_json(const StructureReport& r)
{
    const auto& c = r.cooperative;
    const auto& i = r.irreducible;
    const auto& g = r.positive_gradient;
    const auto& f = r.first_integral;
    return {
        {"verdict", to_string(overall(r))},
        {"cooperative",
         {{"verdict", to_string(c.verdict)},
          {"worst_off_diagonal", number_json(c.worst_off_diagonal)},
          {"min_positive_off_diagonal", number_json(c.min_positive_off_diagonal)},
          {"witness", vector_json(c.witness)},
          {"row", c.row},
          {"col", c.col},
          {"samples", c.samples}}},
        {"irreducible",
         {{"verdict", to_string(i.verdict)},
          {"witness", vector_json(i.witness)},
          {"component", i.component},
          {"complement", i.complement},
          {"samples", i.samples}}},
        {"positive_gradient",
         {{"verdict", to_string(g.verdict)},
          {"min_coordinate", number_json(g.min_coordinate)},
          {"max_coordinate", number_json(g.max_coordinate)},
          {"witness", vector_json(g.witness)},
          {"witness_index", g.witness_index},
          {"samples", g.samples}}},
        {"first_integral",
         {{"verdict", to_string(f.verdict)},
          {"worst_ratio", number_json(f.worst_ratio)},
          {"witness", vector_json(f.witness)},
          {"samples", f.samples}}},
        {"gradient_lower", number_json(r.gradient_lower)},
        {"gradient_upper", number_json(r.gradient_upper)},
        {"samples_used", r.samples_used},
    };
}

StructureReport structure_from_json(const json& j)
{
    StructureReport r;
    const auto& c = j.at("cooperative");
    r.cooperative.verdict = verdict_from_string(c.at("verdict").get<std::string>());
    r.cooperative.worst_off_diagonal = number_from_json(c.at("worst_off_diagonal"));
    r.cooperative.min_positive_off_diagonal = number_from_json(c.at("min_positive_off_diagonal"));
    r.cooperative.witness = vector_from_json(c.at("witness"));
    r.cooperative.row = c.at("row").get<int>();
    r.cooperative.col = c.at("col").get<int>();
    r.cooperative.samples = c.at("samples").get<int>();
    const auto& i = j.at("irreducible");
    r.irreducible.verdict = verdict_from_string(i.at("verdict").get<std::string>());
    r.irreducible.witness = vector_from_json(i.at("witness"));
    r.irreducible.component = i.at("component").get<std::vector<int>>();
    r.irreducible.complement = i.at("complement").get<std::vector<int>>();
    r.irreducible.samples = i.at("samples").get<int>();
    const auto& g = j.at("positive_gradient");
    r.positive_gradient.verdict = verdict_from_string(g.at("verdict").get<std::string>());
    r.positive_gradient.min_coordinate = number_from_json(g.at("min_coordinate"));
    r.positive_gradient.max_coordinate = number_from_json(g.at("max_coordinate"));
    r.positive_gradient.witness = vector_from_json(g.at("witness"));
    r.positive_gradient.witness_index = g.at("witness_index").get<int>();
    r.positive_gradient.samples = g.at("samples").get<int>();
    const auto& f = j.at("first_integral");
    r.first_integral.verdict = verdict_from_string(f.at("verdict").get<std::string>());
    r.first_integral.worst_ratio = number_from_json(f.at("worst_ratio"));
    r.first_integral.witness = vector_from_json(f.at("witness"));
    r.first_integral.samples = f.at("samples").get<int>();
    r.gradient_lower = number_from_json(j.at("gradient_lower"));
    r.gradient_upper = number_from_json(j.at("gradient_upper"));
    r.samples_used = j.at("samples_used").get<int>();
    return r;
}

FlowStatus flow_status_from_string(const std::string& s)
{
    for (auto st : {FlowStatus::Complete, FlowStatus::ForwardBlowup, FlowStatus::BackwardBlowup, FlowStatus::LeftDomain,
                    FlowStatus::StepLimit})
        if (s == to_string(st))
            return st;
    throw std::invalid_argument("unknown flow status: " + s);
}

json to_json(const FinslerReport& r)
{
    json states = json::array();
    for (const auto& s : r.states)
        states.push_back(numbers_json(s));
    return {
        {"kind", r.kind},
        {"times", numbers_json(r.times)},
        {"values", numbers_json(r.values)},
        {"log_values", numbers_json(r.log_values)},
        {"states", states},
        {"verdict", to_string(r.strict_decrease)},
        {"worst_adjacent_ratio", number_json(r.worst_adjacent_ratio)},
        {"contraction_factor", number_json(r.contraction_factor)},
        {"equilibrium", r.equilibrium},
        {"reprojections", r.reprojections},
        {"max_tangency_residual", number_json(r.max_tangency_residual)},
        {"flow_status", to_string(r.flow_status)},
    };
}

FinslerReport finsler_from_json(const json& j)
{
    FinslerReport r;
    r.kind = j.at("kind").get<std::string>();
    r.times = numbers_from_json(j.at("times"));
    r.values = numbers_from_json(j.at("values"));
    r.log_values = numbers_from_json(j.at("log_values"));
    for (const auto& s : j.at("states"))
        r.states.push_back(numbers_from_json(s));
    r.strict_decrease = verdict_from_string(j.at("verdict").get<std::string>());
    r.worst_adjacent_ratio = number_from_json(j.at("worst_adjacent_ratio"));
    r.contraction_factor = number_from_json(j.at("contraction_factor"));
    r.equilibrium = j.at("equilibrium").get<bool>();
    r.reprojections = j.at("reprojections").get<int>();
    r.max_tangency_residual = number_from_json(j.at("max_tangency_residual"));
    r.flow_status = flow_status_from_string(j.at("flow_status").get<std::string>());
    return r;
}

json to_json(const LevelPath& p)
{
    return {
        {"level", number_json(p.level)},
        {"nodes", vectors_json(p.nodes)},
        {"lambdas", numbers_json(p.lambdas)},
        {"lengths", numbers_json(p.lengths)},
        {"max_residual", number_json(p.max_residual)},
    };
}

LevelPath path_from_json(const json& j)
{
    LevelPath p;
    p.level = number_from_json(j.at("level"));
    p.nodes = vectors_from_json(j.at("nodes"));
    p.lambdas = numbers_from_json(j.at("lambdas"));
    p.lengths = numbers_from_json(j.at("lengths"));
    p.max_residual = number_from_json(j.at("max_residual"));
    return p;
}

namespace {

json to_json(const SampleEvidence& e)
{
    return {
        {"start", vector_json(e.start)},
        {"end", vector_json(e.end)},
        {"log10_end_time", number_json(e.log10_end_time)},
        {"distance_to_equilibrium", number_json(e.distance_to_equilibrium)},
        {"log10_field_norm", number_json(e.log10_field_norm)},
        {"status", to_string(e.status)},
        {"converged", e.converged},
        {"escaped", e.escaped},
        {"finite_time_escape", e.finite_time_escape},
        {"lyapunov_decreasing", e.lyapunov_decreasing},
    };
}

SampleEvidence evidence_from_json(const json& j)
{
    SampleEvidence e;
    e.start = vector_from_json(j.at("start"));
    e.end = vector_from_json(j.at("end"));
    e.log10_end_time = number_from_json(j.at("log10_end_time"));
    e.distance_to_equilibrium = number_from_json(j.at("distance_to_equilibrium"));
    e.log10_field_norm = number_from_json(j.at("log10_field_norm"));
    e.status = flow_status_from_string(j.at("status").get<std::string>());
    e.converged = j.at("converged").get<bool>();
    e.escaped = j.at("escaped").get<bool>();
    e.finite_time_escape = j.at("finite_time_escape").get<bool>();
    e.lyapunov_decreasing = j.at("lyapunov_decreasing").get<bool>();
    return e;
}

} // namespace

json to_json(const LevelSetAnalysis& a)
{
    json samples = json::array();
    for (const auto& s : a.samples)
        samples.push_back(to_json(s));
    json eq = nullptr;
    if (a.equilibrium)
        eq = {{"coords", vector_json(a.equilibrium->coords)}, {"level", number_json(a.equilibrium->level)}};
    return {
        {"level", number_json(a.level)},
        {"verdict", to_string(a.verdict)},
        {"equilibrium", eq},
        {"multistart_count", a.multistart_count},
        {"multistart_converged", a.multistart_converged},
        {"multistart_spread", number_json(a.multistart_spread)},
        {"samples", samples},
        {"horizon", number_json(a.horizon)},
        {"reason", a.reason},
    };
}

LevelSetAnalysis analysis_from_json(const json& j)
{
    LevelSetAnalysis a;
    a.level = number_from_json(j.at("level"));
    a.verdict = level_verdict_from_string(j.at("verdict").get<std::string>());
    if (!j.at("equilibrium").is_null())
        a.equilibrium = Point{vector_from_json(j.at("equilibrium").at("coords")),
                              number_from_json(j.at("equilibrium").at("level"))};
    a.multistart_count = j.at("multistart_count").get<int>();
    a.multistart_converged = j.at("multistart_converged").get<int>();
    a.multistart_spread = number_from_json(j.at("multistart_spread"));
    for (const auto& s : j.at("samples"))
        a.samples.push_back(evidence_from_json(s));
    a.horizon = number_from_json(j.at("horizon"));
    a.reason = j.at("reason").get<std::string>();
    return a;
}

json to_json(const DistanceEstimate& d)
{
    return {{"upper", number_json(d.upper)}, {"history", numbers_json(d.history)}, {"path", to_json(d.path)}};
}

DistanceEstimate distance_from_json(const json& j)
{
    DistanceEstimate d;
    d.upper = number_from_json(j.at("upper"));
    d.history = numbers_from_json(j.at("history"));
    d.path = path_from_json(j.at("path"));
    return d;
}

json to_json(const OrderedEquilibria& o)
{
    return {
        {"verdict", to_string(o.verdict)},
        {"levels", numbers_json(o.levels)},
        {"equilibria", vectors_json(o.equilibria)},
        {"min_margin", number_json(o.min_margin)},
    };
}

OrderedEquilibria ordered_from_json(const json& j)
{
    OrderedEquilibria o;
    o.verdict = verdict_from_string(j.at("verdict").get<std::string>());
    o.levels = numbers_from_json(j.at("levels"));
    o.equilibria = vectors_from_json(j.at("equilibria"));
    o.min_margin = number_from_json(j.at("min_margin"));
    return o;
}

TrajectorySamples sample_trajectory(const SystemSpec& sys, const Trajectory<double>& traj, int samples)
{
    if (samples < 2)
        throw SpecError("trajectory sampling needs at least two samples");
    TrajectorySamples out;
    out.status = traj.status();
    out.status_time = traj.status_time();
    out.integral_drift = integral_drift(sys, traj);
    out.accepted_steps = static_cast<long>(traj.size()) - 1;
    out.rejected_steps = traj.solution().rejected_steps;
    const double a = traj.t_begin();
    const double b = traj.t_end();
    for (int k = 0; k < samples; ++k) {
        double t = a + (b - a) * static_cast<double>(k) / static_cast<double>(samples - 1);
        if (k == samples - 1)
            t = b;
        out.times.push_back(t);
        out.states.push_back(traj.state_at(t));
        if (traj.has_fundamentals())
            out.fundamentals.push_back(traj.fundamental_at(t));
    }
    return out;
}

json to_json(const TrajectorySamples& t)
{
    json out = {
        {"status", to_string(t.status)},
        {"status_time", number_json(t.status_time)},
        {"integral_drift", number_json(t.integral_drift)},
        {"accepted_steps", t.accepted_steps},
        {"rejected_steps", t.rejected_steps},
        {"times", numbers_json(t.times)},
        {"states", vectors_json(t.states)},
    };
    if (!t.fundamentals.empty()) {
        json ms = json::array();
        for (const auto& m : t.fundamentals)
            ms.push_back(matrix_json(m));
        out["fundamentals"] = ms;
    }
    return out;
}

TrajectorySamples trajectory_from_json(const json& j)
{
    TrajectorySamples t;
    t.status = flow_status_from_string(j.at("status").get<std::string>());
    t.status_time = number_from_json(j.at("status_time"));
    t.integral_drift = number_from_json(j.at("integral_drift"));
    t.accepted_steps = j.at("accepted_steps").get<long>();
    t.rejected_steps = j.at("rejected_steps").get<long>();
    t.times = numbers_from_json(j.at("times"));
    t.states = vectors_from_json(j.at("states"));
    if (j.contains("fundamentals"))
        for (const auto& m : j.at("fundamentals"))
            t.fundamentals.push_back(matrix_from_json(m));
    return t;
}

json to_json(const RunReport& r)
{
    json tasks = json::array();
    for (const auto& t : r.tasks) {
        json jt = {
            {"id", t.id},
            {"type", t.type},
            {"passed", t.passed},
            {"result", t.result},
            {"wall_time_s", t.wall_time_s},
        };
        if (t.verdict)
            jt["verdict"] = *t.verdict;
        tasks.push_back(std::move(jt));
    }
    return {
        {"artifact_version", r.artifact_version},
        {"schema_version", r.schema_version},
        {"config", r.config},
        {"system", r.system},
        {"tasks", tasks},
        {"exit_code", r.exit_code},
    };
}

RunReport run_report_from_json(const json& j)
{
    RunReport r;
    r.artifact_version = j.at("artifact_version").get<std::string>();
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kSchemaVersion)
        throw std::invalid_argument("unsupported report schema version " + std::to_string(r.schema_version));
    r.config = j.at("config");
    r.system = j.at("system");
    for (const auto& jt : j.at("tasks")) {
        TaskRecord t;
        t.id = jt.at("id").get<std::string>();
        t.type = jt.at("type").get<std::string>();
        if (jt.contains("verdict"))
            t.verdict = jt.at("verdict").get<std::string>();
        t.passed = jt.at("passed").get<bool>();
        t.result = jt.at("result");
        t.wall_time_s = jt.at("wall_time_s").get<double>();
        r.tasks.push_back(std::move(t));
    }
    r.exit_code = j.at("exit_code").get<int>();
    return r;
}

std::string serialize(const RunReport& r) { return to_json(r).dump(2) + "\n"; }

RunReport parse_report(const std::string& text) { return run_report_from_json(json::parse(text)); }

namespace {

std::string state_csv(const std::string& first, const json& params, const json& rows)
{
    const std::vector<double> ts = numbers_from_json(params);
    const auto xs = vectors_from_json(rows);
    const Eigen::Index n = xs.empty() ? 0 : xs.front().size();
    std::vector<std::string> names{first};
    for (Eigen::Index i = 1; i <= n; ++i)
        names.push_back("x" + std::to_string(i));
    std::string out = csv_header(names);
    for (std::size_t k = 0; k < xs.size(); ++k) {
        std::vector<double> row{ts[k]};
        row.insert(row.end(), xs[k].data(), xs[k].data() + n);
        out += csv_row(row);
    }
    return out;
}

} // namespace

std::string plot_csv(const RunReport& report, const std::string& task_id)
{
    const TaskRecord* task = nullptr;
    for (const auto& t : report.tasks)
        if (t.id == task_id)
            task = &t;
    if (!task)
        throw std::out_of_range("no task with id '" + task_id + "'");
    const json& res = task->result;
    if (task->type == "finsler" || task->type == "contraction")
        return finsler_csv(finsler_from_json(res));
    if (task->type == "order_path")
        return path_csv(path_from_json(res));
    if (task->type == "distance")
        return path_csv(path_from_json(res.at("path")));
    if (task->type == "simulate") {
        const auto traj = trajectory_from_json(res);
        if (traj.fundamentals.empty())
            return state_csv("t", res.at("times"), res.at("states"));
        const Eigen::Index n = traj.states.empty() ? 0 : traj.states.front().size();
        std::vector<std::string> names{"t"};
        for (Eigen::Index i = 1; i <= n; ++i)
            names.push_back("x" + std::to_string(i));
        for (Eigen::Index i = 1; i <= n; ++i)
            for (Eigen::Index j = 1; j <= n; ++j)
                names.push_back("m" + std::to_string(i) + (n >= 10 ? "_" : "") + std::to_string(j));
        std::string out = csv_header(names);
        for (std::size_t k = 0; k < traj.times.size(); ++k) {
            std::vector<double> row{traj.times[k]};
            row.insert(row.end(), traj.states[k].data(), traj.states[k].data() + n);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j)
                    row.push_back(traj.fundamentals[k](i, j));
            out += csv_row(row);
        }
        return out;
    }
    throw std::invalid_argument("no plottable payload for task '" + task_id + "' (" + task->type + ")");
}

} // namespace finsler_flow
