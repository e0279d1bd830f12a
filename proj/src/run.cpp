#include "finsler_flow/run.hpp"

#include "finsler_flow/finsler.hpp"
#include "finsler_flow/levelset.hpp"
#include "finsler_flow/parallel.hpp"
#include "finsler_flow/structure.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace finsler_flow {

const std::vector<std::string>& task_types()
{
    static const std::vector<std::string> types{"structure",      "simulate", "finsler",
                                                "contraction",    "classify_level", "distance",
                                                "ordered_equilibria", "order_path"};
    return types;
}

namespace {

const std::map<std::string, std::set<std::string>>& allowed_keys()
{
    static const std::map<std::string, std::set<std::string>> keys{
        {"structure", {"samples", "window"}},
        {"simulate", {"x0", "t_final", "samples", "variational"}},
        {"finsler", {"x0", "t_final", "samples"}},
        {"contraction", {"x0", "v", "t_final", "samples"}},
        {"classify_level", {"level", "samples", "multistarts", "horizon", "window", "expect"}},
        {"distance", {"y", "z", "refine_rounds"}},
        {"ordered_equilibria", {"levels", "multistarts"}},
        {"order_path", {"y", "z", "grid"}},
    };
    return keys;
}

std::string where(const TaskSpec& t) { return "task '" + t.id + "': "; }

Vector point_param(const SystemSpec& sys, const TaskSpec& t, const char* key, bool in_domain = true)
{
    if (!t.params.contains(key))
        throw SpecError(where(t) + "missing '" + key + "'");
    Vector v;
    try {
        v = vector_from_json(t.params.at(key));
    } catch (const std::exception&) {
        throw SpecError(where(t) + "'" + key + "' must be an array of numbers");
    }
    if (v.size() != sys.dim())
        throw SpecError(where(t) + "'" + key + "' has dimension " + std::to_string(v.size()) + ", system has " +
                        std::to_string(sys.dim()));
    if (!v.allFinite())
        throw SpecError(where(t) + "'" + key + "' must be finite");
    if (in_domain && !sys.in_domain(v))
        throw SpecError(where(t) + "'" + key + "' lies outside the domain");
    return v;
}

double number_param(const TaskSpec& t, const char* key, std::optional<double> fallback = std::nullopt)
{
    if (!t.params.contains(key)) {
        if (!fallback)
            throw SpecError(where(t) + "missing '" + key + "'");
        return *fallback;
    }
    const json& j = t.params.at(key);
    if (!j.is_number())
        throw SpecError(where(t) + "'" + key + "' must be a number");
    const double v = j.get<double>();
    if (!std::isfinite(v))
        throw SpecError(where(t) + "'" + key + "' must be finite");
    return v;
}

int int_param(const TaskSpec& t, const char* key, int fallback, int minimum)
{
    if (!t.params.contains(key))
        return fallback;
    const json& j = t.params.at(key);
    if (!j.is_number_integer())
        throw SpecError(where(t) + "'" + key + "' must be an integer");
    const long v = j.get<long>();
    if (v < minimum || v > 1'000'000)
        throw SpecError(where(t) + "'" + key + "' must lie in [" + std::to_string(minimum) + ", 1000000]");
    return static_cast<int>(v);
}

std::optional<SamplingWindow> window_param(const SystemSpec& sys, const TaskSpec& t)
{
    if (!t.params.contains("window"))
        return std::nullopt;
    const json& w = t.params.at("window");
    SamplingWindow win;
    try {
        win.lower = vector_from_json(w.at("lower"));
        win.upper = vector_from_json(w.at("upper"));
    } catch (const std::exception&) {
        throw SpecError(where(t) + "'window' needs numeric arrays 'lower' and 'upper'");
    }
    if (win.lower.size() != sys.dim() || win.upper.size() != sys.dim() ||
        !(win.lower.array() < win.upper.array()).all())
        throw SpecError(where(t) + "'window' must satisfy lower << upper in the system dimension");
    return win;
}

void check_same_level(const SystemSpec& sys, const TaskSpec& t, const Vector& y, const Vector& z, bool allow_equal)
{
    if (!allow_equal && y == z)
        throw SpecError(where(t) + "'y' and 'z' must differ");
    const double r = sys.integral(z);
    if (std::abs(sys.integral(y) - r) > kLevelTol * (1.0 + std::abs(r)))
        throw SpecError(where(t) + "'y' and 'z' lie on different level sets");
    if (!sys.in_domain(join(y, z)) || !sys.in_domain(meet(y, z)))
        throw SpecError(where(t) + "y ∨ z and y ∧ z must lie in the domain");
}

void validate_task(const SystemSpec& sys, const TaskSpec& t)
{
    const auto& keys = allowed_keys().at(t.type);
    for (const auto& [k, v] : t.params.items()) {
        (void)v;
        if (k == "type" || k == "id" || k == "seed" || k == "integrator")
            continue;
        if (!keys.count(k))
            throw SpecError(where(t) + "unknown parameter '" + k + "'");
    }
    if (t.type == "structure") {
        int_param(t, "samples", 256, 1);
        window_param(sys, t);
    } else if (t.type == "simulate" || t.type == "finsler" || t.type == "contraction") {
        const Vector x0 = point_param(sys, t, "x0");
        const double tf = number_param(t, "t_final");
        if (tf == 0.0)
            throw SpecError(where(t) + "'t_final' must be nonzero");
        int_param(t, "samples", t.type == "simulate" ? 101 : 64, 2);
        if (t.type == "simulate" && t.params.contains("variational") && !t.params.at("variational").is_boolean())
            throw SpecError(where(t) + "'variational' must be a boolean");
        if (t.type == "contraction") {
            if (!(tf > 0.0))
                throw SpecError(where(t) + "'t_final' must be positive");
            const Vector v = point_param(sys, t, "v", false);
            if (!(v.norm() > 0.0))
                throw SpecError(where(t) + "'v' must be nonzero");
            if (relative_tangency(sys.integral_gradient(x0), v) > kTangencyTol)
                throw SpecError(where(t) + "'v' is not tangent to the level set through x0");
        }
    } else if (t.type == "classify_level") {
        number_param(t, "level");
        int_param(t, "samples", 16, 1);
        int_param(t, "multistarts", 8, 1);
        if (!(number_param(t, "horizon", 100.0) > 0.0))
            throw SpecError(where(t) + "'horizon' must be positive");
        window_param(sys, t);
        if (t.params.contains("expect")) {
            const json& e = t.params.at("expect");
            if (!e.is_string())
                throw SpecError(where(t) + "'expect' must be a string");
            try {
                level_verdict_from_string(e.get<std::string>());
            } catch (const std::invalid_argument&) {
                throw SpecError(where(t) + "'expect' must be unique_attractor, no_equilibrium or inconclusive");
            }
        }
    } else if (t.type == "distance" || t.type == "order_path") {
        const Vector y = point_param(sys, t, "y");
        const Vector z = point_param(sys, t, "z");
        check_same_level(sys, t, y, z, t.type == "distance");
        if (t.type == "distance")
            int_param(t, "refine_rounds", 5, 0);
        else
            int_param(t, "grid", 33, 2);
    } else if (t.type == "ordered_equilibria") {
        if (!t.params.contains("levels") || !t.params.at("levels").is_array())
            throw SpecError(where(t) + "'levels' must be an array of numbers");
        std::vector<double> levels;
        for (const auto& l : t.params.at("levels")) {
            if (!l.is_number())
                throw SpecError(where(t) + "'levels' must be an array of numbers");
            levels.push_back(l.get<double>());
        }
        if (levels.size() < 2)
            throw SpecError(where(t) + "at least two levels are required");
        std::sort(levels.begin(), levels.end());
        if (std::adjacent_find(levels.begin(), levels.end()) != levels.end())
            throw SpecError(where(t) + "levels must be distinct");
        int_param(t, "multistarts", 8, 1);
    }
}

std::pair<int, int> line_column(const std::string& text, std::size_t offset)
{
    int line = 1;
    int column = 1;
    for (std::size_t i = 0; i < std::min(offset, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            column = 1;
        } else {
            ++column;
        }
    }
    return {line, column};
}

json system_summary(const SystemSpec& sys)
{
    json domain = {{"kind", sys.domain().kind_name()}};
    if (sys.domain().kind == DomainSpec::Kind::OpenBox) {
        domain["lower"] = vector_json(sys.domain().lower);
        domain["upper"] = vector_json(sys.domain().upper);
    }
    return {{"name", sys.name()}, {"dim", sys.dim()}, {"domain", domain}};
}

} // namespace

IntegratorConfig integrator_from_json(const json& j, const IntegratorConfig& base)
{
    if (j.is_null())
        return base;
    if (!j.is_object())
        throw SpecError("'integrator' must be an object");
    IntegratorConfig cfg = base;
    for (const auto& [k, v] : j.items()) {
        if (k == "max_steps") {
            if (!v.is_number_integer() || v.get<long>() < 1)
                throw SpecError("integrator.max_steps must be a positive integer");
            cfg.max_steps = v.get<long>();
            continue;
        }
        if (!v.is_number())
            throw SpecError("integrator." + k + " must be a number");
        const double x = v.get<double>();
        if (k == "rtol")
            cfg.rtol = x;
        else if (k == "atol")
            cfg.atol = x;
        else if (k == "max_step")
            cfg.max_step = x;
        else if (k == "blowup_norm")
            cfg.blowup_norm = x;
        else if (k == "max_time")
            cfg.max_time = x;
        else
            throw SpecError("unknown integrator setting '" + k + "'");
    }
    try {
        cfg.validate();
    } catch (const FlowError& e) {
        throw SpecError(e.what());
    }
    return cfg;
}

RunConfig parse_config(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, column] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ParseError(std::string("malformed configuration: ") + e.what(), line, column);
    }
    if (!doc.is_object())
        throw SpecError("configuration must be a JSON object");
    for (const auto& [k, v] : doc.items()) {
        (void)v;
        if (k != "system" && k != "tasks" && k != "output" && k != "parallel" && k != "integrator")
            throw SpecError("unknown configuration key '" + k + "'");
    }
    if (!doc.contains("system"))
        throw SpecError("configuration needs a 'system' block");

    RunConfig cfg{doc, system_from_json(doc.at("system")), {}, {}, false};
    const IntegratorConfig base = integrator_from_json(doc.value("integrator", json()));

    if (doc.contains("parallel")) {
        if (!doc.at("parallel").is_boolean())
            throw SpecError("'parallel' must be a boolean");
        cfg.parallel = doc.at("parallel").get<bool>();
    }
    if (doc.contains("output")) {
        const json& out = doc.at("output");
        if (!out.is_object())
            throw SpecError("'output' must be an object");
        if (out.contains("directory")) {
            if (!out.at("directory").is_string())
                throw SpecError("output.directory must be a string");
            cfg.output.directory = out.at("directory").get<std::string>();
        }
        if (out.contains("formats")) {
            cfg.output.write_json = false;
            for (const auto& f : out.at("formats")) {
                const std::string s = f.is_string() ? f.get<std::string>() : "";
                if (s == "json")
                    cfg.output.write_json = true;
                else if (s == "csv")
                    cfg.output.write_csv = true;
                else
                    throw SpecError("output.formats entries must be \"json\" or \"csv\"");
            }
        }
    }

    const json tasks = doc.value("tasks", json::array());
    if (!tasks.is_array())
        throw SpecError("'tasks' must be an array");
    std::set<std::string> ids;
    for (std::size_t k = 0; k < tasks.size(); ++k) {
        const json& jt = tasks[k];
        if (!jt.is_object() || !jt.contains("type") || !jt.at("type").is_string())
            throw SpecError("task " + std::to_string(k) + " needs a string 'type'");
        TaskSpec t;
        t.type = jt.at("type").get<std::string>();
        if (!allowed_keys().count(t.type))
            throw SpecError("task " + std::to_string(k) + ": unknown task type '" + t.type + "'");
        t.id = jt.contains("id") && jt.at("id").is_string() ? jt.at("id").get<std::string>()
                                                          : t.type + "_" + std::to_string(k);
        if (t.id.empty() || t.id.find_first_of("/\\") != std::string::npos)
            throw SpecError("task " + std::to_string(k) + ": id must be a non-empty name without slashes");
        if (!ids.insert(t.id).second)
            throw SpecError("duplicate task id '" + t.id + "'");
        t.params = jt;
        if (jt.contains("seed")) {
            if (!jt.at("seed").is_number_unsigned())
                throw SpecError(where(t) + "'seed' must be a non-negative integer");
            t.seed = jt.at("seed").get<std::uint64_t>();
        }
        t.integrator = integrator_from_json(jt.value("integrator", json()), base);
        validate_task(cfg.system, t);
        cfg.tasks.push_back(std::move(t));
    }
    return cfg;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw SpecError("cannot open configuration file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

TaskRecord run_task(const SystemSpec& sys, const TaskSpec& t)
{
    TaskRecord rec;
    rec.id = t.id;
    rec.type = t.type;
    const auto& p = t.params;
    if (t.type == "structure") {
        SamplingBudget budget;
        budget.samples = p.value("samples", 256);
        budget.seed = t.seed;
        budget.window = window_param(sys, t);
        const auto rep = full_structure_report(sys, budget);
        rec.result = to_json(rep);
        rec.verdict = rec.result.at("verdict").get<std::string>();
        rec.passed = rep.all_hold();
    } else if (t.type == "simulate") {
        const auto traj = integrate<double>(sys, vector_from_json(p.at("x0")), p.at("t_final").get<double>(),
                                            t.integrator, p.value("variational", false));
        rec.result = to_json(sample_trajectory(sys, traj, p.value("samples", 101)));
    } else if (t.type == "finsler") {
        const auto rep = lyapunov_profile(sys, vector_from_json(p.at("x0")), p.at("t_final").get<double>(),
                                          t.integrator, p.value("samples", 64));
        rec.result = to_json(rep);
        rec.verdict = to_string(rep.strict_decrease);
        rec.passed = rep.strict_decrease == Verdict::Holds;
    } else if (t.type == "contraction") {
        const Vector x0 = vector_from_json(p.at("x0"));
        const auto v = make_tangent(sys, x0, vector_from_json(p.at("v")));
        const auto rep = contraction_certificate(sys, x0, v, p.at("t_final").get<double>(), t.integrator,
                                                 p.value("samples", 64));
        rec.result = to_json(rep);
        rec.verdict = to_string(rep.strict_decrease);
        rec.passed = rep.strict_decrease == Verdict::Holds;
    } else if (t.type == "classify_level") {
        LevelBudget budget;
        budget.samples = p.value("samples", 16);
        budget.multistarts = p.value("multistarts", 8);
        budget.horizon = p.value("horizon", 100.0);
        budget.seed = t.seed;
        budget.window = window_param(sys, t);
        budget.cfg = t.integrator;
        const auto a = classify_level_set(sys, p.at("level").get<double>(), budget);
        rec.result = to_json(a);
        rec.verdict = to_string(a.verdict);
        if (p.contains("expect"))
            rec.passed = a.verdict == level_verdict_from_string(p.at("expect").get<std::string>());
        else
            rec.passed = a.verdict != LevelVerdict::Inconclusive;
    } else if (t.type == "distance") {
        const auto d = finsler_distance_upper(sys, vector_from_json(p.at("y")), vector_from_json(p.at("z")),
                                              p.value("refine_rounds", 5));
        rec.result = to_json(d);
    } else if (t.type == "order_path") {
        const auto path =
            order_path(sys, vector_from_json(p.at("y")), vector_from_json(p.at("z")), p.value("grid", 33));
        rec.result = to_json(path);
    } else if (t.type == "ordered_equilibria") {
        LevelBudget budget;
        budget.multistarts = p.value("multistarts", 8);
        budget.seed = t.seed;
        budget.cfg = t.integrator;
        const auto o = ordered_equilibria_check(sys, p.at("levels").get<std::vector<double>>(), budget);
        rec.result = to_json(o);
        rec.verdict = to_string(o.verdict);
        rec.passed = o.verdict == Verdict::Holds;
    } else {
        throw SpecError("unknown task type '" + t.type + "'");
    }
    return rec;
}

RunReport execute(const RunConfig& cfg)
{
    RunReport report;
    report.artifact_version = artifact_version();
    report.config = cfg.document;
    report.system = system_summary(cfg.system);
    report.tasks.resize(cfg.tasks.size());
    auto one = [&](std::size_t i) {
        const auto start = std::chrono::steady_clock::now();
        report.tasks[i] = run_task(cfg.system, cfg.tasks[i]);
        report.tasks[i].wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };
    if (cfg.parallel) {
        parallel_for(cfg.tasks.size(), one);
    } else {
        for (std::size_t i = 0; i < cfg.tasks.size(); ++i)
            one(i);
    }
    report.exit_code = std::all_of(report.tasks.begin(), report.tasks.end(), [](const auto& t) { return t.passed; }) ? 0 : 2;
    return report;
}

std::string emit_plot_data(const RunReport& report, const std::string& task_id, const std::string& directory)
{
    const std::string csv = plot_csv(report, task_id);
    std::filesystem::create_directories(directory);
    const std::string path = (std::filesystem::path(directory) / (task_id + ".csv")).string();
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write '" + path + "'");
    out << csv;
    return path;
}

namespace {

bool plottable(const std::string& type)
{
    return type == "simulate" || type == "finsler" || type == "contraction" || type == "distance" ||
           type == "order_path";
}

void diagnose(std::ostream& err, const std::exception& e)
{
    if (const auto* pe = dynamic_cast<const ParseError*>(&e); pe && pe->line() > 0)
        err << "error: " << pe->what() << " (line " << pe->line() << ", column " << pe->column() << ")\n";
    else
        err << "error: " << e.what() << "\n";
}

} // namespace

int run_command(const std::string& config_path, std::ostream& out, std::ostream& err)
{
    try {
        const RunConfig cfg = load_config(config_path);
        const RunReport report = execute(cfg);
        const std::filesystem::path dir(cfg.output.directory);
        if (cfg.output.write_json || cfg.output.write_csv)
            std::filesystem::create_directories(dir);
        if (cfg.output.write_json) {
            const std::string path = (dir / "report.json").string();
            std::ofstream f(path, std::ios::binary);
            if (!f)
                throw std::runtime_error("cannot write '" + path + "'");
            f << serialize(report);
            out << "report: " << path << "\n";
        }
        if (cfg.output.write_csv)
            for (const auto& t : report.tasks)
                if (plottable(t.type))
                    out << "csv: " << emit_plot_data(report, t.id, cfg.output.directory) << "\n";
        for (const auto& t : report.tasks) {
            char line[256];
            std::snprintf(line, sizeof line, "%-24s %-20s %-18s %.3fs\n", t.id.c_str(), t.type.c_str(),
                          t.verdict ? t.verdict->c_str() : "-", t.wall_time_s);
            out << line;
        }
        return report.exit_code;
    } catch (const std::exception& e) {
        diagnose(err, e);
        return 1;
    }
}

int check_command(const std::string& config_path, std::ostream& out, std::ostream& err)
{
    try {
        const RunConfig cfg = load_config(config_path);
        TaskSpec task;
        task.id = "check";
        task.type = "structure";
        task.params = json::object();
        for (const auto& t : cfg.tasks)
            if (t.type == "structure") {
                task = t;
                break;
            }
        const TaskRecord rec = run_task(cfg.system, task);
        out << rec.result.dump(2) << "\n";
        return rec.passed ? 0 : 2;
    } catch (const std::exception& e) {
        diagnose(err, e);
        return 1;
    }
}

} // namespace finsler_flow
