#include "finsler_flow/flow.hpp"

#include "finsler_flow/csv.hpp"

namespace finsler_flow {

void IntegratorConfig::validate() const
{
    if (!(rtol > 0.0) || !(atol > 0.0))
        throw FlowError("integrator tolerances must be positive");
    if (!(blowup_norm > 1.0))
        throw FlowError("blowup_norm must exceed 1");
    if (!(max_step > 0.0))
        throw FlowError("max_step must be positive");
    if (!(max_time > 0.0))
        throw FlowError("max_time must be positive");
    if (max_steps < 1)
        throw FlowError("max_steps must be positive");
}

const char* to_string(FlowStatus s)
{
    switch (s) {
    case FlowStatus::Complete:
        return "complete";
    case FlowStatus::ForwardBlowup:
        return "forward_blowup";
    case FlowStatus::BackwardBlowup:
        return "backward_blowup";
    case FlowStatus::LeftDomain:
        return "left_domain";
    case FlowStatus::StepLimit:
        return "step_limit";
    }
    return "unknown";
}

namespace {

Vector flow_to(const SystemSpec& sys, const Vector& x, double t, const IntegratorConfig& cfg)
{
    const auto traj = integrate<double>(sys, x, t, cfg, false);
    if (!traj.covers(t))
        throw FlowError(std::string("trajectory ends before t (status ") + to_string(traj.status()) + ")");
    return traj.state_at(t);
}

void require_positive_time(double t)
{
    if (!(t > 0.0))
        throw FlowError("comparison time must be positive");
}

} // namespace

OrderCheck check_monotone(const SystemSpec& sys, const Vector& x, const Vector& y, double t,
                          const IntegratorConfig& cfg)
{
    if (!order_le(x, y))
        throw FlowError("check_monotone requires x <= y");
    require_positive_time(t);
    OrderCheck out;
    out.t = t;
    out.gap = flow_to(sys, y, t, cfg) - flow_to(sys, x, t, cfg);
    out.min_gap = out.gap.minCoeff();
    out.verdict = out.min_gap >= -kOrderSlack ? Verdict::Holds : Verdict::Fails;
    return out;
}

OrderCheck check_strong_monotone(const SystemSpec& sys, const Vector& x, const Vector& y, double t,
                                 const IntegratorConfig& cfg)
{
    if (!order_lt(x, y))
        throw FlowError("check_strong_monotone requires x < y");
    require_positive_time(t);
    OrderCheck out;
    out.t = t;
    out.gap = flow_to(sys, y, t, cfg) - flow_to(sys, x, t, cfg);
    out.min_gap = out.gap.minCoeff();
    out.verdict = out.min_gap > kStrictMargin ? Verdict::Holds : Verdict::Fails;
    return out;
}

OrderCheck check_cone_invariance(const SystemSpec& sys, const Vector& x, const Vector& v, double t,
                                 const IntegratorConfig& cfg)
{
    if (!order_lt(Vector::Zero(v.size()), v))
        throw FlowError("check_cone_invariance requires v > 0");
    require_positive_time(t);
    const auto traj = integrate<double>(sys, x, t, cfg, true);
    if (!traj.covers(t))
        throw FlowError(std::string("trajectory ends before t (status ") + to_string(traj.status()) + ")");
    OrderCheck out;
    out.t = t;
    out.gap = traj.fundamental_at(t) * v;
    out.min_gap = out.gap.minCoeff();
    out.verdict = out.min_gap > kStrictMargin ? Verdict::Holds : Verdict::Fails;
    return out;
}

double integral_drift(const SystemSpec& sys, const Trajectory<double>& traj)
{
    const double h0 = sys.integral(traj.initial());
    double worst = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k)
        worst = std::max(worst, std::abs(sys.integral(traj.state(k)) - h0));
    return worst / (1.0 + std::abs(h0));
}

std::string trajectory_csv(const Trajectory<double>& traj)
{
    const int n = traj.dim();
    std::vector<std::string> names{"t"};
    for (int i = 1; i <= n; ++i)
        names.push_back("x" + std::to_string(i));
    if (traj.has_fundamentals())
        for (int i = 1; i <= n; ++i)
            for (int j = 1; j <= n; ++j)
                names.push_back("m" + std::to_string(i) + (n >= 10 ? "_" : "") + std::to_string(j));
    std::string out = csv_header(names);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        std::vector<double> row{traj.times()[k]};
        const Vector x = traj.state(k);
        row.insert(row.end(), x.data(), x.data() + n);
        if (traj.has_fundamentals()) {
            const Matrix m = traj.fundamental(k);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    row.push_back(m(i, j));
        }
        out += csv_row(row);
    }
    return out;
}

} // namespace finsler_flow
