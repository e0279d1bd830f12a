#include "finsler_flow/finsler.hpp"

#include "finsler_flow/csv.hpp"
#include "finsler_flow/simplex.hpp"

#include <cmath>
#include <limits>

namespace finsler_flow {

TangentVector make_tangent(const SystemSpec& sys, const Vector& x, const Vector& v)
{
    if (v.size() != sys.dim())
        throw SpecError("tangent vector has the wrong dimension");
    TangentVector out{make_point(sys, x), v, 0.0};
    out.tangency_residual = sys.integral_gradient(x).dot(v);
    return out;
}

Vector project_to_tangent(const Vector& grad, const Vector& v) { return v - (grad.dot(v) / grad.squaredNorm()) * grad; }

double relative_tangency(const Vector& grad, const Vector& v)
{
    const double scale = grad.norm() * v.norm();
    return scale > 0.0 ? std::abs(grad.dot(v)) / scale : 0.0;
}

Vector gauge_direction(const SystemSpec& sys, const Vector& x)
{
    const Vector g = sys.integral_gradient(x);
    const double g2 = g.squaredNorm();
    if (!(g2 > 0.0))
        throw SpecError("gauge_direction: grad H vanishes");
    return g / g2;
}

namespace {

Vector checked_gradient(const SystemSpec& sys, const TangentVector& v)
{
    const Vector g = sys.integral_gradient(v.base.coords);
    if (std::abs(g.dot(v.vec)) > kTangencyTol * g.norm() * v.vec.norm())
        throw SpecError("vector is not tangent to the level set (residual " + std::to_string(g.dot(v.vec)) + ")");
    return g;
}

} // namespace

double finsler_norm(const SystemSpec& sys, const TangentVector& v)
{
    const Vector g = checked_gradient(sys, v);
    return gauge_norm(g, v.vec);
}

double finsler_norm_oracle(const SystemSpec& sys, const TangentVector& v)
{
    const Vector g = checked_gradient(sys, v);
    const Eigen::Index n = g.size();
    // Variables [a (n) | b (n) | t].
    Matrix a = Matrix::Zero(n + 2, 2 * n + 1);
    Vector b = Vector::Zero(n + 2);
    Vector c = Vector::Zero(2 * n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, i) = 1.0;
        a(i, n + i) = -1.0;
        b[i] = v.vec[i];
    }
    a.row(n).head(n) = g.transpose();
    a(n, 2 * n) = -1.0;
    a.row(n + 1).segment(n, n) = g.transpose();
    a(n + 1, 2 * n) = -1.0;
    c[2 * n] = 1.0;

    const double tol = kTangencyTol * g.norm() * v.vec.norm() + 1e-15 * (1.0 + v.vec.cwiseAbs().sum());
    const auto res = solve_lp<double>(a, b, c, tol);
    if (res.status != LpStatus::Optimal)
        throw SpecError(std::string("gauge LP not solved: ") + to_string(res.status));
    return res.objective;
}

double norm_comparison_bound(const SystemSpec& sys, const Vector& x)
{
    const Vector g = sys.integral_gradient(x);
    if (!(g.array() > 0.0).all())
        throw SpecError("norm_comparison_bound requires grad H >> 0");
    const Vector a = g / g.squaredNorm();
    const double g2 = g.squaredNorm();
    const Vector c = (1.0 / (a.array() * g2) - a.array()).matrix();
    return 2.0 * c.norm();
}

void summarize_decrease(FinslerReport& report)
{
    const auto& lv = report.log_values;
    const double strict = std::log1p(-1e-12);
    double worst = -std::numeric_limits<double>::infinity();
    double best_pair = -std::numeric_limits<double>::infinity();
    double running_min = std::numeric_limits<double>::infinity();
    bool decreasing = lv.size() >= 2;
    for (std::size_t k = 0; k < lv.size(); ++k) {
        if (k > 0) {
            double d = lv[k] - lv[k - 1];
            if (std::isnan(d))
                d = 0.0; // both exact zeros: no decrease
            worst = std::max(worst, d);
            if (!(d < strict))
                decreasing = false;
            double p = lv[k] - running_min;
            if (std::isnan(p))
                p = 0.0;
            best_pair = std::max(best_pair, p);
        }
        running_min = std::min(running_min, lv[k]);
    }
    report.worst_adjacent_ratio = lv.size() >= 2 ? std::exp(worst) : 0.0;
    report.contraction_factor = lv.size() >= 2 ? std::exp(best_pair) : 0.0;
    report.strict_decrease = decreasing ? Verdict::Holds : Verdict::Fails;
}

namespace {

std::vector<double> sample_times(double t_final, int samples)
{
    std::vector<double> ts(static_cast<std::size_t>(samples));
    for (int k = 0; k < samples; ++k)
        ts[static_cast<std::size_t>(k)] = t_final * static_cast<double>(k) / static_cast<double>(samples - 1);
    ts.back() = t_final;
    if (t_final < 0.0)
        std::reverse(ts.begin(), ts.end());
    return ts;
}

// Samples |v(t)|_{x(t)} from a transport, re-projecting directions whose
// tangency residual lies between the two tolerances.
FinslerReport sample_transport(const SystemSpec& sys, const TangentTransport<double>& tr, double t_final, int samples,
                               double initial_norm, const std::string& kind)
{
    FinslerReport rep;
    rep.kind = kind;
    rep.flow_status = tr.status();
    for (double t : sample_times(t_final, samples)) {
        if (!tr.covers(t))
            continue;
        const Vector x = tr.state_at(t);
        double value;
        double log_value;
        if (t == 0.0) {
            value = initial_norm;
            log_value = std::log(initial_norm);
        } else {
            const Vector g = sys.integral_gradient(x);
            Vector d = tr.direction_at(t);
            const double resid = relative_tangency(g, d);
            rep.max_tangency_residual = std::max(rep.max_tangency_residual, resid);
            if (resid > kTangencyDriftTol)
                throw FlowError("transported vector drifted off the tangent space (relative residual " +
                                std::to_string(resid) + " at t = " + std::to_string(t) + ")");
            if (resid >= kTangencyTol) {
                d = project_to_tangent(g, d);
                ++rep.reprojections;
            }
            const double unit = gauge_norm(g, d);
            log_value = tr.log_norm_at(t) + std::log(unit);
            value = std::exp(log_value);
        }
        rep.times.push_back(t);
        rep.values.push_back(value);
        rep.log_values.push_back(log_value);
        rep.states.emplace_back(x.data(), x.data() + x.size());
    }
    summarize_decrease(rep);
    return rep;
}

} // namespace

FinslerReport lyapunov_profile(const SystemSpec& sys, const Vector& x0, double t_final, const IntegratorConfig& cfg,
                               int samples)
{
    if (t_final == 0.0)
        throw FlowError("lyapunov_profile: t_final must be nonzero");
    if (samples < 2)
        throw FlowError("lyapunov_profile: need at least two samples");
    if (!sys.in_domain(x0))
        throw FlowError("lyapunov_profile: initial point outside the domain");
    const Vector f0 = sys.field(x0);
    if (f0.norm() <= kEquilibriumTol) {
        FinslerReport rep;
        rep.kind = "lyapunov";
        rep.equilibrium = true;
        rep.strict_decrease = Verdict::Inconclusive;
        for (double t : sample_times(t_final, samples)) {
            rep.times.push_back(t);
            rep.values.push_back(0.0);
            rep.log_values.push_back(-std::numeric_limits<double>::infinity());
            rep.states.emplace_back(x0.data(), x0.data() + x0.size());
        }
        return rep;
    }
    const Vector g0 = sys.integral_gradient(x0);
    const Vector v0 = relative_tangency(g0, f0) >= kTangencyTol ? project_to_tangent(g0, f0) : f0;
    const auto tr = transport<double>(sys, x0, v0, t_final, cfg, true);
    return sample_transport(sys, tr, t_final, samples, gauge_norm(g0, v0), "lyapunov");
}

FinslerReport contraction_certificate(const SystemSpec& sys, const Vector& x0, const TangentVector& v, double t_final,
                                      const IntegratorConfig& cfg, int samples)
{
    if (!(t_final > 0.0))
        throw FlowError("contraction_certificate: t_final must be positive");
    if (samples < 2)
        throw FlowError("contraction_certificate: need at least two samples");
    if ((v.base.coords - x0).norm() > 0.0)
        throw SpecError("contraction_certificate: tangent vector is based at a different point");
    if (!(v.vec.norm() > 0.0))
        throw SpecError("contraction_certificate: vector must be nonzero");
    const double initial = finsler_norm(sys, v);
    const auto tr = transport<double>(sys, x0, v.vec, t_final, cfg, true);
    return sample_transport(sys, tr, t_final, samples, initial, "contraction");
}

std::string finsler_csv(const FinslerReport& report)
{
    std::string out = csv_header({"t", "value"});
    for (std::size_t k = 0; k < report.times.size(); ++k)
        out += csv_row({report.times[k], report.values[k]});
    return out;
}

} // namespace finsler_flow
