#pragma once

#include "finsler_flow/integrator.hpp"
#include "finsler_flow/systems.hpp"
#include "finsler_flow/verdict.hpp"

#include <optional>
#include <vector>

namespace finsler_flow {

/// Non-strict order comparisons tolerate this much violation.
inline constexpr double kOrderSlack = 1e-9;
/// Strict comparisons demand at least this margin.
inline constexpr double kStrictMargin = 1e-12;

/// Solution x(t) = φ_t x0 of x' = f(x), optionally with the fundamental
/// matrix M(t) = Dφ_t(x0) solving M' = Df(φ_t x0) M, M(0) = I.
/// Times are increasing and contain 0; backward integrations end at 0.
template <typename Scalar>
class Trajectory {
public:
    Trajectory(int dim, bool with_fundamentals, OdeSolution<Scalar> sol)
        : dim_(dim)
        , with_fundamentals_(with_fundamentals)
        , sol_(std::move(sol))
    {
    }

    int dim() const { return dim_; }
    bool has_fundamentals() const { return with_fundamentals_; }
    FlowStatus status() const { return sol_.status; }
    /// Span end for complete runs, escape-time estimate for blow-ups, exit time for domain exits.
    Scalar status_time() const { return sol_.status_time; }
    Scalar t_begin() const { return sol_.t_begin(); }
    Scalar t_end() const { return sol_.t_end(); }
    bool covers(Scalar t) const { return sol_.covers(t); }
    std::size_t size() const { return sol_.times.size(); }
    const std::vector<Scalar>& times() const { return sol_.times; }

    VectorX<Scalar> initial() const { return state_at(Scalar(0)); }
    VectorX<Scalar> state(std::size_t k) const { return sol_.states[k].head(dim_); }
    MatrixX<Scalar> fundamental(std::size_t k) const { return reshape(sol_.states[k]); }

    VectorX<Scalar> state_at(Scalar t) const { return sol_.at(t).head(dim_); }
    MatrixX<Scalar> fundamental_at(Scalar t) const { return reshape(sol_.at(t)); }

    const OdeSolution<Scalar>& solution() const { return sol_; }

private:
    MatrixX<Scalar> reshape(const VectorX<Scalar>& aug) const
    {
        if (!with_fundamentals_)
            throw FlowError("trajectory was integrated without the variational equation");
        return Eigen::Map<const MatrixX<Scalar>>(aug.data() + dim_, dim_, dim_);
    }

    int dim_;
    bool with_fundamentals_;
    OdeSolution<Scalar> sol_;
};

/// Integrates x' = f(x) (and M' = Df M when `with_variational`) from x0 over
/// [0, t_final] (t_final < 0 integrates backward). The augmented state
/// (x, M) shares one step sequence.
template <typename Scalar>
Trajectory<Scalar> integrate(const SystemSpec& sys, const VectorX<Scalar>& x0, Scalar t_final,
                             const IntegratorConfig& cfg = {}, bool with_variational = false)
{
    const int n = sys.dim();
    if (x0.size() != n)
        throw FlowError("initial point has the wrong dimension");
    if (!with_variational) {
        auto rhs = [&](const VectorX<Scalar>& y) { return sys.field<Scalar>(y); };
        return Trajectory<Scalar>(n, false, solve_dopri5<Scalar>(rhs, x0, t_final, cfg, n, sys.domain()));
    }
    VectorX<Scalar> y0(n + n * n);
    y0.head(n) = x0;
    Eigen::Map<MatrixX<Scalar>>(y0.data() + n, n, n).setIdentity();
    auto rhs = [&](const VectorX<Scalar>& y) {
        VectorX<Scalar> dy(y.size());
        const VectorX<Scalar> x = y.head(n);
        dy.head(n) = sys.field<Scalar>(x);
        Eigen::Map<MatrixX<Scalar>>(dy.data() + n, n, n) =
            sys.jacobian<Scalar>(x) * Eigen::Map<const MatrixX<Scalar>>(y.data() + n, n, n);
        return dy;
    };
    return Trajectory<Scalar>(n, true, solve_dopri5<Scalar>(rhs, y0, t_final, cfg, n, sys.domain()));
}

inline Trajectory<double> integrate(const SystemSpec& sys, const Point& x0, double t_final,
                                    const IntegratorConfig& cfg = {}, bool with_variational = false)
{
    return integrate<double>(sys, x0.coords, t_final, cfg, with_variational);
}

/// Transport of a tangent vector v along the orbit, v(t) = Dφ_t(x0) v, kept
/// in scale-free form v(t) = exp(ρ(t)) w(t)/|w(t)| with
///   w' = Df w - μ w,  ρ' = μ,  μ = <w, Df w>/<w, w>,
/// so that relative accuracy is retained while |v(t)| spans many decades.
template <typename Scalar>
class TangentTransport {
public:
    TangentTransport(int dim, OdeSolution<Scalar> sol)
        : dim_(dim)
        , sol_(std::move(sol))
    {
    }

    int dim() const { return dim_; }
    FlowStatus status() const { return sol_.status; }
    Scalar t_begin() const { return sol_.t_begin(); }
    Scalar t_end() const { return sol_.t_end(); }
    bool covers(Scalar t) const { return sol_.covers(t); }
    const std::vector<Scalar>& times() const { return sol_.times; }

    VectorX<Scalar> state_at(Scalar t) const { return sol_.at(t).head(dim_); }
    /// Unit (Euclidean) direction of v(t).
    VectorX<Scalar> direction_at(Scalar t) const
    {
        const VectorX<Scalar> w = sol_.at(t).segment(dim_, dim_);
        return w / w.norm();
    }
    /// log |v(t)|_2
    Scalar log_norm_at(Scalar t) const { return sol_.at(t)[2 * dim_]; }
    VectorX<Scalar> vector_at(Scalar t) const
    {
        using std::exp;
        return exp(log_norm_at(t)) * direction_at(t);
    }

    const OdeSolution<Scalar>& solution() const { return sol_; }

private:
    int dim_;
    OdeSolution<Scalar> sol_;
};

/// With `damp_normal` the component r = <grad H, w> normal to the level set
/// is damped by -γ r grad H/|grad H|^2, γ = max(0, -μ) + 1. Exact tangent
/// vectors are unaffected (r stays 0 along the flow), but without damping
/// r obeys r' = -μ r and round-off grows at the contraction rate.
template <typename Scalar>
TangentTransport<Scalar> transport(const SystemSpec& sys, const VectorX<Scalar>& x0, const VectorX<Scalar>& v,
                                   Scalar t_final, const IntegratorConfig& cfg = {}, bool damp_normal = false)
{
    using std::max;
    using std::log;
    const int n = sys.dim();
    if (x0.size() != n || v.size() != n)
        throw FlowError("transport: dimension mismatch");
    const Scalar nv = v.norm();
    if (!(nv > Scalar(0)))
        throw FlowError("transport: vector must be nonzero");
    VectorX<Scalar> y0(2 * n + 1);
    y0.head(n) = x0;
    y0.segment(n, n) = v / nv;
    y0[2 * n] = log(nv);
    auto rhs = [&](const VectorX<Scalar>& y) {
        VectorX<Scalar> dy(y.size());
        const VectorX<Scalar> x = y.head(n);
        const VectorX<Scalar> w = y.segment(n, n);
        dy.head(n) = sys.field<Scalar>(x);
        const VectorX<Scalar> jw = sys.jacobian<Scalar>(x) * w;
        const Scalar mu = w.dot(jw) / w.squaredNorm();
        dy.segment(n, n) = jw - mu * w;
        if (damp_normal) {
            const VectorX<Scalar> g = sys.integral_gradient<Scalar>(x);
            const Scalar gg = g.squaredNorm();
            if (gg > Scalar(0))
                dy.segment(n, n) -= (max(Scalar(0), -mu) + Scalar(1)) * (g.dot(w) / gg) * g;
        }
        dy[2 * n] = mu;
        return dy;
    };
    return TangentTransport<Scalar>(n, solve_dopri5<Scalar>(rhs, y0, t_final, cfg, n, sys.domain()));
}

/// Outcome of an order comparison between two flowed objects at time t.
struct OrderCheck {
    Verdict verdict = Verdict::Inconclusive;
    double min_gap = 0.0; // min_i of (φ_t y - φ_t x)_i, or of (Dφ_t(x) v)_i
    Vector gap;
    double t = 0.0;
};

/// φ_t x <= φ_t y for x <= y (slack 1e-9).
OrderCheck check_monotone(const SystemSpec& sys, const Vector& x, const Vector& y, double t,
                          const IntegratorConfig& cfg = {});
/// φ_t x << φ_t y for x < y and t > 0 (margin 1e-12).
OrderCheck check_strong_monotone(const SystemSpec& sys, const Vector& x, const Vector& y, double t,
                                 const IntegratorConfig& cfg = {});
/// Dφ_t(x) v >> 0 for v > 0 and t > 0 (margin 1e-12).
OrderCheck check_cone_invariance(const SystemSpec& sys, const Vector& x, const Vector& v, double t,
                                 const IntegratorConfig& cfg = {});

/// Largest |H(x(t_k)) - H(x0)| / (1 + |H(x0)|) over the accepted steps.
double integral_drift(const SystemSpec& sys, const Trajectory<double>& traj);

/// CSV with header `t,x1..xn[,m11..mnn]` (row-major m_ij), 17 significant digits.
std::string trajectory_csv(const Trajectory<double>& traj);

} // namespace finsler_flow
