#pragma once

#include "finsler_flow/dense.hpp"
#include "finsler_flow/systems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace finsler_flow {

/// Raised when an integration cannot start or a flow precondition fails.
class FlowError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct IntegratorConfig {
    double rtol = 1e-9;
    double atol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    double blowup_norm = 1e8;
    double max_time = std::numeric_limits<double>::infinity();
    long max_steps = 2'000'000;

    /// Throws FlowError unless rtol, atol > 0, blowup_norm > 1, max_step > 0.
    void validate() const;
};

enum class FlowStatus { Complete, ForwardBlowup, BackwardBlowup, LeftDomain, StepLimit };

const char* to_string(FlowStatus s);

/// One accepted step's continuous extension (Dormand-Prince, 4th order).
template <typename Scalar>
struct DenseSegment {
    Scalar t0{};
    Scalar h{};
    VectorX<Scalar> r1, r2, r3, r4, r5;

    VectorX<Scalar> eval(Scalar t) const
    {
        const Scalar theta = (t - t0) / h;
        const Scalar theta1 = Scalar(1) - theta;
        return r1 + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5)));
    }
};

/// Accepted steps of an adaptive integration, ordered by increasing time
/// regardless of the integration direction.
template <typename Scalar>
struct OdeSolution {
    std::vector<Scalar> times;
    std::vector<VectorX<Scalar>> states;
    std::vector<DenseSegment<Scalar>> segments; // segments[k] spans [times[k], times[k+1]]
    FlowStatus status = FlowStatus::Complete;
    Scalar status_time{};                        // span end, escape-time estimate or exit time
    long rejected_steps = 0;

    Scalar t_begin() const { return times.front(); }
    Scalar t_end() const { return times.back(); }
    bool covers(Scalar t) const { return t >= t_begin() && t <= t_end(); }

    VectorX<Scalar> at(Scalar t) const
    {
        if (!covers(t))
            throw FlowError("time " + std::to_string(static_cast<double>(t)) + " outside the integrated span");
        if (segments.empty())
            return states.front();
        auto it = std::upper_bound(times.begin(), times.end(), t);
        std::size_t k = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
        if (k >= segments.size())
            return states.back();
        if (t == times[k])
            return states[k];
        return segments[k].eval(t);
    }
};

namespace detail {

// Dormand-Prince 5(4) tableau and dense-output weights.
struct Dopri5 {
    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                            a76 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;
    static constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                            d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                            d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;
};

template <typename Scalar>
Scalar scaled_rms(const VectorX<Scalar>& e, const VectorX<Scalar>& y0, const VectorX<Scalar>& y1,
                  const IntegratorConfig& cfg)
{
    using std::abs;
    using std::sqrt;
    Scalar acc = 0;
    for (Eigen::Index i = 0; i < e.size(); ++i) {
        const Scalar sc = Scalar(cfg.atol) + Scalar(cfg.rtol) * std::max(abs(y0[i]), abs(y1[i]));
        const Scalar r = e[i] / sc;
        acc += r * r;
    }
    return sqrt(acc / Scalar(e.size()));
}

// Aitken extrapolation of the last three accepted times towards the escape time.
template <typename Scalar>
Scalar escape_estimate(const std::vector<Scalar>& ts)
{
    using std::abs;
    const std::size_t m = ts.size();
    if (m < 3)
        return ts.back();
    const Scalar d1 = ts[m - 2] - ts[m - 3];
    const Scalar d2 = ts[m - 1] - ts[m - 2];
    const Scalar denom = d2 - d1;
    if (d1 * d2 <= Scalar(0) || abs(d2) >= abs(d1) || denom == Scalar(0))
        return ts.back();
    return ts[m - 1] - d2 * d2 / denom;
}

} // namespace detail

/// Integrates y' = rhs(y) from t = 0 to t_final with an adaptive
/// Dormand-Prince 5(4) pair. The first `primary_dim` components are the state
/// x used for the blow-up test (|x| > blowup_norm) and the domain test.
/// Stops early on blow-up, step underflow (reported as blow-up with an
/// extrapolated escape time), domain exit (bisected to 1e-10) or the step budget.
template <typename Scalar, typename Rhs>
OdeSolution<Scalar> solve_dopri5(Rhs&& rhs, const VectorX<Scalar>& y0, Scalar t_final, const IntegratorConfig& cfg,
                                 Eigen::Index primary_dim, const DomainSpec& domain)
{
    using std::abs;
    using std::max;
    using std::min;
    using std::pow;
    using D = detail::Dopri5;
    cfg.validate();
    if (t_final == Scalar(0))
        throw FlowError("t_final must be nonzero");
    if (!domain.contains(y0.head(primary_dim)))
        throw FlowError("initial point outside the domain");

    const Scalar dir = t_final > Scalar(0) ? Scalar(1) : Scalar(-1);
    Scalar horizon = min(abs(t_final), Scalar(cfg.max_time));
    const Scalar t_end = dir * horizon;
    const Scalar max_step = min(Scalar(cfg.max_step), horizon);

    OdeSolution<Scalar> sol;
    std::vector<Scalar> times{Scalar(0)};
    std::vector<VectorX<Scalar>> states{y0};
    std::vector<DenseSegment<Scalar>> segments;

    VectorX<Scalar> y = y0;
    VectorX<Scalar> k1 = rhs(y);
    if (!k1.allFinite())
        throw FlowError("vector field is not finite at the initial point");

    // Initial step guess (Hairer, Norsett & Wanner, II.4).
    Scalar h;
    {
        const VectorX<Scalar> zero = VectorX<Scalar>::Zero(y.size());
        const Scalar d0 = detail::scaled_rms(y, zero, zero, cfg);
        const Scalar d1 = detail::scaled_rms(k1, zero, zero, cfg);
        Scalar h0 = (d0 < Scalar(1e-5) || d1 < Scalar(1e-5)) ? Scalar(1e-6) : Scalar(0.01) * d0 / d1;
        h0 = min(h0, horizon);
        const VectorX<Scalar> y1 = y + dir * h0 * k1;
        const VectorX<Scalar> f1 = rhs(y1);
        Scalar d2 = y1.allFinite() && f1.allFinite() ? detail::scaled_rms<Scalar>((f1 - k1).eval(), zero, zero, cfg) / h0
                                                     : std::numeric_limits<Scalar>::infinity();
        const Scalar dm = max(d1, d2);
        const Scalar h1 = dm <= Scalar(1e-15) ? max(Scalar(1e-6), h0 * Scalar(1e-3)) : pow(Scalar(0.01) / dm, Scalar(0.2));
        h = min(min(Scalar(100) * h0, h1), max_step);
        if (!(h > Scalar(0)))
            h = min(Scalar(1e-6), horizon);
    }

    Scalar t = 0;
    long steps = 0;
    bool last_rejected = false;
    for (;;) {
        if (dir * (t_end - t) <= Scalar(0)) {
            sol.status = FlowStatus::Complete;
            sol.status_time = t;
            break;
        }
        if (steps >= cfg.max_steps) {
            sol.status = FlowStatus::StepLimit;
            sol.status_time = t;
            break;
        }
        const Scalar underflow = t != Scalar(0) ? Scalar(1e-14) * abs(t) : Scalar(1e-14) * min(Scalar(1), horizon);
        if (h < underflow) {
            if (times.size() == 1)
                throw FlowError("tolerance infeasible: step size underflow at t = 0");
            sol.status = dir > Scalar(0) ? FlowStatus::ForwardBlowup : FlowStatus::BackwardBlowup;
            sol.status_time = detail::escape_estimate(times);
            break;
        }
        bool final_step = false;
        Scalar hs = h;
        if (hs >= abs(t_end - t)) {
            hs = abs(t_end - t);
            final_step = true;
        }
        const Scalar hd = dir * hs;

        const VectorX<Scalar> k2 = rhs((y + hd * Scalar(D::a21) * k1).eval());
        const VectorX<Scalar> k3 = rhs((y + hd * (Scalar(D::a31) * k1 + Scalar(D::a32) * k2)).eval());
        const VectorX<Scalar> k4 =
            rhs((y + hd * (Scalar(D::a41) * k1 + Scalar(D::a42) * k2 + Scalar(D::a43) * k3)).eval());
        const VectorX<Scalar> k5 = rhs(
            (y + hd * (Scalar(D::a51) * k1 + Scalar(D::a52) * k2 + Scalar(D::a53) * k3 + Scalar(D::a54) * k4)).eval());
        const VectorX<Scalar> k6 = rhs((y + hd * (Scalar(D::a61) * k1 + Scalar(D::a62) * k2 + Scalar(D::a63) * k3 +
                                                  Scalar(D::a64) * k4 + Scalar(D::a65) * k5))
                                           .eval());
        const VectorX<Scalar> ynew = y + hd * (Scalar(D::a71) * k1 + Scalar(D::a73) * k3 + Scalar(D::a74) * k4 +
                                               Scalar(D::a75) * k5 + Scalar(D::a76) * k6);
        const VectorX<Scalar> k7 = rhs(ynew);
        const VectorX<Scalar> err = hd * (Scalar(D::e1) * k1 + Scalar(D::e3) * k3 + Scalar(D::e4) * k4 +
                                          Scalar(D::e5) * k5 + Scalar(D::e6) * k6 + Scalar(D::e7) * k7);
        Scalar err_norm = detail::scaled_rms(err, y, ynew, cfg);
        if (!ynew.allFinite() || !k7.allFinite() || !(err_norm == err_norm))
            err_norm = std::numeric_limits<Scalar>::infinity();

        if (err_norm > Scalar(1)) {
            ++sol.rejected_steps;
            const Scalar fac = std::isfinite(static_cast<double>(err_norm))
                                   ? max(Scalar(0.2), Scalar(0.9) * pow(err_norm, Scalar(-0.2)))
                                   : Scalar(0.2);
            h = hs * fac;
            last_rejected = true;
            continue;
        }

        DenseSegment<Scalar> seg;
        seg.t0 = t;
        seg.h = hd;
        seg.r1 = y;
        seg.r2 = ynew - y;
        seg.r3 = hd * k1 - seg.r2;
        seg.r4 = seg.r2 - hd * k7 - seg.r3;
        seg.r5 = hd * (Scalar(D::d1) * k1 + Scalar(D::d3) * k3 + Scalar(D::d4) * k4 + Scalar(D::d5) * k5 +
                       Scalar(D::d6) * k6 + Scalar(D::d7) * k7);

        const Scalar t_new = final_step ? t_end : t + hd;
        ++steps;

        if (!domain.contains(ynew.head(primary_dim))) {
            Scalar lo = t;
            Scalar hi = t_new;
            while (abs(hi - lo) > Scalar(1e-10)) {
                const Scalar mid = (lo + hi) / Scalar(2);
                if (mid == lo || mid == hi)
                    break;
                if (domain.contains(seg.eval(mid).head(primary_dim)))
                    lo = mid;
                else
                    hi = mid;
            }
            if (lo != t) {
                times.push_back(lo);
                states.push_back(seg.eval(lo));
                segments.push_back(std::move(seg));
            }
            sol.status = FlowStatus::LeftDomain;
            sol.status_time = hi;
            break;
        }

        times.push_back(t_new);
        states.push_back(ynew);
        segments.push_back(std::move(seg));
        t = t_new;
        y = ynew;
        k1 = k7;

        if (y.head(primary_dim).norm() > Scalar(cfg.blowup_norm)) {
            sol.status = dir > Scalar(0) ? FlowStatus::ForwardBlowup : FlowStatus::BackwardBlowup;
            sol.status_time = detail::escape_estimate(times);
            break;
        }

        Scalar fac = err_norm == Scalar(0) ? Scalar(10) : Scalar(0.9) * pow(err_norm, Scalar(-0.2));
        fac = min(Scalar(10), max(Scalar(0.2), fac));
        if (last_rejected)
            fac = min(fac, Scalar(1));
        last_rejected = false;
        h = min(hs * fac, max_step);
    }

    if (dir < Scalar(0)) {
        std::reverse(times.begin(), times.end());
        std::reverse(states.begin(), states.end());
        std::reverse(segments.begin(), segments.end());
    }
    sol.times = std::move(times);
    sol.states = std::move(states);
    sol.segments = std::move(segments);
    return sol;
}

} // namespace finsler_flow
