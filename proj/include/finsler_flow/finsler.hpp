#pragma once

#include "finsler_flow/flow.hpp"
#include "finsler_flow/systems.hpp"
#include "finsler_flow/verdict.hpp"

#include <string>
#include <vector>

namespace finsler_flow {

/// Relative tangency tolerance |<grad H, v>| <= 1e-9 |grad H| |v|.
inline constexpr double kTangencyTol = 1e-9;
/// Transported vectors drifting beyond this are an error; between the two
/// tolerances they are re-projected.
inline constexpr double kTangencyDriftTol = 1e-7;
/// |f(x)| at or below this marks an equilibrium.
inline constexpr double kEquilibriumTol = 1e-10;

/// A vector at `base`, meant to lie in the tangent space of the level set.
struct TangentVector {
    Point base;
    Vector vec;
    double tangency_residual = 0.0; // <grad H(base), vec>
};

TangentVector make_tangent(const SystemSpec& sys, const Vector& x, const Vector& v);

/// v - (<g, v>/|g|^2) g
Vector project_to_tangent(const Vector& grad, const Vector& v);

/// Relative tangency residual |<g, v>| / (|g| |v|); zero for v = 0.
double relative_tangency(const Vector& grad, const Vector& v);

/// G(x) = grad H(x) / |grad H(x)|^2, the point of A_x on the gradient line.
/// Throws SpecError when grad H(x) = 0.
Vector gauge_direction(const SystemSpec& sys, const Vector& x);

/// Gauge of the unit ball A_x - A_x, A_x = {w >= 0 : <g, w> = 1}, at a tangent
/// vector v: the smallest t with v = t (a - b), a, b in A_x. For <g, v> = 0
/// this equals <g, v⁺> = <g, v⁻> = ½ Σ g_j |v_j|.
template <typename DerivedG, typename DerivedV>
typename DerivedV::Scalar gauge_norm(const Eigen::MatrixBase<DerivedG>& grad, const Eigen::MatrixBase<DerivedV>& v)
{
    using Scalar = typename DerivedV::Scalar;
    return Scalar(0.5) * grad.template cast<Scalar>().cwiseProduct(v.cwiseAbs()).sum();
}

/// Closed-form Finsler norm |v|_x. Throws SpecError when v is not tangent.
double finsler_norm(const SystemSpec& sys, const TangentVector& v);

/// The same gauge computed by solving
///     minimize t  s.t.  v = a - b,  a, b >= 0,  <g, a> = t,  <g, b> = t
/// with the dense simplex. Throws SpecError when the program is infeasible.
double finsler_norm_oracle(const SystemSpec& sys, const TangentVector& v);

/// Upper bound C(x) with |v| <= C(x) |v|_x on the tangent space:
/// C = 2 sqrt(Σ c_j^2), c_j = 1/(a_j |g|^2) - a_j, a = G(x).
/// Throws SpecError unless grad H(x) >> 0.
double norm_comparison_bound(const SystemSpec& sys, const Vector& x);

/// Finsler norms sampled along an orbit.
struct FinslerReport {
    std::string kind;                 // "lyapunov" or "contraction"
    std::vector<double> times;        // increasing
    std::vector<double> values;       // norms (may underflow to 0)
    std::vector<double> log_values;   // natural logs of the norms; -inf for exact zeros
    std::vector<std::vector<double>> states; // φ_t x at the sample times
    Verdict strict_decrease = Verdict::Inconclusive;
    double worst_adjacent_ratio = 0.0; // max values[k+1]/values[k]
    double contraction_factor = 0.0;   // max over t1 < t2 of values(t2)/values(t1)
    bool equilibrium = false;
    int reprojections = 0;
    double max_tangency_residual = 0.0;
    FlowStatus flow_status = FlowStatus::Complete;
};

/// t ↦ |f(φ_t x0)|_{φ_t x0} at `samples` equally spaced times between 0 and
/// t_final (negative t_final samples the backward orbit). Computed by
/// transporting f(x0), since f(φ_t x0) = Dφ_t(x0) f(x0).
FinslerReport lyapunov_profile(const SystemSpec& sys, const Vector& x0, double t_final,
                               const IntegratorConfig& cfg = {}, int samples = 64);

/// t ↦ |Dφ_t(x0) v|_{φ_t x0} for a nonzero tangent v.
FinslerReport contraction_certificate(const SystemSpec& sys, const Vector& x0, const TangentVector& v,
                                      double t_final, const IntegratorConfig& cfg = {}, int samples = 64);

/// Adjacent-ratio bookkeeping shared by both reports; fills strict_decrease,
/// worst_adjacent_ratio and contraction_factor from log_values.
void summarize_decrease(FinslerReport& report);

/// CSV `t,value`, 17 significant digits.
std::string finsler_csv(const FinslerReport& report);

} // namespace finsler_flow
