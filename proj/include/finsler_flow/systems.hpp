#pragma once

#include "finsler_flow/dense.hpp"
#include "finsler_flow/expression.hpp"

#include <nlohmann/json_fwd.hpp>

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace finsler_flow {

/// Raised when a system or an operation precondition is violated.
class SpecError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Points closer than this to the boundary of an open domain count as outside.
inline constexpr double kDomainMargin = 1e-12;

/// Admissible open set X. Every kind is order-convex and closed under ∨ and ∧.
struct DomainSpec {
    enum class Kind { AllSpace, OpenBox, PositiveOrthant };

    Kind kind = Kind::AllSpace;
    Vector lower; // OpenBox only
    Vector upper; // OpenBox only

    static DomainSpec all_space() { return {}; }
    static DomainSpec positive_orthant() { return {Kind::PositiveOrthant, {}, {}}; }
    /// Throws SpecError unless lower << upper.
    static DomainSpec open_box(Vector lower, Vector upper);

    template <typename Derived>
    bool contains(const Eigen::MatrixBase<Derived>& x) const
    {
        using S = typename Derived::Scalar;
        if (!x.allFinite())
            return false;
        switch (kind) {
        case Kind::AllSpace:
            return true;
        case Kind::PositiveOrthant:
            return (x.array() > S(kDomainMargin)).all();
        case Kind::OpenBox:
            for (Eigen::Index i = 0; i < x.size(); ++i)
                if (!(x[i] > S(lower[i]) + S(kDomainMargin) && x[i] < S(upper[i]) - S(kDomainMargin)))
                    return false;
            return true;
        }
        return false;
    }

    std::string kind_name() const;
};

/// A box [lower, upper] used to draw sample points.
struct SamplingWindow {
    Vector lower;
    Vector upper;
};

/// Default sampling window for a domain: the box itself, [δ, 10]^n for the
/// orthant, [-10, 10]^n for all of R^n.
SamplingWindow default_window(const DomainSpec& domain, int dim);

/// Evaluation backend of a system. Each quantity is provided in double and in
/// extended (long double) precision. Jacobian and gradient may be absent, in
/// which case SystemSpec falls back to central differences.
class VectorFieldModel {
public:
    virtual ~VectorFieldModel() = default;

    virtual VectorX<double> field(const VectorX<double>& x) const = 0;
    virtual VectorX<long double> field(const VectorX<long double>& x) const = 0;
    virtual double integral(const VectorX<double>& x) const = 0;
    virtual long double integral(const VectorX<long double>& x) const = 0;

    virtual bool has_jacobian() const { return false; }
    virtual MatrixX<double> jacobian(const VectorX<double>&) const { return {}; }
    virtual MatrixX<long double> jacobian(const VectorX<long double>&) const { return {}; }

    virtual bool has_gradient() const { return false; }
    virtual VectorX<double> gradient(const VectorX<double>&) const { return {}; }
    virtual VectorX<long double> gradient(const VectorX<long double>&) const { return {}; }
};

/// Step used by finite-difference fallbacks: h_j = 1e-6 (1 + |x_j|).
template <typename Scalar>
Scalar fd_step(Scalar xj)
{
    using std::abs;
    return Scalar(1e-6) * (Scalar(1) + abs(xj));
}

/// ODE system x' = f(x) with first integral H on an admissible domain.
/// Immutable after construction; safe to share between threads.
class SystemSpec {
public:
    SystemSpec(std::string name, int dim, std::shared_ptr<const VectorFieldModel> model, DomainSpec domain);

    const std::string& name() const { return name_; }
    int dim() const { return dim_; }
    const DomainSpec& domain() const { return domain_; }
    bool has_analytic_jacobian() const { return model_->has_jacobian(); }
    bool has_analytic_gradient() const { return model_->has_gradient(); }

    template <typename Scalar>
    VectorX<Scalar> field(const VectorX<Scalar>& x) const
    {
        return model_->field(x);
    }

    template <typename Scalar>
    Scalar integral(const VectorX<Scalar>& x) const
    {
        return model_->integral(x);
    }

    template <typename Scalar>
    MatrixX<Scalar> jacobian(const VectorX<Scalar>& x) const
    {
        if (model_->has_jacobian())
            return model_->jacobian(x);
        return fd_jacobian(x);
    }

    template <typename Scalar>
    VectorX<Scalar> integral_gradient(const VectorX<Scalar>& x) const
    {
        if (model_->has_gradient())
            return model_->gradient(x);
        return fd_gradient(x);
    }

    template <typename Scalar>
    MatrixX<Scalar> fd_jacobian(const VectorX<Scalar>& x) const
    {
        MatrixX<Scalar> jac(dim_, dim_);
        VectorX<Scalar> xp = x;
        for (int j = 0; j < dim_; ++j) {
            const Scalar h = fd_step(x[j]);
            xp[j] = x[j] + h;
            const VectorX<Scalar> fp = field(xp);
            xp[j] = x[j] - h;
            const VectorX<Scalar> fm = field(xp);
            xp[j] = x[j];
            jac.col(j) = (fp - fm) / (Scalar(2) * h);
        }
        return jac;
    }

    template <typename Scalar>
    VectorX<Scalar> fd_gradient(const VectorX<Scalar>& x) const
    {
        VectorX<Scalar> grad(dim_);
        VectorX<Scalar> xp = x;
        for (int j = 0; j < dim_; ++j) {
            const Scalar h = fd_step(x[j]);
            xp[j] = x[j] + h;
            const Scalar hp = integral(xp);
            xp[j] = x[j] - h;
            const Scalar hm = integral(xp);
            xp[j] = x[j];
            grad[j] = (hp - hm) / (Scalar(2) * h);
        }
        return grad;
    }

    bool in_domain(const Vector& x) const { return domain_.contains(x); }

private:
    std::string name_;
    int dim_;
    std::shared_ptr<const VectorFieldModel> model_;
    DomainSpec domain_;
};

/// A point of X with its cached level H(x).
struct Point {
    Vector coords;
    double level = 0.0;
};

Point make_point(const SystemSpec& sys, Vector coords);

namespace detail {

// Adapts a type with templated members `field<S>`, `integral<S>` and
// optionally `jacobian<S>`, `gradient<S>` to VectorFieldModel.
template <typename Impl>
class GenericModel final : public VectorFieldModel {
public:
    explicit GenericModel(Impl impl)
        : impl_(std::move(impl))
    {
    }

    VectorX<double> field(const VectorX<double>& x) const override { return impl_.field(x); }
    VectorX<long double> field(const VectorX<long double>& x) const override { return impl_.field(x); }
    double integral(const VectorX<double>& x) const override { return impl_.integral(x); }
    long double integral(const VectorX<long double>& x) const override { return impl_.integral(x); }

    bool has_jacobian() const override { return impl_.has_jacobian(); }
    MatrixX<double> jacobian(const VectorX<double>& x) const override { return impl_.jacobian(x); }
    MatrixX<long double> jacobian(const VectorX<long double>& x) const override { return impl_.jacobian(x); }

    bool has_gradient() const override { return impl_.has_gradient(); }
    VectorX<double> gradient(const VectorX<double>& x) const override { return impl_.gradient(x); }
    VectorX<long double> gradient(const VectorX<long double>& x) const override { return impl_.gradient(x); }

private:
    Impl impl_;
};

struct NoDerivative {};

template <typename F, typename H, typename J, typename G>
struct LambdaImpl {
    F f;
    H h;
    J j;
    G g;

    template <typename S>
    VectorX<S> field(const VectorX<S>& x) const
    {
        return f(x);
    }
    template <typename S>
    S integral(const VectorX<S>& x) const
    {
        return h(x);
    }
    bool has_jacobian() const { return !std::is_same_v<J, NoDerivative>; }
    template <typename S>
    MatrixX<S> jacobian(const VectorX<S>& x) const
    {
        if constexpr (std::is_same_v<J, NoDerivative>)
            return {};
        else
            return j(x);
    }
    bool has_gradient() const { return !std::is_same_v<G, NoDerivative>; }
    template <typename S>
    VectorX<S> gradient(const VectorX<S>& x) const
    {
        if constexpr (std::is_same_v<G, NoDerivative>)
            return {};
        else
            return g(x);
    }
};

} // namespace detail

/// Builds a system from generic callables taking `const VectorX<S>&` for
/// S = double and S = long double. Jacobian and gradient are finite-differenced.
template <typename F, typename H>
SystemSpec make_system(std::string name, int dim, F field, H integral, DomainSpec domain = {})
{
    using Impl = detail::LambdaImpl<F, H, detail::NoDerivative, detail::NoDerivative>;
    return SystemSpec(std::move(name), dim,
                      std::make_shared<detail::GenericModel<Impl>>(Impl{std::move(field), std::move(integral), {}, {}}),
                      std::move(domain));
}

/// As above with analytic Jacobian and gradient.
template <typename F, typename J, typename H, typename G>
SystemSpec make_system(std::string name, int dim, F field, J jacobian, H integral, G gradient, DomainSpec domain = {})
{
    using Impl = detail::LambdaImpl<F, H, J, G>;
    return SystemSpec(std::move(name), dim,
                      std::make_shared<detail::GenericModel<Impl>>(
                          Impl{std::move(field), std::move(integral), std::move(jacobian), std::move(gradient)}),
                      std::move(domain));
}

/// Catalog identifiers accepted by builtin().
std::vector<std::string> builtin_names();

/// Instantiates a catalog system.
///   metzler_linear      f = A x, H = Σ x_i; params {"A": [[...], ...]}
///   cyclic_compartment  f_i = g(x_{i-1}) - g(x_i), g(s) = s + s^3; params {"n": int >= 2}
///   driftless_exchange  f = (e^{x2-x1}, -e^{x2-x1}), H = x1 + x2
/// Throws SpecError for unknown names and invalid parameters.
SystemSpec builtin(const std::string& name, const nlohmann::json& params);
SystemSpec builtin(const std::string& name);

/// Linear system with an explicit Metzler matrix; validates nonnegative
/// off-diagonals, zero column sums and irreducibility.
SystemSpec metzler_linear(const Matrix& a);

/// Parses a system declaration. Accepts either a full run configuration (the
/// "system" member is used) or the system object itself:
///   {"builtin": name, "params": {...}}
///   {"dim": n, "field": ["...", ...], "integral": "...",
///    "constants": {"k": 1.0}, "domain": {"kind": "all_space"|"positive_orthant"|"open_box",
///    "lower": [...], "upper": [...]}, "name": "..."}
/// Throws ParseError for syntax errors and SpecError for schema violations.
SystemSpec parse_system(const std::string& text);
SystemSpec system_from_json(const nlohmann::json& j);

DomainSpec domain_from_json(const nlohmann::json& j, int dim);

/// Result of checking the first-integral and derivative consistency of a
/// system on a set of points.
struct ConsistencyReport {
    double worst_orthogonality = 0.0;       // max |<grad H, f>| / (1 + |grad H| |f|)
    double worst_jacobian_mismatch = 0.0;   // max relative mismatch analytic vs FD Jacobian
    double worst_gradient_mismatch = 0.0;   // max relative mismatch analytic vs FD gradient
    Vector worst_orthogonality_point;
    bool orthogonality_holds = true;
    bool derivatives_hold = true;
};

ConsistencyReport check_consistency(const SystemSpec& sys, const std::vector<Vector>& points);

} // namespace finsler_flow
