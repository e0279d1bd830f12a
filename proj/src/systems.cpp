#include "finsler_flow/systems.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <functional>

namespace finsler_flow {

using nlohmann::json;

DomainSpec DomainSpec::open_box(Vector lower, Vector upper)
{
    if (lower.size() != upper.size() || lower.size() == 0)
        throw SpecError("open_box: bounds must have equal, nonzero length");
    if (!order_ll(lower, upper))
        throw SpecError("open_box: requires lower << upper componentwise");
    return {Kind::OpenBox, std::move(lower), std::move(upper)};
}

std::string DomainSpec::kind_name() const
{
    switch (kind) {
    case Kind::AllSpace:
        return "all_space";
    case Kind::OpenBox:
        return "open_box";
    case Kind::PositiveOrthant:
        return "positive_orthant";
    }
    return "unknown";
}

SamplingWindow default_window(const DomainSpec& domain, int dim)
{
    switch (domain.kind) {
    case DomainSpec::Kind::OpenBox:
        return {domain.lower, domain.upper};
    case DomainSpec::Kind::PositiveOrthant:
        return {Vector::Constant(dim, 1e-6), Vector::Constant(dim, 10.0)};
    case DomainSpec::Kind::AllSpace:
        break;
    }
    return {Vector::Constant(dim, -10.0), Vector::Constant(dim, 10.0)};
}

SystemSpec::SystemSpec(std::string name, int dim, std::shared_ptr<const VectorFieldModel> model, DomainSpec domain)
    : name_(std::move(name))
    , dim_(dim)
    , model_(std::move(model))
    , domain_(std::move(domain))
{
    if (dim_ < 1)
        throw SpecError("system dimension must be positive");
    if (!model_)
        throw SpecError("system model is null");
    if (domain_.kind == DomainSpec::Kind::OpenBox && domain_.lower.size() != dim_)
        throw SpecError("open_box bounds do not match the system dimension");
}

Point make_point(const SystemSpec& sys, Vector coords)
{
    if (coords.size() != sys.dim())
        throw SpecError("point dimension does not match the system");
    const double level = sys.integral(coords);
    return {std::move(coords), level};
}

namespace {

bool strongly_connected(const Matrix& a, double tol)
{
    const int n = static_cast<int>(a.rows());
    auto reach = [&](bool forward) {
        std::vector<bool> seen(n, false);
        std::vector<int> stack{0};
        seen[0] = true;
        while (!stack.empty()) {
            const int j = stack.back();
            stack.pop_back();
            for (int i = 0; i < n; ++i) {
                const double w = forward ? a(i, j) : a(j, i);
                if (i != j && std::abs(w) > tol && !seen[i]) {
                    seen[i] = true;
                    stack.push_back(i);
                }
            }
        }
        return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
    };
    return reach(true) && reach(false);
}

struct MetzlerImpl {
    Matrix a;
    MatrixX<long double> a_long;

    template <typename S>
    const MatrixX<S>& mat() const
    {
        if constexpr (std::is_same_v<S, double>)
            return a;
        else
            return a_long;
    }

    template <typename S>
    VectorX<S> field(const VectorX<S>& x) const
    {
        return mat<S>() * x;
    }
    template <typename S>
    S integral(const VectorX<S>& x) const
    {
        return x.sum();
    }
    bool has_jacobian() const { return true; }
    template <typename S>
    MatrixX<S> jacobian(const VectorX<S>&) const
    {
        return mat<S>();
    }
    bool has_gradient() const { return true; }
    template <typename S>
    VectorX<S> gradient(const VectorX<S>& x) const
    {
        return VectorX<S>::Ones(x.size());
    }
};

struct CyclicImpl {
    int n;

    template <typename S>
    static S g(S s)
    {
        return s + s * s * s;
    }
    template <typename S>
    static S dg(S s)
    {
        return S(1) + S(3) * s * s;
    }

    template <typename S>
    VectorX<S> field(const VectorX<S>& x) const
    {
        VectorX<S> out(n);
        for (int i = 0; i < n; ++i)
            out[i] = g(x[(i + n - 1) % n]) - g(x[i]);
        return out;
    }
    template <typename S>
    S integral(const VectorX<S>& x) const
    {
        return x.sum();
    }
    bool has_jacobian() const { return true; }
    template <typename S>
    MatrixX<S> jacobian(const VectorX<S>& x) const
    {
        MatrixX<S> jac = MatrixX<S>::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            const int prev = (i + n - 1) % n;
            jac(i, i) -= dg(x[i]);
            jac(i, prev) += dg(x[prev]);
        }
        return jac;
    }
    bool has_gradient() const { return true; }
    template <typename S>
    VectorX<S> gradient(const VectorX<S>&) const
    {
        return VectorX<S>::Ones(n);
    }
};

struct DriftlessImpl {
    template <typename S>
    VectorX<S> field(const VectorX<S>& x) const
    {
        using std::exp;
        const S e = exp(x[1] - x[0]);
        VectorX<S> out(2);
        out << e, -e;
        return out;
    }
    template <typename S>
    S integral(const VectorX<S>& x) const
    {
        return x[0] + x[1];
    }
    bool has_jacobian() const { return true; }
    template <typename S>
    MatrixX<S> jacobian(const VectorX<S>& x) const
    {
        using std::exp;
        const S e = exp(x[1] - x[0]);
        MatrixX<S> jac(2, 2);
        jac << -e, e, e, -e;
        return jac;
    }
    bool has_gradient() const { return true; }
    template <typename S>
    VectorX<S> gradient(const VectorX<S>&) const
    {
        return VectorX<S>::Ones(2);
    }
};

// Field and integral given by expression trees; Jacobian and gradient are the
// symbolic derivatives of those trees.
struct ExpressionImpl {
    std::vector<Expression> f;
    Expression h;
    std::vector<std::vector<Expression>> df; // df[i][j] = ∂f_i/∂x_j
    std::vector<Expression> dh;

    template <typename S>
    VectorX<S> field(const VectorX<S>& x) const
    {
        VectorX<S> out(static_cast<Eigen::Index>(f.size()));
        for (std::size_t i = 0; i < f.size(); ++i)
            out[static_cast<Eigen::Index>(i)] = f[i].evaluate(x);
        return out;
    }
    template <typename S>
    S integral(const VectorX<S>& x) const
    {
        return h.evaluate(x);
    }
    bool has_jacobian() const { return true; }
    template <typename S>
    MatrixX<S> jacobian(const VectorX<S>& x) const
    {
        const auto n = static_cast<Eigen::Index>(f.size());
        MatrixX<S> jac(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                jac(i, j) = df[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].evaluate(x);
        return jac;
    }
    bool has_gradient() const { return true; }
    template <typename S>
    VectorX<S> gradient(const VectorX<S>& x) const
    {
        VectorX<S> grad(static_cast<Eigen::Index>(dh.size()));
        for (std::size_t j = 0; j < dh.size(); ++j)
            grad[static_cast<Eigen::Index>(j)] = dh[j].evaluate(x);
        return grad;
    }
};

Matrix matrix_from_json(const json& j)
{
    if (!j.is_array() || j.empty())
        throw SpecError("matrix must be a nonempty array of rows");
    const auto n = static_cast<Eigen::Index>(j.size());
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
            throw SpecError("matrix must be square");
        for (Eigen::Index k = 0; k < n; ++k)
            m(i, k) = row[static_cast<std::size_t>(k)].get<double>();
    }
    return m;
}

Vector vector_from_json(const json& j)
{
    if (!j.is_array())
        throw SpecError("expected an array of numbers");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

} // namespace

SystemSpec metzler_linear(const Matrix& a)
{
    const Eigen::Index n = a.rows();
    if (n < 1 || a.cols() != n)
        throw SpecError("metzler_linear: A must be square");
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j && a(i, j) < 0.0)
                throw SpecError("metzler_linear: off-diagonal entries must be nonnegative");
    for (Eigen::Index j = 0; j < n; ++j) {
        const double scale = a.col(j).cwiseAbs().sum();
        if (std::abs(a.col(j).sum()) > 1e-12 * (1.0 + scale))
            throw SpecError("metzler_linear: every column must sum to zero");
    }
    if (n > 1 && !strongly_connected(a, 0.0))
        throw SpecError("metzler_linear: A must be irreducible");
    MetzlerImpl impl{a, a.cast<long double>()};
    return SystemSpec("metzler_linear", static_cast<int>(n),
                      std::make_shared<detail::GenericModel<MetzlerImpl>>(std::move(impl)), DomainSpec::all_space());
}

std::vector<std::string> builtin_names() { return {"metzler_linear", "cyclic_compartment", "driftless_exchange"}; }

SystemSpec builtin(const std::string& name) { return builtin(name, json::object()); }

SystemSpec builtin(const std::string& name, const json& params)
{
    const json p = params.is_null() ? json::object() : params;
    if (!p.is_object())
        throw SpecError("builtin params must be an object");
    if (name == "metzler_linear") {
        Matrix a(2, 2);
        a << -1.0, 1.0, 1.0, -1.0;
        if (p.contains("A"))
            a = matrix_from_json(p.at("A"));
        return metzler_linear(a);
    }
    if (name == "cyclic_compartment") {
        const int n = p.value("n", 3);
        if (n < 2)
            throw SpecError("cyclic_compartment: n must be at least 2");
        return SystemSpec("cyclic_compartment", n, std::make_shared<detail::GenericModel<CyclicImpl>>(CyclicImpl{n}),
                          DomainSpec::all_space());
    }
    if (name == "driftless_exchange") {
        return SystemSpec("driftless_exchange", 2,
                          std::make_shared<detail::GenericModel<DriftlessImpl>>(DriftlessImpl{}),
                          DomainSpec::all_space());
    }
    throw SpecError("unknown system '" + name + "'");
}

DomainSpec domain_from_json(const json& j, int dim)
{
    if (j.is_null())
        return DomainSpec::all_space();
    const std::string kind = j.is_string() ? j.get<std::string>() : j.value("kind", std::string("all_space"));
    if (kind == "all_space")
        return DomainSpec::all_space();
    if (kind == "positive_orthant")
        return DomainSpec::positive_orthant();
    if (kind == "open_box") {
        Vector lo = vector_from_json(j.at("lower"));
        Vector hi = vector_from_json(j.at("upper"));
        if (lo.size() != dim || hi.size() != dim)
            throw SpecError("open_box bounds do not match dimension " + std::to_string(dim));
        return DomainSpec::open_box(std::move(lo), std::move(hi));
    }
    throw SpecError("unknown domain kind '" + kind + "'");
}

SystemSpec system_from_json(const json& doc)
{
    const json& j = doc.contains("system") ? doc.at("system") : doc;
    if (!j.is_object())
        throw SpecError("system declaration must be an object");
    if (j.contains("builtin"))
        return builtin(j.at("builtin").get<std::string>(), j.value("params", json::object()));

    if (!j.contains("dim") || !j.contains("field") || !j.contains("integral"))
        throw SpecError("system declaration needs either 'builtin' or 'dim', 'field' and 'integral'");
    const int n = j.at("dim").get<int>();
    if (n < 1)
        throw SpecError("dim must be positive");
    const json& field = j.at("field");
    if (!field.is_array())
        throw SpecError("'field' must be an array of expressions");
    if (static_cast<int>(field.size()) != n)
        throw SpecError("dimension mismatch: dim = " + std::to_string(n) + " but field has " +
                        std::to_string(field.size()) + " components");

    std::map<std::string, double> constants;
    if (j.contains("constants"))
        for (const auto& [k, v] : j.at("constants").items())
            constants[k] = v.get<double>();

    auto parse_one = [&](const std::string& text, const std::string& where) {
        try {
            Expression e = parse_expression(text, constants);
            if (e.max_variable() >= n)
                throw SpecError("dimension mismatch: " + where + " references x" + std::to_string(e.max_variable() + 1) +
                                " but dim = " + std::to_string(n));
            return e;
        } catch (const ParseError& err) {
            throw ParseError(where + ": " + err.what(), err.line(), err.column());
        }
    };

    ExpressionImpl impl;
    for (int i = 0; i < n; ++i)
        impl.f.push_back(parse_one(field[static_cast<std::size_t>(i)].get<std::string>(), "field[" + std::to_string(i) + "]"));
    impl.h = parse_one(j.at("integral").get<std::string>(), "integral");
    impl.df.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            impl.df[static_cast<std::size_t>(i)].push_back(impl.f[static_cast<std::size_t>(i)].derivative(k));
    for (int k = 0; k < n; ++k)
        impl.dh.push_back(impl.h.derivative(k));

    DomainSpec domain = domain_from_json(j.value("domain", json()), n);
    return SystemSpec(j.value("name", std::string("expression")), n,
                      std::make_shared<detail::GenericModel<ExpressionImpl>>(std::move(impl)), std::move(domain));
}

SystemSpec parse_system(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& err) {
        // Translate the byte offset into line/column.
        const std::size_t offset = std::min<std::size_t>(err.byte > 0 ? err.byte - 1 : 0, text.size());
        int line = 1;
        int column = 1;
        for (std::size_t i = 0; i < offset; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw ParseError("configuration parse error at line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ": " + err.what(),
                         line, column);
    }
    try {
        return system_from_json(doc);
    } catch (const json::exception& err) {
        throw SpecError(std::string("malformed system declaration: ") + err.what());
    }
}

ConsistencyReport check_consistency(const SystemSpec& sys, const std::vector<Vector>& points)
{
    ConsistencyReport rep;
    for (const Vector& x : points) {
        const Vector f = sys.field(x);
        const Vector g = sys.integral_gradient(x);
        const double orth = std::abs(g.dot(f)) / (1.0 + g.norm() * f.norm());
        if (orth > rep.worst_orthogonality || rep.worst_orthogonality_point.size() == 0) {
            rep.worst_orthogonality = orth;
            rep.worst_orthogonality_point = x;
        }
        if (sys.has_analytic_jacobian()) {
            const Matrix ja = sys.jacobian(x);
            const Matrix jf = sys.fd_jacobian(x);
            rep.worst_jacobian_mismatch =
                std::max(rep.worst_jacobian_mismatch, (ja - jf).norm() / std::max(1.0, ja.norm()));
        }
        if (sys.has_analytic_gradient()) {
            const Vector gf = sys.fd_gradient(x);
            rep.worst_gradient_mismatch =
                std::max(rep.worst_gradient_mismatch, (g - gf).norm() / std::max(1.0, g.norm()));
        }
    }
    rep.orthogonality_holds = rep.worst_orthogonality <= 1e-9;
    rep.derivatives_hold = rep.worst_jacobian_mismatch <= 1e-5 && rep.worst_gradient_mismatch <= 1e-5;
    return rep;
}

} // namespace finsler_flow
