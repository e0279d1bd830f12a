#include "finsler_flow/structure.hpp"

#include <limits>
#include <stdexcept>

namespace finsler_flow {

Verdict verdict_from_string(const std::string& s)
{
    if (s == "holds")
        return Verdict::Holds;
    if (s == "fails")
        return Verdict::Fails;
    if (s == "inconclusive")
        return Verdict::Inconclusive;
    throw std::invalid_argument("unknown verdict '" + s + "'");
}

namespace {

std::vector<Vector> draw(const SystemSpec& sys, int samples, std::uint64_t seed,
                         const std::optional<SamplingWindow>& window)
{
    if (samples <= 0)
        return {};
    return sample_points(sys.domain(), window ? *window : default_window(sys.domain(), sys.dim()), samples, seed);
}

} // namespace

std::vector<int> reachable_from_first(const Matrix& m, bool forward)
{
    const int n = static_cast<int>(m.rows());
    if (n == 0)
        return {};
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::vector<int> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
        const int j = stack.back();
        stack.pop_back();
        for (int i = 0; i < n; ++i) {
            if (i == j || seen[static_cast<std::size_t>(i)])
                continue;
            // edge j -> i iff f_i depends on x_j
            const double w = forward ? m(i, j) : m(j, i);
            if (std::abs(w) > kStructuralZero) {
                seen[static_cast<std::size_t>(i)] = true;
                stack.push_back(i);
            }
        }
    }
    std::vector<int> out;
    for (int i = 0; i < n; ++i)
        if (seen[static_cast<std::size_t>(i)])
            out.push_back(i);
    return out;
}

CooperativeCheck check_cooperative(const SystemSpec& sys, int samples, std::uint64_t seed,
                                   const std::optional<SamplingWindow>& window)
{
    CooperativeCheck out;
    const auto points = draw(sys, samples, seed, window);
    out.samples = static_cast<int>(points.size());
    if (points.empty())
        return out;

    const int n = sys.dim();
    out.worst_off_diagonal = std::numeric_limits<double>::infinity();
    out.min_positive_off_diagonal = std::numeric_limits<double>::infinity();
    for (const Vector& x : points) {
        const Matrix jac = sys.jacobian(x);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (i == j)
                    continue;
                const double v = jac(i, j);
                if (v < out.worst_off_diagonal) {
                    out.worst_off_diagonal = v;
                    out.witness = x;
                    out.row = i;
                    out.col = j;
                }
                if (v > kStructuralZero)
                    out.min_positive_off_diagonal = std::min(out.min_positive_off_diagonal, v);
            }
        }
    }
    if (n == 1) {
        out.worst_off_diagonal = 0.0;
        out.witness = points.front();
    }
    if (!std::isfinite(out.min_positive_off_diagonal))
        out.min_positive_off_diagonal = 0.0;
    out.verdict = out.worst_off_diagonal >= -kStructuralZero ? Verdict::Holds : Verdict::Fails;
    return out;
}

IrreducibleCheck check_irreducible(const SystemSpec& sys, int samples, std::uint64_t seed,
                                   const std::optional<SamplingWindow>& window)
{
    IrreducibleCheck out;
    const auto points = draw(sys, samples, seed, window);
    out.samples = static_cast<int>(points.size());
    if (points.empty())
        return out;

    const int n = sys.dim();
    for (const Vector& x : points) {
        const Matrix jac = sys.jacobian(x);
        std::vector<int> fwd = reachable_from_first(jac, true);
        std::vector<int> closed;
        if (static_cast<int>(fwd.size()) < n) {
            closed = std::move(fwd);
        } else {
            // Everything is reachable from vertex 0; if not everything reaches 0,
            // the vertices that cannot reach it have no edge leaving them.
            const std::vector<int> bwd = reachable_from_first(jac, false);
            if (static_cast<int>(bwd.size()) == n)
                continue;
            std::vector<bool> in(static_cast<std::size_t>(n), false);
            for (int v : bwd)
                in[static_cast<std::size_t>(v)] = true;
            for (int v = 0; v < n; ++v)
                if (!in[static_cast<std::size_t>(v)])
                    closed.push_back(v);
        }
        std::vector<bool> in(static_cast<std::size_t>(n), false);
        for (int v : closed)
            in[static_cast<std::size_t>(v)] = true;
        out.component = closed;
        out.complement.clear();
        for (int v = 0; v < n; ++v)
            if (!in[static_cast<std::size_t>(v)])
                out.complement.push_back(v);
        out.witness = x;
        out.verdict = Verdict::Fails;
        return out;
    }
    out.witness = points.back();
    out.verdict = Verdict::Holds;
    return out;
}

GradientCheck check_positive_gradient(const SystemSpec& sys, int samples, std::uint64_t seed,
                                      const std::optional<SamplingWindow>& window)
{
    GradientCheck out;
    const auto points = draw(sys, samples, seed, window);
    out.samples = static_cast<int>(points.size());
    if (points.empty())
        return out;

    out.min_coordinate = std::numeric_limits<double>::infinity();
    out.max_coordinate = -std::numeric_limits<double>::infinity();
    for (const Vector& x : points) {
        const Vector g = sys.integral_gradient(x);
        Eigen::Index imin = 0;
        const double lo = g.minCoeff(&imin);
        if (lo < out.min_coordinate) {
            out.min_coordinate = lo;
            out.witness = x;
            out.witness_index = static_cast<int>(imin);
        }
        out.max_coordinate = std::max(out.max_coordinate, g.maxCoeff());
    }
    out.verdict = out.min_coordinate > kStructuralZero ? Verdict::Holds : Verdict::Fails;
    return out;
}

FirstIntegralCheck check_first_integral(const SystemSpec& sys, int samples, std::uint64_t seed,
                                        const std::optional<SamplingWindow>& window)
{
    FirstIntegralCheck out;
    const auto points = draw(sys, samples, seed, window);
    out.samples = static_cast<int>(points.size());
    if (points.empty())
        return out;
    const ConsistencyReport rep = check_consistency(sys, points);
    out.worst_ratio = rep.worst_orthogonality;
    out.witness = rep.worst_orthogonality_point;
    out.verdict = rep.orthogonality_holds ? Verdict::Holds : Verdict::Fails;
    return out;
}

bool StructureReport::all_hold() const
{
    return cooperative.verdict == Verdict::Holds && irreducible.verdict == Verdict::Holds &&
           positive_gradient.verdict == Verdict::Holds && first_integral.verdict == Verdict::Holds;
}

bool StructureReport::any_fails() const
{
    return cooperative.verdict == Verdict::Fails || irreducible.verdict == Verdict::Fails ||
           positive_gradient.verdict == Verdict::Fails || first_integral.verdict == Verdict::Fails;
}

StructureReport full_structure_report(const SystemSpec& sys, const SamplingBudget& budget)
{
    StructureReport rep;
    rep.cooperative = check_cooperative(sys, budget.samples, budget.seed, budget.window);
    rep.irreducible = check_irreducible(sys, budget.samples, budget.seed, budget.window);
    rep.positive_gradient = check_positive_gradient(sys, budget.samples, budget.seed, budget.window);
    rep.first_integral = check_first_integral(sys, budget.samples, budget.seed, budget.window);
    rep.gradient_lower = rep.positive_gradient.min_coordinate;
    rep.gradient_upper = rep.positive_gradient.max_coordinate;
    rep.samples_used = rep.cooperative.samples;
    return rep;
}

} // namespace finsler_flow
