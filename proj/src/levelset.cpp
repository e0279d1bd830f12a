#include "finsler_flow/levelset.hpp"

#include "finsler_flow/csv.hpp"
#include "finsler_flow/finsler.hpp"
#include "finsler_flow/parallel.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace finsler_flow {

namespace {

double level_tol(double r) { return kLevelTol * (1.0 + std::abs(r)); }

} // namespace

Point project_to_level(const SystemSpec& sys, const Vector& x, double r)
{
    if (!sys.in_domain(x))
        throw FlowError("project_to_level: point outside the domain");
    const Vector g = sys.integral_gradient(x);
    if (!(g.squaredNorm() > 0.0))
        throw FlowError("project_to_level: grad H vanishes");
    const double tol = 1e-12 * (1.0 + std::abs(r));
    double s = 0.0;
    Vector y = x;
    double phi = sys.integral(y) - r;
    for (int it = 0; it < 50; ++it) {
        if (std::abs(phi) <= tol)
            return {y, sys.integral(y)};
        const double slope = sys.integral_gradient(y).dot(g);
        if (!(slope > 0.0))
            throw FlowError("project_to_level: H is not increasing along grad H");
        double step = -phi / slope;
        // Halve until the residual shrinks and the iterate stays inside.
        for (int k = 0; k < 60; ++k) {
            const Vector cand = x + (s + step) * g;
            if (sys.in_domain(cand)) {
                const double phi_c = sys.integral(cand) - r;
                if (std::abs(phi_c) < std::abs(phi) || k == 59) {
                    s += step;
                    y = cand;
                    phi = phi_c;
                    break;
                }
            } else if (k == 59) {
                throw FlowError("project_to_level: iterate left the domain");
            }
            step *= 0.5;
        }
    }
    if (std::abs(phi) <= tol)
        return {y, sys.integral(y)};
    throw FlowError("project_to_level: no convergence (residual " + std::to_string(phi) + ")");
}

namespace {

// Point of H = r on lo -> m -> hi, the two legs parametrized by τ in [0, 1] and [1, 2].
Vector tent_crossing(const SystemSpec& sys, const Vector& lo, const Vector& m, const Vector& hi, double r)
{
    auto at = [&](double tau) -> Vector { return tau <= 1.0 ? Vector(lo + tau * (m - lo)) : Vector(m + (tau - 1.0) * (hi - m)); };
    auto phi = [&](double tau) { return sys.integral(at(tau)) - r; };
    double a = 0.0;
    double b = 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b)
            break;
        if (phi(mid) < 0.0)
            a = mid;
        else
            b = mid;
    }
    double tau = std::abs(phi(a)) <= std::abs(phi(b)) ? a : b;
    double res = phi(tau);
    for (int it = 0; it < 3; ++it) {
        const Vector dir = tau < 1.0 ? Vector(m - lo) : Vector(hi - m);
        const double slope = sys.integral_gradient(at(tau)).dot(dir);
        if (!(slope > 0.0))
            break;
        const double cand = std::clamp(tau - res / slope, 0.0, 2.0);
        const double rc = phi(cand);
        if (!(std::abs(rc) < std::abs(res)))
            break;
        tau = cand;
        res = rc;
    }
    if (std::abs(res) > level_tol(r))
        throw FlowError("order_path: level crossing not resolved (residual " + std::to_string(res) + ")");
    return at(tau);
}

constexpr double kGaussNode = 0.38729833462074168852; // sqrt(3/5)/2

double chord_integrand(const SystemSpec& sys, const Vector& p, const Vector& delta, double s)
{
    const Vector q = p + s * delta;
    const Vector g = sys.integral_gradient(q);
    const Vector d = project_to_tangent(g, delta);
    if (!(d.norm() > 1e-12 * delta.norm()))
        throw FlowError("segment is normal to the level set; cannot measure its length");
    return gauge_norm(g, d);
}

double gauss3(const SystemSpec& sys, const Vector& p, const Vector& delta, double a, double b)
{
    const double c = 0.5 * (a + b);
    const double w = b - a;
    return w * (5.0 / 18.0 * chord_integrand(sys, p, delta, c - kGaussNode * w) +
                8.0 / 18.0 * chord_integrand(sys, p, delta, c) +
                5.0 / 18.0 * chord_integrand(sys, p, delta, c + kGaussNode * w));
}

double adaptive_gauss(const SystemSpec& sys, const Vector& p, const Vector& delta, double a, double b, double whole,
                      double tol, int depth)
{
    const double mid = 0.5 * (a + b);
    const double left = gauss3(sys, p, delta, a, mid);
    const double right = gauss3(sys, p, delta, mid, b);
    if (std::abs(left + right - whole) <= tol || depth >= 30)
        return left + right;
    return adaptive_gauss(sys, p, delta, a, mid, left, 0.5 * tol, depth + 1) +
           adaptive_gauss(sys, p, delta, mid, b, right, 0.5 * tol, depth + 1);
}

} // namespace

LevelPath order_path(const SystemSpec& sys, const Vector& y, const Vector& z, int grid)
{
    if (grid < 2)
        throw SpecError("order_path: grid must have at least two nodes");
    if (y.size() != sys.dim() || z.size() != sys.dim())
        throw SpecError("order_path: dimension mismatch");
    if (!sys.in_domain(y) || !sys.in_domain(z))
        throw SpecError("order_path: endpoint outside the domain");
    if (y == z)
        throw SpecError("order_path: endpoints coincide");
    const double r = sys.integral(z);
    if (std::abs(sys.integral(y) - r) > level_tol(r))
        throw SpecError("order_path: endpoints lie on different level sets");

    const Vector lo = meet(y, z);
    const Vector hi = join(y, z);
    LevelPath path;
    path.level = r;
    path.nodes.resize(static_cast<std::size_t>(grid));
    path.lambdas.resize(static_cast<std::size_t>(grid));
    for (int k = 0; k < grid; ++k) {
        const double lambda = static_cast<double>(k) / static_cast<double>(grid - 1);
        path.lambdas[static_cast<std::size_t>(k)] = lambda;
        if (k == 0)
            path.nodes[0] = z;
        else if (k == grid - 1)
            path.nodes[static_cast<std::size_t>(k)] = y;
        else
            path.nodes[static_cast<std::size_t>(k)] = tent_crossing(sys, lo, lambda * y + (1.0 - lambda) * z, hi, r);
    }
    measure_path(sys, path);
    return path;
}

double segment_length(const SystemSpec& sys, const Vector& p, const Vector& q)
{
    const Vector delta = q - p;
    if (delta.norm() == 0.0)
        return 0.0;
    const double whole = gauss3(sys, p, delta, 0.0, 1.0);
    return adaptive_gauss(sys, p, delta, 0.0, 1.0, whole, 1e-8 * std::abs(whole), 0);
}

double curve_length(const SystemSpec& sys, const std::vector<Vector>& nodes)
{
    if (nodes.empty())
        return 0.0;
    const double r = sys.integral(nodes.front());
    double total = 0.0;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (std::abs(sys.integral(nodes[k]) - r) > level_tol(r))
            throw SpecError("curve_length: nodes do not share a level set");
        if (k > 0)
            total += segment_length(sys, nodes[k - 1], nodes[k]);
    }
    return total;
}

void measure_path(const SystemSpec& sys, LevelPath& path)
{
    path.lengths.assign(path.nodes.size(), 0.0);
    path.max_residual = 0.0;
    for (std::size_t k = 0; k < path.nodes.size(); ++k) {
        path.max_residual = std::max(path.max_residual, std::abs(sys.integral(path.nodes[k]) - path.level));
        if (k > 0)
            path.lengths[k] = path.lengths[k - 1] + segment_length(sys, path.nodes[k - 1], path.nodes[k]);
    }
}

DistanceEstimate finsler_distance_upper(const SystemSpec& sys, const Vector& y, const Vector& z, int refine_rounds)
{
    if (refine_rounds < 0)
        throw SpecError("finsler_distance_upper: refine_rounds must be non-negative");
    DistanceEstimate est;
    if (y.size() == z.size() && y == z) {
        if (!sys.in_domain(y))
            throw SpecError("finsler_distance_upper: point outside the domain");
        est.path.level = sys.integral(y);
        est.path.nodes = {y};
        est.path.lambdas = {0.0};
        est.path.lengths = {0.0};
        est.history = {0.0};
        return est;
    }
    est.path = order_path(sys, y, z, 65);
    auto& nodes = est.path.nodes;
    const double r = est.path.level;
    std::vector<double> seg(nodes.size() - 1);
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k)
        seg[k] = segment_length(sys, nodes[k], nodes[k + 1]);
    auto total = [&] {
        double s = 0.0;
        for (double v : seg)
            s += v;
        return s;
    };
    est.history.push_back(total());

    auto relax = [&](std::size_t k) {
        const Vector& a = nodes[k - 1];
        const Vector& b = nodes[k + 1];
        const double current = seg[k - 1] + seg[k];
        const Vector target = 0.5 * (a + b);
        double alpha = 1.0;
        for (int attempt = 0; attempt < 4; ++attempt, alpha *= 0.5) {
            const Vector cand = nodes[k] + alpha * (target - nodes[k]);
            if (!sys.in_domain(cand))
                continue;
            try {
                const Point q = project_to_level(sys, cand, r);
                const double left = segment_length(sys, a, q.coords);
                const double right = segment_length(sys, q.coords, b);
                if (left + right < current * (1.0 - 1e-14)) {
                    nodes[k] = q.coords;
                    seg[k - 1] = left;
                    seg[k] = right;
                    return;
                }
            } catch (const FlowError&) {
            }
        }
    };

    // Interior nodes of one parity never share a segment, so each half-sweep
    // is order independent (and so symmetric under reversing the path).
    for (int round = 0; round < refine_rounds; ++round) {
        for (std::size_t parity = 0; parity < 2; ++parity)
            for (std::size_t k = 1; k + 1 < nodes.size(); ++k)
                if (k % 2 == parity)
                    relax(k);
        est.history.push_back(total());
    }
    measure_path(sys, est.path);
    est.upper = est.history.back();
    return est;
}

Point ray_level_intersect(const SystemSpec& sys, const Vector& x, double r)
{
    if (x.size() != sys.dim())
        throw SpecError("ray_level_intersect: dimension mismatch");
    if (!((x.array() >= 0.0).all() && (x.array() > 0.0).any()))
        throw SpecError("ray_level_intersect: x must satisfy x > 0");
    if (!sys.in_domain(x))
        throw SpecError("ray_level_intersect: x outside the domain");
    auto phi = [&](double s) { return sys.integral(Vector(s * x)) - r; };
    const double h0 = phi(1.0);
    if (h0 > 0.0)
        throw SpecError("ray_level_intersect: requires H(x) < r");
    const double tol = 1e-12 * (1.0 + std::abs(r));
    if (std::abs(h0) <= tol)
        return {x, sys.integral(x)};

    double a = 1.0;
    double b = 2.0;
    for (int k = 0;; ++k) {
        if (k > 200 || !sys.in_domain(Vector(b * x)))
            throw FlowError("ray_level_intersect: the ray does not reach the level set");
        const double pb = phi(b);
        if (pb == 0.0)
            return {Vector(b * x), sys.integral(Vector(b * x))};
        if (pb > 0.0)
            break;
        a = b;
        b *= 2.0;
    }
    double s = 0.5 * (a + b);
    for (int it = 0; it < 400; ++it) {
        const double ps = phi(s);
        if (std::abs(ps) <= tol)
            return {Vector(s * x), sys.integral(Vector(s * x))};
        if (ps < 0.0)
            a = s;
        else
            b = s;
        const double slope = sys.integral_gradient(Vector(s * x)).dot(x);
        double next = slope > 0.0 ? s - ps / slope : 0.5 * (a + b);
        if (!(next >= a && next <= b))
            next = 0.5 * (a + b);
        if (next == s)
            break;
        s = next;
    }
    const double ps = phi(s);
    if (std::abs(ps) <= tol)
        return {Vector(s * x), sys.integral(Vector(s * x))};
    throw FlowError("ray_level_intersect: no convergence (residual " + std::to_string(ps) + ")");
}

std::vector<Vector> sample_level_points(const SystemSpec& sys, double r, int count, std::uint64_t seed,
                                        const std::optional<SamplingWindow>& window)
{
    if (count <= 0)
        return {};
    const SamplingWindow win = window ? *window : default_window(sys.domain(), sys.dim());
    const auto candidates = sample_points(sys.domain(), win, 8 * count, seed);
    std::vector<Vector> out;
    for (const auto& c : candidates) {
        if (static_cast<int>(out.size()) >= count)
            break;
        try {
            out.push_back(project_to_level(sys, c, r).coords);
        } catch (const FlowError&) {
        }
    }
    return out;
}

std::optional<Vector> newton_equilibrium(const SystemSpec& sys, double r, const Vector& start, int max_iterations)
{
    const Eigen::Index n = sys.dim();
    if (!sys.in_domain(start))
        return std::nullopt;
    auto residual = [&](const Vector& x) {
        Vector f(n + 1);
        f.head(n) = sys.field(x);
        f[n] = sys.integral(x) - r;
        return f;
    };
    // Rows are equilibrated before the least-squares solve: with Df ~ e^u
    // next to grad H ~ 1 (driftless exchange) the raw columns are parallel to
    // working precision and the Newton direction is lost.
    auto newton_step = [&](const Vector& x, const Vector& f) -> Vector {
        Matrix j(n + 1, n);
        j.topRows(n) = sys.jacobian(x);
        j.row(n) = sys.integral_gradient(x).transpose();
        Vector rhs = -f;
        for (Eigen::Index i = 0; i <= n; ++i) {
            const double s = j.row(i).norm();
            if (s > 0.0 && std::isfinite(s)) {
                j.row(i) /= s;
                rhs[i] /= s;
            }
        }
        return j.colPivHouseholderQr().solve(rhs);
    };
    Vector x = start;
    Vector f = residual(x);
    if (!f.allFinite())
        return std::nullopt;
    for (int it = 0; it < max_iterations; ++it) {
        const Vector step = newton_step(x, f);
        if (!step.allFinite())
            return std::nullopt;
        if (f.head(n).norm() <= 1e-9 && std::abs(f[n]) <= level_tol(r) && step.norm() <= 1e-8 * (1.0 + x.norm())) {
            const Vector polished = x + step;
            if (sys.in_domain(polished)) {
                const Vector fp = residual(polished);
                if (fp.allFinite() && fp.norm() <= f.norm())
                    return polished;
            }
            return x;
        }
        const double fn = f.norm();
        double alpha = 1.0;
        bool moved = false;
        for (int k = 0; k < 30; ++k, alpha *= 0.5) {
            const Vector cand = x + alpha * step;
            if (!sys.in_domain(cand))
                continue;
            const Vector fc = residual(cand);
            if (fc.allFinite() && fc.norm() < fn) {
                x = cand;
                f = fc;
                moved = true;
                break;
            }
        }
        if (!moved)
            return std::nullopt;
    }
    return std::nullopt;
}

int EquilibriumSearch::converged() const
{
    return static_cast<int>(std::count_if(results.begin(), results.end(), [](const auto& r) { return r.has_value(); }));
}

EquilibriumSearch search_equilibria(const SystemSpec& sys, double r, int multistarts, const IntegratorConfig& cfg,
                                    std::uint64_t seed, const std::optional<SamplingWindow>& window, double horizon)
{
    if (multistarts <= 0)
        throw SpecError("search_equilibria: multistarts must be positive");
    EquilibriumSearch out;
    out.seeds = sample_level_points(sys, r, multistarts, seed, window);
    out.results.assign(out.seeds.size(), std::nullopt);
    std::vector<int> fallback(out.seeds.size(), 0);
    parallel_for(out.seeds.size(), [&](std::size_t i) {
        auto root = newton_equilibrium(sys, r, out.seeds[i]);
        if (!root) {
            fallback[i] = 1;
            try {
                const auto traj = integrate<double>(sys, out.seeds[i], horizon, cfg);
                const Vector end = traj.state(traj.size() - 1);
                if (sys.in_domain(end) && end.allFinite())
                    root = newton_equilibrium(sys, r, end);
            } catch (const FlowError&) {
            }
        }
        out.results[i] = root;
    });
    for (std::size_t i = 0; i < out.results.size(); ++i) {
        out.integration_fallbacks += fallback[i];
        if (out.results[i] && !fallback[i])
            ++out.newton_successes;
        if (out.results[i] && !out.equilibrium)
            out.equilibrium = make_point(sys, *out.results[i]);
    }
    if (out.equilibrium)
        for (const auto& res : out.results)
            if (res)
                out.spread = std::max(out.spread, (*res - out.equilibrium->coords).norm());
    return out;
}

std::optional<Point> find_equilibrium_on_level(const SystemSpec& sys, double r, int multistarts,
                                               const IntegratorConfig& cfg, std::uint64_t seed)
{
    return search_equilibria(sys, r, multistarts, cfg, seed).equilibrium;
}

const char* to_string(LevelVerdict v)
{
    switch (v) {
    case LevelVerdict::UniqueAttractor:
        return "unique_attractor";
    case LevelVerdict::NoEquilibrium:
        return "no_equilibrium";
    case LevelVerdict::Inconclusive:
        return "inconclusive";
    }
    return "inconclusive";
}

LevelVerdict level_verdict_from_string(const std::string& s)
{
    if (s == "unique_attractor")
        return LevelVerdict::UniqueAttractor;
    if (s == "no_equilibrium")
        return LevelVerdict::NoEquilibrium;
    if (s == "inconclusive")
        return LevelVerdict::Inconclusive;
    throw std::invalid_argument("unknown level verdict: " + s);
}

namespace {

template <typename Scalar>
Scalar field_gauge(const SystemSpec& sys, const VectorX<Scalar>& x)
{
    return gauge_norm(sys.integral_gradient<Scalar>(x), sys.field<Scalar>(x));
}

// |f|_x along the accepted steps never increases (relative slack 1e-12).
template <typename Scalar>
bool gauge_nonincreasing(const SystemSpec& sys, const Trajectory<Scalar>& traj, Scalar& last)
{
    bool ok = true;
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const Scalar v = field_gauge<Scalar>(sys, traj.state(k));
        if (k > 0 && v > last * Scalar(1 + 1e-12) + Scalar(1e-300))
            ok = false;
        last = v;
    }
    return ok;
}

SampleEvidence attraction_evidence(const SystemSpec& sys, const Vector& start, const Vector& eq,
                                   const LevelBudget& budget)
{
    SampleEvidence ev;
    ev.start = start;
    const auto traj = integrate<double>(sys, start, budget.horizon, budget.cfg);
    ev.status = traj.status();
    ev.end = traj.state(traj.size() - 1);
    ev.log10_end_time = std::log10(traj.t_end());
    ev.distance_to_equilibrium = (ev.end - eq).norm();
    double last = 0.0;
    ev.lyapunov_decreasing = gauge_nonincreasing(sys, traj, last);
    if (last > 0.0)
        ev.log10_field_norm = std::log10(last);
    else
        ev.log10_field_norm = -std::numeric_limits<double>::infinity();
    ev.converged = ev.status == FlowStatus::Complete && ev.distance_to_equilibrium <= budget.attraction_tol;
    return ev;
}

// Follows the orbit beyond the horizon in extended precision until |x|
// passes the escape radius; the time needed can exceed the double range.
// Blow-up or domain exit before the horizon is recorded as a finite-time
// escape, which the classifier does not count as divergence evidence.
SampleEvidence escape_evidence(const SystemSpec& sys, const Vector& start, const LevelBudget& budget)
{
    using LD = long double;
    SampleEvidence ev;
    ev.start = start;
    const auto head = integrate<double>(sys, start, budget.horizon, budget.cfg);
    double last_d = 0.0;
    bool decreasing = gauge_nonincreasing(sys, head, last_d);
    ev.status = head.status();
    ev.end = head.state(head.size() - 1);
    LD elapsed = static_cast<LD>(head.t_end());
    LD gauge_end = static_cast<LD>(last_d);

    if (ev.status != FlowStatus::Complete) {
        ev.finite_time_escape = ev.status != FlowStatus::StepLimit;
    } else if (ev.end.norm() <= budget.escape_radius) {
        IntegratorConfig ext = budget.cfg;
        ext.blowup_norm = budget.escape_radius;
        ext.max_time = std::numeric_limits<double>::infinity();
        const VectorX<LD> x0 = ev.end.cast<LD>();
        const auto tail = integrate<LD>(sys, x0, LD(1e4000L), ext);
        LD last = static_cast<LD>(last_d);
        decreasing = gauge_nonincreasing(sys, tail, last) && decreasing;
        const VectorX<LD> end = tail.state(tail.size() - 1);
        ev.end = end.cast<double>();
        ev.status = tail.status();
        elapsed += tail.t_end();
        gauge_end = last;
        const bool reached = end.norm() > LD(budget.escape_radius);
        if (!reached && (ev.status == FlowStatus::ForwardBlowup || ev.status == FlowStatus::LeftDomain))
            ev.finite_time_escape = true;
    }
    ev.log10_end_time = static_cast<double>(std::log10(elapsed));
    ev.log10_field_norm = gauge_end > LD(0) ? static_cast<double>(std::log10(gauge_end))
                                            : -std::numeric_limits<double>::infinity();
    ev.lyapunov_decreasing = decreasing;
    ev.escaped = !ev.finite_time_escape && decreasing && ev.end.norm() > budget.escape_radius &&
                 gauge_end < LD(budget.escape_field);
    return ev;
}

} // namespace

LevelSetAnalysis classify_level_set(const SystemSpec& sys, double r, const LevelBudget& budget)
{
    if (budget.samples <= 0 || budget.multistarts <= 0)
        throw SpecError("classify_level_set: samples and multistarts must be positive");
    if (!(budget.horizon > 0.0))
        throw SpecError("classify_level_set: horizon must be positive");
    LevelSetAnalysis out;
    out.level = r;
    out.horizon = budget.horizon;

    const auto search = search_equilibria(sys, r, budget.multistarts, budget.cfg, budget.seed, budget.window,
                                          budget.horizon);
    out.multistart_count = static_cast<int>(search.seeds.size());
    out.multistart_converged = search.converged();
    out.multistart_spread = search.spread;
    out.equilibrium = search.equilibrium;

    const auto starts = sample_level_points(sys, r, budget.samples, budget.seed + 1, budget.window);
    if (starts.empty()) {
        out.reason = "no sample points could be placed on the level set";
        return out;
    }
    out.samples.resize(starts.size());

    if (search.equilibrium) {
        if (search.spread > budget.uniqueness_tol) {
            out.reason = "multistart Newton found distinct equilibria";
            return out;
        }
        const Vector eq = search.equilibrium->coords;
        parallel_for(starts.size(), [&](std::size_t i) { out.samples[i] = attraction_evidence(sys, starts[i], eq, budget); });
        const bool all = std::all_of(out.samples.begin(), out.samples.end(), [](const auto& s) { return s.converged; });
        if (all)
            out.verdict = LevelVerdict::UniqueAttractor;
        else
            out.reason = "some sampled orbits had not reached the equilibrium by the horizon";
        return out;
    }

    parallel_for(starts.size(), [&](std::size_t i) { out.samples[i] = escape_evidence(sys, starts[i], budget); });
    const bool all = std::all_of(out.samples.begin(), out.samples.end(), [](const auto& s) { return s.escaped; });
    const bool finite = std::any_of(out.samples.begin(), out.samples.end(), [](const auto& s) { return s.finite_time_escape; });
    if (all)
        out.verdict = LevelVerdict::NoEquilibrium;
    else if (finite)
        out.reason = "a sampled orbit escaped in finite time; forward completeness on the level set is not established";
    else
        out.reason = "no equilibrium found, but not every sampled orbit escaped";
    return out;
}

OrderedEquilibria ordered_equilibria_check(const SystemSpec& sys, const std::vector<double>& levels,
                                           const LevelBudget& budget)
{
    if (levels.size() < 2)
        throw SpecError("ordered_equilibria_check: need at least two levels");
    OrderedEquilibria out;
    out.levels = levels;
    std::sort(out.levels.begin(), out.levels.end());
    for (std::size_t k = 1; k < out.levels.size(); ++k)
        if (!(out.levels[k] > out.levels[k - 1]))
            throw SpecError("ordered_equilibria_check: levels must be distinct");
    for (double r : out.levels) {
        const auto eq = find_equilibrium_on_level(sys, r, budget.multistarts, budget.cfg, budget.seed);
        if (!eq)
            throw FlowError("no equilibrium found on level " + std::to_string(r));
        out.equilibria.push_back(eq->coords);
    }
    out.min_margin = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < out.equilibria.size(); ++k)
        out.min_margin = std::min(out.min_margin, (out.equilibria[k] - out.equilibria[k - 1]).minCoeff());
    out.verdict = out.min_margin > kLevelTol ? Verdict::Holds : Verdict::Fails;
    return out;
}

std::string path_csv(const LevelPath& path)
{
    const int n = path.nodes.empty() ? 0 : static_cast<int>(path.nodes.front().size());
    std::vector<std::string> cols{"lambda"};
    for (int i = 1; i <= n; ++i)
        cols.push_back("x" + std::to_string(i));
    std::string out = csv_header(cols);
    for (std::size_t k = 0; k < path.nodes.size(); ++k) {
        std::vector<double> row{path.lambdas[k]};
        row.insert(row.end(), path.nodes[k].data(), path.nodes[k].data() + n);
        out += csv_row(row);
    }
    return out;
}

} // namespace finsler_flow
