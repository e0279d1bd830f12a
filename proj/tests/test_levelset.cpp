#include "finsler_flow/levelset.hpp"

#include "catalog.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace finsler_flow;

namespace {

Vector vec(std::initializer_list<double> xs)
{
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs)
        v[i++] = x;
    return v;
}

SystemSpec static_system(int dim, const std::string& integral, const std::string& domain = "all_space")
{
    nlohmann::json j;
    j["dim"] = dim;
    j["field"] = std::vector<std::string>(static_cast<std::size_t>(dim), "0");
    j["integral"] = integral;
    j["domain"] = {{"kind", domain}};
    return system_from_json(j);
}

// Positive gradient on the orthant, genuinely curved level sets.
SystemSpec cubic3()
{
    return static_system(3, "x1 + x2 + x3 + 0.1*(x1^3 + x2^3 + x3^3)", "positive_orthant");
}

std::vector<Vector> level_points(const SystemSpec& sys, double r, int count, std::uint64_t seed)
{
    SamplingWindow w{Vector::Constant(sys.dim(), 0.2), Vector::Constant(sys.dim(), 2.0)};
    return sample_level_points(sys, r, count, seed, w);
}

} // namespace

TEST(LevelSet, ProjectionExamples)
{
    const auto metz = builtin("metzler_linear");
    const Point p = project_to_level(metz, vec({1, 0}), 0.0);
    EXPECT_NEAR(p.coords[0], 0.5, 1e-15);
    EXPECT_NEAR(p.coords[1], -0.5, 1e-15);
    const Vector on = vec({0.25, -0.25});
    EXPECT_EQ(project_to_level(metz, on, 0.0).coords, on);
    const auto w3 = static_system(3, "x1 + 2*x2 + 3*x3");
    const Point q = project_to_level(w3, vec({1, 1, 1}), 0.0);
    EXPECT_LT((q.coords - (vec({1, 1, 1}) - (6.0 / 14.0) * vec({1, 2, 3}))).norm(), 1e-14);
    EXPECT_LE(std::abs(q.level), 1e-12);
}

TEST(LevelSet, ProjectionNonlinearAndErrors)
{
    const auto sys = cubic3();
    const Point p = project_to_level(sys, vec({1, 0.5, 2}), 4.0);
    EXPECT_LE(std::abs(sys.integral(p.coords) - 4.0), 1e-12 * 5);
    EXPECT_THROW(project_to_level(sys, vec({0.1, 0.1, 0.1}), -1.0), FlowError);
}

TEST(LevelSet, OrderPathExamples)
{
    const auto metz = builtin("metzler_linear");
    const auto path = order_path(metz, vec({1, -1}), vec({-1, 1}), 3);
    ASSERT_EQ(path.nodes.size(), 3u);
    EXPECT_LT((path.nodes[0] - vec({-1, 1})).norm(), 1e-12);
    EXPECT_LT(path.nodes[1].norm(), 1e-12);
    EXPECT_LT((path.nodes[2] - vec({1, -1})).norm(), 1e-12);
    EXPECT_EQ(path.lambdas, (std::vector<double>{0.0, 0.5, 1.0}));

    const auto h12 = static_system(2, "x1 + 2*x2");
    const auto p33 = order_path(h12, vec({2, -1}), vec({0, 0}), 33);
    ASSERT_EQ(p33.nodes.size(), 33u);
    for (const auto& x : p33.nodes)
        EXPECT_LE(std::abs(h12.integral(x)), 1e-9);
    EXPECT_LE(p33.max_residual, 1e-9);

    EXPECT_THROW(order_path(metz, vec({1, -1}), vec({1, -1}), 3), SpecError);
    EXPECT_THROW(order_path(metz, vec({1, -1}), vec({1, 1}), 3), SpecError);
    EXPECT_THROW(order_path(metz, vec({1, -1}), vec({-1, 1}), 1), SpecError);
}

TEST(LevelSet, OrderPathOnCurvedLevel)
{
    const auto sys = cubic3();
    const auto pts = level_points(sys, 4.0, 6, 3);
    ASSERT_GE(pts.size(), 2u);
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const auto path = order_path(sys, pts[k + 1], pts[k], 17);
        EXPECT_LE((path.nodes.front() - pts[k]).norm(), 1e-12);
        EXPECT_LE((path.nodes.back() - pts[k + 1]).norm(), 1e-12);
        for (const auto& x : path.nodes)
            EXPECT_LE(std::abs(sys.integral(x) - 4.0), kLevelTol * 5);
        // Cumulative lengths match the chord lengths to 1e-6.
        double acc = 0.0;
        for (std::size_t i = 1; i < path.nodes.size(); ++i) {
            acc += segment_length(sys, path.nodes[i - 1], path.nodes[i]);
            EXPECT_NEAR(path.lengths[i], acc, 1e-6 * acc);
        }
        EXPECT_EQ(path.lengths.front(), 0.0);
    }
}

TEST(LevelSet, CurveLengthExamples)
{
    const auto metz = builtin("metzler_linear");
    EXPECT_NEAR(curve_length(metz, {vec({1, -1}), vec({-1, 1})}), 2.0, 1e-12);
    EXPECT_EQ(curve_length(metz, {vec({1, -1})}), 0.0);
    EXPECT_THROW(curve_length(metz, {vec({1, -1}), vec({1, 1})}), SpecError);
}

TEST(LevelSet, CurveLengthDecreasesUnderRefinement)
{
    const auto h12 = static_system(2, "x1 + 2*x2");
    const double coarse = order_path(h12, vec({2, -1}), vec({0, 0}), 5).total_length();
    const double fine = order_path(h12, vec({2, -1}), vec({0, 0}), 33).total_length();
    EXPECT_TRUE(std::isfinite(coarse));
    EXPECT_LE(fine, coarse + 1e-12);
    // Straight chords in a linear level set have constant norm: |(2,-1)|_x = 2.
    EXPECT_NEAR(fine, 2.0, 1e-9);
}

TEST(LevelSet, LengthIsParametrizationIndependent)
{
    const auto sys = cubic3();
    const auto pts = level_points(sys, 4.0, 4, 9);
    ASSERT_GE(pts.size(), 2u);
    const auto path = order_path(sys, pts[1], pts[0], 9);
    double doubled = 0.0;
    for (std::size_t i = 1; i < path.nodes.size(); ++i) {
        const Vector mid = 0.5 * (path.nodes[i - 1] + path.nodes[i]);
        doubled += segment_length(sys, path.nodes[i - 1], mid) + segment_length(sys, mid, path.nodes[i]);
    }
    EXPECT_NEAR(doubled, path.total_length(), 1e-6 * path.total_length());
}

TEST(LevelSet, DistanceExamples)
{
    const auto metz = builtin("metzler_linear");
    const auto d = finsler_distance_upper(metz, vec({1, -1}), vec({-1, 1}), 5);
    EXPECT_NEAR(d.upper, 2.0, 1e-9);
    ASSERT_EQ(d.history.size(), 6u);
    const auto same = finsler_distance_upper(metz, vec({1, -1}), vec({1, -1}), 5);
    EXPECT_EQ(same.upper, 0.0);
    EXPECT_THROW(finsler_distance_upper(metz, vec({1, -1}), vec({-1, 1}), -1), SpecError);
}

TEST(LevelSet, DistanceHistoryAndSymmetry)
{
    const auto sys = cubic3();
    const auto pts = level_points(sys, 4.0, 40, 13);
    ASSERT_GE(pts.size(), 40u);
    for (int k = 0; k < 20; ++k) {
        const Vector& y = pts[static_cast<std::size_t>(2 * k)];
        const Vector& z = pts[static_cast<std::size_t>(2 * k + 1)];
        const auto a = finsler_distance_upper(sys, y, z, 3);
        const auto b = finsler_distance_upper(sys, z, y, 3);
        for (std::size_t i = 1; i < a.history.size(); ++i)
            EXPECT_LE(a.history[i], a.history[i - 1]);
        EXPECT_GT(a.upper, 0.0);
        EXPECT_EQ(a.upper, a.history.back());
        EXPECT_LE(std::abs(a.upper - b.upper), 1e-6 * a.upper) << k;
    }
}

TEST(LevelSet, DistanceTriangleInequality)
{
    const auto sys = cubic3();
    const auto pts = level_points(sys, 4.0, 30, 21);
    ASSERT_GE(pts.size(), 30u);
    for (int k = 0; k < 10; ++k) {
        const Vector& a = pts[static_cast<std::size_t>(3 * k)];
        const Vector& b = pts[static_cast<std::size_t>(3 * k + 1)];
        const Vector& c = pts[static_cast<std::size_t>(3 * k + 2)];
        const double ac = finsler_distance_upper(sys, a, c, 3).upper;
        const double ab = finsler_distance_upper(sys, a, b, 3).upper;
        const double bc = finsler_distance_upper(sys, b, c, 3).upper;
        EXPECT_LE(ac, ab + bc + 1e-5) << k;
    }
}

TEST(LevelSet, RayIntersection)
{
    const auto h2 = static_system(2, "x1 + x2", "positive_orthant");
    const Point m = ray_level_intersect(h2, vec({1, 1}), 4.0);
    EXPECT_NEAR(m.coords[0], 2.0, 1e-12);
    EXPECT_NEAR(m.coords[1], 2.0, 1e-12);
    const auto w3 = static_system(3, "x1 + 2*x2 + 3*x3", "positive_orthant");
    EXPECT_NEAR(ray_level_intersect(w3, vec({1, 1, 1}), 12.0).coords[0], 2.0, 1e-12);

    // 2s + 0.2 s^3 = 10, i.e. s^3 + 10 s - 50 = 0, by Cardano.
    const double disc = std::sqrt(625.0 + 1000.0 / 27.0);
    const double s_star = std::cbrt(25.0 + disc) + std::cbrt(25.0 - disc);
    const auto cubic = static_system(2, "x1 + x2 + 0.1*(x1^3 + x2^3)", "positive_orthant");
    const Point c = ray_level_intersect(cubic, vec({1, 1}), 10.0);
    EXPECT_NEAR(c.coords[0], s_star, 1e-11);
    EXPECT_NEAR(cubic.integral(c.coords), 10.0, 1e-11);

    EXPECT_THROW(ray_level_intersect(h2, vec({3, 3}), 4.0), SpecError);
    EXPECT_THROW(ray_level_intersect(h2, vec({1, 0}), 4.0), SpecError);
    const auto bounded = static_system(2, "1 - exp(-x1 - x2)", "positive_orthant");
    EXPECT_THROW(ray_level_intersect(bounded, vec({1, 1}), 2.0), FlowError);
}

TEST(LevelSet, EquilibriumSearch)
{
    const auto m = find_equilibrium_on_level(builtin("metzler_linear"), 1.0, 4);
    ASSERT_TRUE(m.has_value());
    EXPECT_LT((m->coords - vec({0.5, 0.5})).norm(), 1e-9);
    const auto c = find_equilibrium_on_level(builtin("cyclic_compartment", {{"n", 3}}), 3.0, 4);
    ASSERT_TRUE(c.has_value());
    EXPECT_LT((c->coords - vec({1, 1, 1})).norm(), 1e-9);
    EXPECT_FALSE(find_equilibrium_on_level(builtin("driftless_exchange"), 0.0, 4).has_value());
    EXPECT_THROW(search_equilibria(builtin("metzler_linear"), 1.0, 0), SpecError);
}

TEST(LevelSet, EquilibriumAcceptanceGuard)
{
    // Far along the driftless level set f underflows below 1e-9 but is not zero.
    const auto sys = builtin("driftless_exchange");
    EXPECT_FALSE(newton_equilibrium(sys, 0.0, vec({30, -30})).has_value());
}

TEST(LevelSet, ClassifyMetzler)
{
    const auto a = classify_level_set(builtin("metzler_linear"), 1.0);
    ASSERT_EQ(a.verdict, LevelVerdict::UniqueAttractor) << a.reason;
    ASSERT_TRUE(a.equilibrium.has_value());
    EXPECT_LT((a.equilibrium->coords - vec({0.5, 0.5})).norm(), 1e-9);
    EXPECT_EQ(a.samples.size(), 16u);
    EXPECT_LE(a.multistart_spread, 1e-7);
    for (const auto& s : a.samples) {
        EXPECT_TRUE(s.converged);
        EXPECT_LE(s.distance_to_equilibrium, 1e-6);
        // Re-check: the recorded endpoint is the equilibrium.
        EXPECT_LE((s.end - a.equilibrium->coords).norm(), 1e-6);
    }
}

TEST(LevelSet, ClassifyCyclic)
{
    LevelBudget budget;
    budget.seed = 4;
    const auto a = classify_level_set(builtin("cyclic_compartment", {{"n", 3}}), 3.0, budget);
    ASSERT_EQ(a.verdict, LevelVerdict::UniqueAttractor) << a.reason;
    EXPECT_LT((a.equilibrium->coords - vec({1, 1, 1})).norm(), 1e-9);
    EXPECT_LE(std::abs(a.equilibrium->level - 3.0), 1e-9);
}

TEST(LevelSet, ClassifyDriftless)
{
    const auto sys = builtin("driftless_exchange");
    const auto a = classify_level_set(sys, 0.0);
    ASSERT_EQ(a.verdict, LevelVerdict::NoEquilibrium) << a.reason;
    EXPECT_FALSE(a.equilibrium.has_value());
    for (const auto& s : a.samples) {
        EXPECT_TRUE(s.escaped);
        EXPECT_TRUE(s.lyapunov_decreasing);
        EXPECT_FALSE(s.finite_time_escape);
        // x1 -> +inf, x2 -> -inf on the level x1 + x2 = 0.
        EXPECT_GT(s.end[0], 0.0);
        EXPECT_LT(s.end[1], 0.0);
        EXPECT_LE(std::abs(s.end[0] + s.end[1]), 1e-6 * s.end.norm());
    }
}

TEST(LevelSet, ClassifyBudgetErrors)
{
    LevelBudget b;
    b.samples = 0;
    EXPECT_THROW(classify_level_set(builtin("metzler_linear"), 1.0, b), SpecError);
    b = {};
    b.horizon = 0.0;
    EXPECT_THROW(classify_level_set(builtin("metzler_linear"), 1.0, b), SpecError);
}

TEST(LevelSet, VerdictNames)
{
    for (auto v : {LevelVerdict::UniqueAttractor, LevelVerdict::NoEquilibrium, LevelVerdict::Inconclusive})
        EXPECT_EQ(level_verdict_from_string(to_string(v)), v);
    EXPECT_THROW(level_verdict_from_string("maybe"), std::invalid_argument);
}

TEST(LevelSet, OrderedEquilibria)
{
    const auto m = ordered_equilibria_check(builtin("metzler_linear"), {0.0, 1.0, 2.0});
    EXPECT_EQ(m.verdict, Verdict::Holds);
    ASSERT_EQ(m.equilibria.size(), 3u);
    EXPECT_LT((m.equilibria[2] - vec({1, 1})).norm(), 1e-9);
    EXPECT_NEAR(m.min_margin, 0.5, 1e-9);
    const auto c = ordered_equilibria_check(builtin("cyclic_compartment", {{"n", 3}}), {3.0, 0.0});
    EXPECT_EQ(c.verdict, Verdict::Holds);
    EXPECT_EQ(c.levels, (std::vector<double>{0.0, 3.0}));
    EXPECT_NEAR(c.min_margin, 1.0, 1e-9);
    EXPECT_THROW(ordered_equilibria_check(builtin("metzler_linear"), {1.0}), SpecError);
    EXPECT_THROW(ordered_equilibria_check(builtin("metzler_linear"), {1.0, 1.0}), SpecError);
    EXPECT_THROW(ordered_equilibria_check(builtin("driftless_exchange"), {0.0, 1.0}), FlowError);
}

TEST(LevelSet, PathCsv)
{
    const auto path = order_path(builtin("metzler_linear"), vec({1, -1}), vec({-1, 1}), 3);
    EXPECT_EQ(path_csv(path), "lambda,x1,x2\n0,-1,1\n0.5,0,0\n1,1,-1\n");
}
