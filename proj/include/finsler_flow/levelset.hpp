#pragma once

#include "finsler_flow/flow.hpp"
#include "finsler_flow/sampling.hpp"
#include "finsler_flow/systems.hpp"
#include "finsler_flow/verdict.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace finsler_flow {

/// Level residual tolerance for path nodes and equilibria: 1e-9 (1 + |r|).
inline constexpr double kLevelTol = 1e-9;

/// Polyline on the level set H = level.
struct LevelPath {
    double level = 0.0;
    std::vector<Vector> nodes;
    std::vector<double> lambdas; // parameter of each node, 0 at the start, 1 at the end
    std::vector<double> lengths; // cumulative Finsler length; lengths[0] = 0
    double max_residual = 0.0;   // max |H(node) - level|

    double total_length() const { return lengths.empty() ? 0.0 : lengths.back(); }
};

/// Moves x along the line x + s grad H(x) onto H = r by Newton on s.
/// Throws FlowError if 50 iterations do not reach residual 1e-12 (1 + |r|)
/// or an iterate leaves the domain.
Point project_to_level(const SystemSpec& sys, const Vector& x, double r);

/// Connecting polyline from z (λ = 0) to y (λ = 1) on their common level:
/// for each λ on a uniform grid, the unique level crossing of the two-segment
/// path y ∧ z → λy + (1-λ)z → y ∨ z, located by bisection and polished by Newton.
LevelPath order_path(const SystemSpec& sys, const Vector& y, const Vector& z, int grid);

/// Finsler length of the chord p → q: composite 3-point Gauss quadrature of
/// |Π(q - p)|_{p + s(q - p)}, Π the projection onto the tangent space at the
/// quadrature point, refined by bisection to relative 1e-8.
double segment_length(const SystemSpec& sys, const Vector& p, const Vector& q);

/// Sum of segment_length over consecutive nodes, which must share a level.
double curve_length(const SystemSpec& sys, const std::vector<Vector>& nodes);

/// Recomputes lengths and max_residual of a path from its nodes.
void measure_path(const SystemSpec& sys, LevelPath& path);

struct DistanceEstimate {
    double upper = 0.0;           // certified upper bound on d(y, z)
    std::vector<double> history;  // total length after initialization and after each round
    LevelPath path;
};

/// Upper bound on the Finsler distance: order_path with 65 nodes, then
/// `refine_rounds` of red-black node relaxation within the level set. Only
/// length-reducing moves are kept, so history is non-increasing.
DistanceEstimate finsler_distance_upper(const SystemSpec& sys, const Vector& y, const Vector& z, int refine_rounds);

/// M(x) = s* x with s* >= 1 and H(s* x) = r, for x > 0 with H(x) < r.
/// Bracketing, bisection, then Newton to residual 1e-12 (1 + |r|).
Point ray_level_intersect(const SystemSpec& sys, const Vector& x, double r);

/// Quasi-random domain points projected onto H = r; failed projections are skipped.
std::vector<Vector> sample_level_points(const SystemSpec& sys, double r, int count, std::uint64_t seed,
                                        const std::optional<SamplingWindow>& window = std::nullopt);

/// Damped Gauss-Newton on x ↦ (f(x), H(x) - r). A root is accepted when
/// |f| <= 1e-9, |H - r| <= 1e-9 and the next Newton correction is below
/// 1e-8 (1 + |x|), which rejects points where f merely underflows.
std::optional<Vector> newton_equilibrium(const SystemSpec& sys, double r, const Vector& start, int max_iterations = 100);

struct EquilibriumSearch {
    std::optional<Point> equilibrium;            // first converged seed
    std::vector<Vector> seeds;
    std::vector<std::optional<Vector>> results;  // per seed, in seed order
    int newton_successes = 0;
    int integration_fallbacks = 0;
    double spread = 0.0;                         // max distance of converged results to `equilibrium`

    int converged() const;
};

/// Multistart search; seeds that stall fall back to forward integration over
/// `horizon` followed by another Newton solve from the endpoint.
EquilibriumSearch search_equilibria(const SystemSpec& sys, double r, int multistarts, const IntegratorConfig& cfg = {},
                                    std::uint64_t seed = 0, const std::optional<SamplingWindow>& window = std::nullopt,
                                    double horizon = 100.0);

std::optional<Point> find_equilibrium_on_level(const SystemSpec& sys, double r, int multistarts,
                                               const IntegratorConfig& cfg = {}, std::uint64_t seed = 0);

struct LevelBudget {
    int samples = 16;
    int multistarts = 8;
    double horizon = 100.0;
    std::uint64_t seed = 0;
    std::optional<SamplingWindow> window;
    IntegratorConfig cfg;
    double attraction_tol = 1e-6;  // distance to the equilibrium at the horizon
    double uniqueness_tol = 1e-7;  // multistart agreement
    double escape_radius = 1e3;    // |x| beyond which an orbit counts as escaped
    double escape_field = 1e-3;    // |f|_x must have dropped below this on escape
};

/// Per-sample record backing a dichotomy verdict.
struct SampleEvidence {
    Vector start;
    Vector end;
    double log10_end_time = 0.0;
    double distance_to_equilibrium = -1.0; // attractor case
    double log10_field_norm = 0.0;         // log10 |f(end)|_end
    FlowStatus status = FlowStatus::Complete;
    bool converged = false;
    bool escaped = false;              // left the escape radius with |f|_x below escape_field
    bool finite_time_escape = false;   // blow-up or domain exit before the horizon
    bool lyapunov_decreasing = false;
};

enum class LevelVerdict { UniqueAttractor, NoEquilibrium, Inconclusive };

const char* to_string(LevelVerdict v);
LevelVerdict level_verdict_from_string(const std::string& s);

struct LevelSetAnalysis {
    double level = 0.0;
    LevelVerdict verdict = LevelVerdict::Inconclusive;
    std::optional<Point> equilibrium;
    int multistart_count = 0;
    int multistart_converged = 0;
    double multistart_spread = 0.0;
    std::vector<SampleEvidence> samples;
    double horizon = 0.0;
    std::string reason;
};

/// Evidence-based dichotomy on one level set: either a unique equilibrium
/// attracting every sampled point by the horizon, or no equilibrium with
/// every sampled orbit escaping while |f|_x decreases.
LevelSetAnalysis classify_level_set(const SystemSpec& sys, double r, const LevelBudget& budget = {});

struct OrderedEquilibria {
    Verdict verdict = Verdict::Inconclusive;
    std::vector<double> levels;      // sorted increasing
    std::vector<Vector> equilibria;  // matching levels
    double min_margin = 0.0;         // min over consecutive pairs of min_i (y_{k+1} - y_k)_i
};

/// Equilibria at strictly increasing levels must be ordered by << with margin
/// above 1e-9. Throws SpecError for fewer than two levels and FlowError when
/// a level has no equilibrium.
OrderedEquilibria ordered_equilibria_check(const SystemSpec& sys, const std::vector<double>& levels,
                                           const LevelBudget& budget = {});

/// CSV `lambda,x1..xn`, 17 significant digits.
std::string path_csv(const LevelPath& path);

} // namespace finsler_flow
