#pragma once

#include "finsler_flow/sampling.hpp"
#include "finsler_flow/systems.hpp"
#include "finsler_flow/verdict.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace finsler_flow {

/// Entries with magnitude at or below this are structural zeros.
inline constexpr double kStructuralZero = 1e-10;

struct SamplingBudget {
    int samples = 256;
    std::uint64_t seed = 0;
    std::optional<SamplingWindow> window;
};

struct CooperativeCheck {
    Verdict verdict = Verdict::Inconclusive;
    double worst_off_diagonal = 0.0;        // most negative (or smallest) ∂f_i/∂x_j, i != j
    double min_positive_off_diagonal = 0.0; // smallest entry above the structural-zero threshold
    Vector witness;                         // point where worst_off_diagonal occurs
    int row = -1;
    int col = -1;
    int samples = 0;
};

struct IrreducibleCheck {
    Verdict verdict = Verdict::Inconclusive;
    Vector witness;              // first point with a reducible Jacobian, or the last sample checked
    std::vector<int> component;  // 0-based vertices closed under the influence graph at the witness
    std::vector<int> complement;
    int samples = 0;
};

struct GradientCheck {
    Verdict verdict = Verdict::Inconclusive;
    double min_coordinate = 0.0; // min over samples of min_i ∂H/∂x_i
    double max_coordinate = 0.0; // max over samples of max_i ∂H/∂x_i
    Vector witness;              // point attaining min_coordinate
    int witness_index = -1;
    int samples = 0;
};

struct FirstIntegralCheck {
    Verdict verdict = Verdict::Inconclusive;
    double worst_ratio = 0.0; // max |<grad H, f>| / (1 + |grad H| |f|)
    Vector witness;
    int samples = 0;
};

struct StructureReport {
    CooperativeCheck cooperative;
    IrreducibleCheck irreducible;
    GradientCheck positive_gradient;
    FirstIntegralCheck first_integral;
    double gradient_lower = 0.0;
    double gradient_upper = 0.0;
    int samples_used = 0;

    bool all_hold() const;
    bool any_fails() const;
};

CooperativeCheck check_cooperative(const SystemSpec& sys, int samples, std::uint64_t seed,
                                   const std::optional<SamplingWindow>& window = std::nullopt);
IrreducibleCheck check_irreducible(const SystemSpec& sys, int samples, std::uint64_t seed,
                                   const std::optional<SamplingWindow>& window = std::nullopt);
GradientCheck check_positive_gradient(const SystemSpec& sys, int samples, std::uint64_t seed,
                                      const std::optional<SamplingWindow>& window = std::nullopt);
FirstIntegralCheck check_first_integral(const SystemSpec& sys, int samples, std::uint64_t seed,
                                        const std::optional<SamplingWindow>& window = std::nullopt);

StructureReport full_structure_report(const SystemSpec& sys, const SamplingBudget& budget = {});

/// Vertices reachable from vertex 0 along edges j -> i with |m(i, j)| above
/// the structural-zero threshold (i != j). Empty input gives an empty result.
std::vector<int> reachable_from_first(const Matrix& m, bool forward);

} // namespace finsler_flow
