#pragma once

#include "finsler_flow/systems.hpp"

#include <cstdint>
#include <vector>

namespace finsler_flow {

/// Deterministic low-discrepancy points in a box: a Halton sequence with a
/// Cranley-Patterson rotation drawn from `seed`. Points outside the domain
/// are skipped; at most 64 * count candidates are examined.
std::vector<Vector> sample_points(const DomainSpec& domain, const SamplingWindow& window, int count,
                                  std::uint64_t seed);

/// Same, with the domain's default window.
std::vector<Vector> sample_points(const SystemSpec& sys, int count, std::uint64_t seed);

/// Radical inverse of `index` in `base` (van der Corput).
double radical_inverse(std::uint64_t index, unsigned base);

} // namespace finsler_flow
