#include "finsler_flow/sampling.hpp"

#include <random>

namespace finsler_flow {

namespace {

constexpr unsigned kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53,
                                59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};

} // namespace

double radical_inverse(std::uint64_t index, unsigned base)
{
    double result = 0.0;
    double f = 1.0 / base;
    while (index > 0) {
        result += f * static_cast<double>(index % base);
        index /= base;
        f /= base;
    }
    return result;
}

std::vector<Vector> sample_points(const DomainSpec& domain, const SamplingWindow& window, int count,
                                  std::uint64_t seed)
{
    const auto dim = window.lower.size();
    if (dim == 0 || window.upper.size() != dim)
        throw SpecError("sampling window has inconsistent bounds");
    if (static_cast<std::size_t>(dim) > std::size(kPrimes))
        throw SpecError("sampling supports at most 32 dimensions");
    if (!window.lower.allFinite() || !window.upper.allFinite() || !order_le(window.lower, window.upper))
        throw SpecError("sampling window must be a bounded box with lower <= upper");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vector shift(dim);
    for (Eigen::Index k = 0; k < dim; ++k)
        shift[k] = unit(rng);

    std::vector<Vector> out;
    if (count <= 0)
        return out;
    out.reserve(static_cast<std::size_t>(count));
    const std::uint64_t limit = 64ULL * static_cast<std::uint64_t>(count);
    for (std::uint64_t i = 1; i <= limit && static_cast<int>(out.size()) < count; ++i) {
        Vector x(dim);
        for (Eigen::Index k = 0; k < dim; ++k) {
            double u = radical_inverse(i, kPrimes[k]) + shift[k];
            u -= std::floor(u);
            x[k] = window.lower[k] + u * (window.upper[k] - window.lower[k]);
        }
        if (domain.contains(x))
            out.push_back(std::move(x));
    }
    if (static_cast<int>(out.size()) < count)
        throw SpecError("domain sampling failed: window does not meet the domain");
    return out;
}

std::vector<Vector> sample_points(const SystemSpec& sys, int count, std::uint64_t seed)
{
    return sample_points(sys.domain(), default_window(sys.domain(), sys.dim()), count, seed);
}

} // namespace finsler_flow
