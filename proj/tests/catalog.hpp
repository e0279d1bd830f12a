#pragma once

#include "finsler_flow/finsler.hpp"
#include "finsler_flow/sampling.hpp"
#include "finsler_flow/systems.hpp"

#include <nlohmann/json.hpp>

#include <random>
#include <vector>

namespace testing_support {

using finsler_flow::Vector;

inline std::vector<finsler_flow::SystemSpec> catalog()
{
    using finsler_flow::builtin;
    return {builtin("metzler_linear"), builtin("cyclic_compartment", {{"n", 3}}),
            builtin("cyclic_compartment", {{"n", 4}}), builtin("driftless_exchange")};
}

inline Vector uniform_vector(std::mt19937_64& rng, Eigen::Index n, double lo, double hi)
{
    std::uniform_real_distribution<double> u(lo, hi);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i)
        v[i] = u(rng);
    return v;
}

inline Vector random_point(const finsler_flow::SystemSpec& sys, std::mt19937_64& rng)
{
    const auto w = finsler_flow::default_window(sys.domain(), sys.dim());
    Vector x(sys.dim());
    for (;;) {
        for (Eigen::Index i = 0; i < x.size(); ++i)
            x[i] = std::uniform_real_distribution<double>(w.lower[i], w.upper[i])(rng);
        if (sys.in_domain(x))
            return x;
    }
}

/// Random nonzero vector tangent to the level set through x.
inline Vector random_tangent(const finsler_flow::SystemSpec& sys, const Vector& x, std::mt19937_64& rng)
{
    const Vector g = sys.integral_gradient(x);
    for (;;) {
        const Vector v = finsler_flow::project_to_tangent(g, uniform_vector(rng, x.size(), -1.0, 1.0));
        if (v.norm() > 1e-3)
            return v;
    }
}

} // namespace testing_support
