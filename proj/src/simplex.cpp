#include "finsler_flow/simplex.hpp"

namespace finsler_flow {

const char* to_string(LpStatus s)
{
    switch (s) {
    case LpStatus::Optimal:
        return "optimal";
    case LpStatus::Infeasible:
        return "infeasible";
    case LpStatus::Unbounded:
        return "unbounded";
    case LpStatus::IterationLimit:
        return "iteration_limit";
    }
    return "unknown";
}

} // namespace finsler_flow
