#pragma once

#include <string>

namespace finsler_flow {

/// Sampled evidence, never a proof.
enum class Verdict { Holds, Fails, Inconclusive };

inline const char* to_string(Verdict v)
{
    switch (v) {
    case Verdict::Holds:
        return "holds";
    case Verdict::Fails:
        return "fails";
    case Verdict::Inconclusive:
        return "inconclusive";
    }
    return "unknown";
}

Verdict verdict_from_string(const std::string& s);

} // namespace finsler_flow
