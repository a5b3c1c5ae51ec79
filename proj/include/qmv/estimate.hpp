#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "qmv/types.hpp"

namespace qmv {

enum class ErrorKind { relative, additive };

inline const char* to_string(ErrorKind kind) {
    return kind == ErrorKind::relative ? "relative" : "additive";
}

// Result record shared by the three estimators. `diagnostics` carries the
// algorithm-specific scalars (p, L, S, chi, subset counts, ...) keyed by name
// so reports serialize uniformly.
struct MeanEstimate {
    cplx value{0.0, 0.0};
    ErrorKind kind = ErrorKind::additive;
    double delta = 0.0;
    double confidence = 1.0;
    std::map<std::string, double> diagnostics;
    double runtime_seconds = 0.0;
};

} // namespace qmv
