#include "evolveq/linalg.hpp"

#include "evolveq/errors.hpp"

namespace evolveq {

bool all_finite(const Matrix& a) { return a.allFinite(); }

double relative_asymmetry(const Matrix& a)
{
    const double scale = a.norm();
    if (scale == 0.0) {
        return 0.0;
    }
    return (a - a.transpose()).norm() / scale;
}

const char* to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::singular_gram: return "singular-gram";
    case ErrorKind::structural: return "structural";
    case ErrorKind::evaluation: return "evaluation";
    case ErrorKind::numerical_range: return "numerical-range";
    case ErrorKind::argument: return "argument";
    case ErrorKind::contract: return "contract";
    case ErrorKind::tolerance: return "tolerance";
    case ErrorKind::config: return "config";
    case ErrorKind::unknown_preset: return "unknown-preset";
    }
    return "unknown";
}

}  // namespace evolveq
