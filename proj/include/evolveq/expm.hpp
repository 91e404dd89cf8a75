#pragma once

#include "evolveq/linalg.hpp"

namespace evolveq {

/// Matrix exponential by scaling and squaring with the degree-13 Padé
/// approximant (Higham 2005). Throws Error{numerical_range} if the result
/// is not representable.
[[nodiscard]] Matrix expm(const Matrix& a);

/// φ₁(z) = (eᶻ − 1)/z with φ₁(0) = 1.
[[nodiscard]] double phi1(double z) noexcept;

}  // namespace evolveq
