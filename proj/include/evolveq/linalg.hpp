#pragma once

#include <Eigen/Dense>

namespace evolveq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Symmetric part (A + Aᵀ)/2.
[[nodiscard]] inline Matrix sym(const Matrix& a) { return 0.5 * (a + a.transpose()); }

[[nodiscard]] bool all_finite(const Matrix& a);

/// Relative asymmetry ‖A − Aᵀ‖_F / ‖A‖_F (0 for the zero matrix).
[[nodiscard]] double relative_asymmetry(const Matrix& a);

}  // namespace evolveq
