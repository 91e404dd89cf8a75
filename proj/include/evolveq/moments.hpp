#pragma once

#include "evolveq/linalg.hpp"

namespace evolveq {

/// ∫₀^d z₁(s) z₂(s)ᵀ ds for the linear flows z₁′ = C₁z₁ and z₂′ = C₂z₂.
///
/// The interval is split into 2^m pieces short enough for a truncated Taylor
/// series; the moment over one piece is integrated by Gauss–Legendre and then
/// doubled m times with S(2h) = S(h) + E₁ S(h) E₂ᵀ, E_i = exp(hC_i). Every
/// quadratic functional of the flow, ∫ z₁ᵀ Q z₂, is then trace(Qᵀ S) with no
/// further quadrature error, however stiff C_i are.
[[nodiscard]] Matrix cross_moment(const Matrix& c1, const Vector& z1, const Matrix& c2, const Vector& z2, double d);

/// cross_moment(c, z, c, z, d).
[[nodiscard]] Matrix second_moment(const Matrix& c, const Vector& z, double d);

/// ∫ z₁ᵀ Q z₂ = Σ_ij Q_ij S_ij for a moment S from cross_moment.
[[nodiscard]] inline double moment_integral(const Matrix& q, const Matrix& moment)
{
    return q.cwiseProduct(moment).sum();
}

}  // namespace evolveq
