#pragma once

#include <memory>
#include <vector>

#include "evolveq/linalg.hpp"

namespace evolveq {

/// Pairings ⟨g, φ_i⟩ of a functional g ∈ V′ against the basis functions.
struct DualVector {
    Vector coeffs;
};

/// Finite-dimensional model of the triple V ↪ H ↪ V′.
///
/// Vectors are coefficient vectors in a fixed basis {φ_i}. The H and V inner
/// products are given by their Gram matrices; V′ is realized through the
/// pairing against the basis, so ‖g‖_{V′}² = gᵀ G_V⁻¹ g.
///
/// Immutable; copies share the factorizations.
class GalerkinSpace {
public:
    /// Validates symmetry (1e-12 relative) and positive definiteness of both
    /// Grams; throws Error{singular_gram} otherwise.
    GalerkinSpace(Matrix gram_h, Matrix gram_v, std::vector<double> nodes = {});

    [[nodiscard]] int dim() const noexcept;
    [[nodiscard]] const Matrix& gram_h() const noexcept;
    [[nodiscard]] const Matrix& gram_v() const noexcept;
    /// Node coordinates for presets built on a mesh (empty otherwise).
    [[nodiscard]] const std::vector<double>& nodes() const noexcept;
    /// True when gram_h is diagonal (lumped metric).
    [[nodiscard]] bool diagonal_h() const noexcept;

    [[nodiscard]] double inner_h(const Vector& u, const Vector& v) const;
    [[nodiscard]] double norm_h(const Vector& u) const;
    [[nodiscard]] double norm_v(const Vector& u) const;

    /// The functional v ↦ (u | v)_H, i.e. G_H u.
    [[nodiscard]] DualVector h_representation(const Vector& u) const;
    /// H-coordinates G_H⁻¹ g of a functional (its H-Riesz representative).
    [[nodiscard]] Vector h_coordinates(const DualVector& g) const;
    [[nodiscard]] Vector solve_h(const Vector& rhs) const;
    [[nodiscard]] Vector solve_v(const Vector& rhs) const;
    [[nodiscard]] Matrix solve_h_columns(const Matrix& rhs) const;

    /// Upper Cholesky factor S of G_V = SᵀS.
    [[nodiscard]] Matrix v_factor() const;
    /// Upper Cholesky factor R of G_H = RᵀR.
    [[nodiscard]] Matrix h_factor() const;

private:
    struct Data;
    std::shared_ptr<const Data> data_;
};

/// ‖g‖_{V′} = sqrt(gᵀ G_V⁻¹ g).
[[nodiscard]] double dual_norm(const GalerkinSpace& space, const DualVector& g);

/// Smallest c with ‖u‖_H ≤ c‖u‖_V: the square root of the largest
/// generalized eigenvalue of the pencil (G_H, G_V).
[[nodiscard]] double embedding_constant(const GalerkinSpace& space);

/// Norm of the map V → V′ induced by the coefficient matrix A, i.e. the
/// largest singular value of S⁻ᵀ A S⁻¹ with G_V = SᵀS.
[[nodiscard]] double operator_norm(const GalerkinSpace& space, const Matrix& a);

/// Smallest eigenvalue λ of sym_part x = λ spd x (spd symmetric positive definite).
[[nodiscard]] double min_generalized_eigenvalue(const Matrix& sym_part, const Matrix& spd);

}  // namespace evolveq
