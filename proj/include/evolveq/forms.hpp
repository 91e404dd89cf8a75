#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "evolveq/hilbert_setting.hpp"
#include "evolveq/linalg.hpp"

namespace evolveq {

/// Partition 0 = λ₀ < λ₁ < … < λ_{n+1} = T of the time interval.
class Subdivision {
public:
    explicit Subdivision(std::vector<double> points);

    [[nodiscard]] static Subdivision uniform(double horizon, int slabs);

    [[nodiscard]] int slab_count() const noexcept { return static_cast<int>(points_.size()) - 1; }
    [[nodiscard]] double horizon() const noexcept { return points_.back(); }
    /// |Λ| = max slab length.
    [[nodiscard]] double mesh() const noexcept { return mesh_; }
    [[nodiscard]] double start(int k) const { return points_[k]; }
    [[nodiscard]] double end(int k) const { return points_[k + 1]; }
    [[nodiscard]] double length(int k) const { return points_[k + 1] - points_[k]; }
    [[nodiscard]] const std::vector<double>& points() const noexcept { return points_; }

    /// Slab k with λ_k ≤ t < λ_{k+1}; t = T maps to the last slab.
    [[nodiscard]] int slab_index(double t) const;

    [[nodiscard]] bool is_uniform(double rel_tol = 1e-12) const noexcept;

    /// True when every breakpoint of this subdivision is a breakpoint of `finer`.
    [[nodiscard]] bool nested_in(const Subdivision& finer) const;

private:
    std::vector<double> points_;
    double mesh_ = 0.0;
};

/// Analytic bounds a preset ships for cross-checking the sampled estimates.
struct DeclaredConstants {
    std::optional<double> continuity;   // M
    std::optional<double> coercivity;   // α at ω = 0
    std::optional<double> lipschitz;    // L
};

/// Constants of a form family, certified on a sample grid.
struct FormConstants {
    double continuity = 0.0;  // M
    double coercivity = 0.0;  // α(ω)
    double omega = 0.0;
    double lipschitz = 0.0;   // L
    bool elliptic = false;    // α(ω) > 0 on every sample
    int samples = 0;
};

/// Coefficient matrix A(t) of the form, in the assembly convention
/// A_ij = a(t; φ_j, φ_i), so that a(t; u, v) = vᵀ A(t) u.
using CoefficientFunction = std::function<Matrix(double)>;

/// Time-dependent bilinear form t ↦ a(t;·,·) on a Galerkin space.
class FormFamily {
public:
    FormFamily(GalerkinSpace space, CoefficientFunction coefficients, double horizon, bool symmetric,
               DeclaredConstants declared = {});

    /// Evaluates A(t). Throws Error{evaluation} on non-finite entries and
    /// Error{contract} if a symmetric family returns an asymmetric matrix.
    [[nodiscard]] Matrix operator()(double t) const;

    /// a(t; u, v) = vᵀ A(t) u.
    [[nodiscard]] double form(double t, const Vector& u, const Vector& v) const;

    [[nodiscard]] const GalerkinSpace& space() const noexcept { return space_; }
    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] bool symmetric() const noexcept { return symmetric_; }
    [[nodiscard]] const DeclaredConstants& declared() const noexcept { return declared_; }
    [[nodiscard]] const CoefficientFunction& coefficients() const noexcept { return coefficients_; }

private:
    GalerkinSpace space_;
    CoefficientFunction coefficients_;
    double horizon_;
    bool symmetric_;
    DeclaredConstants declared_;
};

/// Piecewise-constant form: slab k carries the average of A over [λ_k, λ_{k+1}].
class StepForm {
public:
    StepForm(GalerkinSpace space, Subdivision subdivision, std::vector<Matrix> slabs, bool symmetric);

    [[nodiscard]] const Matrix& lookup(double t) const;
    [[nodiscard]] const Matrix& slab(int k) const { return slabs_.at(static_cast<std::size_t>(k)); }
    [[nodiscard]] int slab_count() const noexcept { return static_cast<int>(slabs_.size()); }
    [[nodiscard]] const Subdivision& subdivision() const noexcept { return subdivision_; }
    [[nodiscard]] const GalerkinSpace& space() const noexcept { return space_; }
    [[nodiscard]] bool symmetric() const noexcept { return symmetric_; }

private:
    GalerkinSpace space_;
    Subdivision subdivision_;
    std::vector<Matrix> slabs_;
    bool symmetric_;
};

/// (1/(b−a)) ∫_a^b A(r) dr by composite 4-point Gauss–Legendre on 4 panels.
[[nodiscard]] Matrix average_form(const FormFamily& family, double a, double b);

[[nodiscard]] StepForm build_step_form(const FormFamily& family, const Subdivision& subdivision);

/// n equally spaced sample times covering [0, T] (both ends included).
[[nodiscard]] std::vector<double> sample_times(double horizon, int count);

/// M, α(ω) and L certified on the sample grid (at least 33 points).
///
/// M is the largest V→V′ norm of A(t); α(ω) the smallest generalized
/// eigenvalue of (sym A(t) + ω G_H, G_V); L the largest difference quotient
/// of A over adjacent samples. A non-positive α(ω) is reported through
/// `elliptic == false`, not thrown.
[[nodiscard]] FormConstants estimate_constants(const FormFamily& family, std::span<const double> t_grid,
                                               double omega = 0.0);

/// Sampled constants with any declared analytic bound substituted in.
[[nodiscard]] FormConstants resolve_constants(const FormFamily& family, std::span<const double> t_grid,
                                              double omega = 0.0);

/// a_ω(t; u, v) = a(t; u, v) + ω (u | v)_H.
[[nodiscard]] FormFamily rescale(const FormFamily& family, double omega);

/// Smallest sampled-certified ω ≥ `start` with α(ω) > 0, found by bisection
/// on [start, 10·M/c_H²]. Returns `start` when it is already elliptic.
[[nodiscard]] double select_omega(const FormFamily& family, std::span<const double> t_grid, double start = 0.0);

}  // namespace evolveq
