#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "evolveq/forms.hpp"
#include "evolveq/hilbert_setting.hpp"
#include "evolveq/linalg.hpp"

namespace evolveq {

/// Semigroup of one frozen slab: s ↦ exp(−sB) with B = G_H⁻¹ A_k.
///
/// Symmetric slabs use the spectral decomposition of the pencil (A_k, G_H);
/// all others go through the degree-13 Padé exponential of the augmented
/// generator [[−B, f̄], [0, 0]].
class SlabPropagator {
public:
    SlabPropagator(const GalerkinSpace& space, const Matrix& form_matrix, double length, bool symmetric,
                   double omega = 0.0);

    [[nodiscard]] const Matrix& generator() const noexcept { return generator_; }
    [[nodiscard]] double length() const noexcept { return length_; }
    [[nodiscard]] bool spectral() const noexcept { return spectral_; }
    /// κ with ‖exp(−hB)‖_H ≤ e^{ωh} κ, measured at h ∈ {ℓ/4, ℓ/2, ℓ}.
    [[nodiscard]] double conditioning() const noexcept { return conditioning_; }

    /// exp(−hB).
    [[nodiscard]] Matrix semigroup(double h) const;

    /// exp(−hB) u + h φ₁(−hB) f̄.
    [[nodiscard]] Vector step(const Vector& u, const Vector& load_h, double h) const;

    /// Generator [[−B, f̄], [0, 0]] of the autonomous system for (u, 1).
    [[nodiscard]] Matrix augmented_generator(const Vector& load_h) const;

private:
    Matrix generator_;
    double length_;
    bool spectral_;
    double conditioning_ = 1.0;
    // Spectral path: B = modes diag(rates) coords, coords = modesᵀ G_H.
    Matrix modes_;
    Vector rates_;
    Matrix coords_;
};

/// u_out = exp(−hB) u_in + h φ₁(−hB) f̄, for 0 ≤ h ≤ slab length.
[[nodiscard]] Vector slab_step(const SlabPropagator& propagator, const Vector& u_in, const Vector& load_h, double h);

/// Ordered products P_Λ(a, b) of slab semigroups for one step form.
class ProductPropagator {
public:
    explicit ProductPropagator(const StepForm& step_form);

    /// P_Λ(a, b) for 0 ≤ a ≤ b ≤ T; identity when a = b.
    [[nodiscard]] Matrix operator()(double a, double b) const;

    [[nodiscard]] const SlabPropagator& slab(int k) const { return slabs_.at(static_cast<std::size_t>(k)); }

private:
    Subdivision subdivision_;
    std::vector<SlabPropagator> slabs_;
    int dim_;
};

[[nodiscard]] Matrix product(const StepForm& step_form, double a, double b);

/// Load t ↦ f(t) ∈ V′ as pairings against the basis.
using LoadFunction = std::function<DualVector(double)>;

/// Data of u̇ + 𝒜(t)u = f(t), u(0) = u₀.
struct ProblemData {
    FormFamily family;
    Vector u0;
    LoadFunction load;  // empty means f = 0
    std::string tag;

    [[nodiscard]] double horizon() const noexcept { return family.horizon(); }
    [[nodiscard]] const GalerkinSpace& space() const noexcept { return family.space(); }
    [[nodiscard]] bool has_load() const noexcept { return static_cast<bool>(load); }
    /// f(t); zero vector when there is no load. Throws Error{evaluation} on non-finite values.
    [[nodiscard]] DualVector load_at(double t) const;
    /// Throws Error{argument} if u₀ does not match the space.
    void validate() const;
};

/// Slab average of the load in H-coordinates, G_H⁻¹ (1/(b−a)) ∫ f.
[[nodiscard]] Vector average_load(const ProblemData& problem, double a, double b);

/// Solution sampled on an output grid. Trajectories produced by `solve`
/// also carry the per-slab data (A_k, f̄_k, u(λ_k)) needed to re-evaluate
/// the exact step-problem solution anywhere in [0, T].
class Trajectory {
public:
    struct SlabData {
        StepForm step_form;
        std::vector<SlabPropagator> propagators;
        std::vector<Vector> loads;        // f̄_k in H-coordinates
        std::vector<Vector> breakpoints;  // u(λ_k), k = 0..n+1
    };

    Trajectory(GalerkinSpace space, std::vector<double> grid, std::vector<Vector> states, std::string tag,
               std::shared_ptr<const SlabData> slabs = nullptr);

    [[nodiscard]] const std::vector<double>& grid() const noexcept { return grid_; }
    [[nodiscard]] const std::vector<Vector>& states() const noexcept { return states_; }
    [[nodiscard]] const std::string& tag() const noexcept { return tag_; }
    [[nodiscard]] const GalerkinSpace& space() const noexcept { return space_; }
    [[nodiscard]] double horizon() const noexcept { return grid_.back(); }

    [[nodiscard]] bool has_slab_data() const noexcept { return static_cast<bool>(slabs_); }
    /// Throws Error{contract} for trajectories without slab data.
    [[nodiscard]] const SlabData& slab_data() const;
    [[nodiscard]] const Subdivision& subdivision() const { return slab_data().step_form.subdivision(); }

    /// Exact step-problem solution at t (from the last breakpoint).
    [[nodiscard]] Vector state_at(double t) const;
    /// u̇(t) = f̄_k − B_k u(t) on the slab containing t.
    [[nodiscard]] Vector derivative_at(double t) const;

private:
    GalerkinSpace space_;
    std::vector<double> grid_;
    std::vector<Vector> states_;
    std::string tag_;
    std::shared_ptr<const SlabData> slabs_;
};

/// Frozen-coefficient solution u_Λ. The output grid is completed with 0 and T
/// if they are missing.
[[nodiscard]] Trajectory solve(const ProblemData& problem, const Subdivision& subdivision,
                               std::span<const double> output_grid);

[[nodiscard]] Trajectory solve(const ProblemData& problem, const StepForm& step_form,
                               std::span<const double> output_grid);

/// Implicit Euler reference with N uniform steps, A and f evaluated at the
/// right end of each step.
[[nodiscard]] Trajectory oracle_solve(const ProblemData& problem, int steps);

}  // namespace evolveq
