#pragma once

#include <optional>
#include <string>
#include <vector>

#include "evolveq/forms.hpp"
#include "evolveq/propagator.hpp"

namespace evolveq {

/// Maximal-regularity quantities of one frozen-coefficient trajectory.
///
/// Checks that do not apply (nonsymmetric family, ω ≠ 0) are left empty and
/// serialize as `nan`.
struct MRReport {
    int n_slabs = 0;
    double mesh = 0.0;
    double l2V = 0.0;   // ‖u‖_{L²(0,T;V)}
    double h1H = 0.0;   // ‖u̇‖_{L²(0,T;H)}
    double h1Vp = 0.0;  // ‖u̇‖_{L²(0,T;V′)}
    double supV = 0.0;  // sup_t ‖u(t)‖_V (sampled)
    double mr_vvp = 0.0;
    double mr_vh = 0.0;
    std::optional<double> residual_chain;
    std::optional<double> residual_product;
    std::optional<double> margin_lem3;
    std::optional<double> margin_indepmax;
    std::optional<double> ratio_H;
};

/// Time integrals of one trajectory over [0, T], split at breakpoints and
/// output grid points. Derivatives come from the slab equations, and every
/// integral is exact for the step problem up to rounding.
class TrajectoryIntegrals {
public:
    /// Throws Error{contract} when the trajectory has no slab data.
    explicit TrajectoryIntegrals(const Trajectory& trajectory);

    struct Segment {
        int slab;
        double start;
        double end;
        Matrix moment;  // ∫ z zᵀ with z = (u, 1)
    };

    [[nodiscard]] const Trajectory& trajectory() const noexcept { return *trajectory_; }
    [[nodiscard]] const std::vector<Segment>& segments() const noexcept { return segments_; }

    /// Σ over segments in [a, b] of ∫ zᵀ Q_k z, with Q_k chosen per slab.
    /// a and b must be segment endpoints.
    template <class QuadraticForm>
    [[nodiscard]] double integrate(QuadraticForm&& q, double a, double b) const
    {
        double total = 0.0;
        for (const Segment& s : segments_) {
            if (s.start >= a && s.end <= b) {
                total += moment_trace(q(s.slab), s.moment);
            }
        }
        return total;
    }

    [[nodiscard]] const Matrix& l2v_form() const noexcept { return q_v_; }
    [[nodiscard]] const Matrix& h1h_form(int slab) const { return q_dot_h_.at(static_cast<std::size_t>(slab)); }
    [[nodiscard]] const Matrix& h1vp_form(int slab) const { return q_dot_vp_.at(static_cast<std::size_t>(slab)); }
    /// 2(u̇ | u)_H.
    [[nodiscard]] const Matrix& chain_form(int slab) const { return q_chain_.at(static_cast<std::size_t>(slab)); }
    /// 2 a_k(u, u̇) for symmetric slabs.
    [[nodiscard]] const Matrix& product_form(int slab) const { return q_product_.at(static_cast<std::size_t>(slab)); }

private:
    static double moment_trace(const Matrix& q, const Matrix& s) { return q.cwiseProduct(s).sum(); }

    const Trajectory* trajectory_;
    std::vector<Segment> segments_;
    Matrix q_v_;
    std::vector<Matrix> q_dot_h_;
    std::vector<Matrix> q_dot_vp_;
    std::vector<Matrix> q_chain_;
    std::vector<Matrix> q_product_;
};

/// l2V, h1H, h1Vp, supV and the combined norms
/// ‖u‖_{MR(V,V′)} = (l2V² + h1Vp²)^{1/2}, ‖u‖_{MR(V,H)} = (l2V² + h1H²)^{1/2}.
[[nodiscard]] MRReport mr_norms(const Trajectory& trajectory);

/// Max over output intervals [t₁, t₂] of |‖u(t₂)‖_H² − ‖u(t₁)‖_H² − ∫ 2(u̇|u)_H|.
[[nodiscard]] double check_chain_rule(const Trajectory& trajectory);

/// Max over slabs of |a_k(u(λ_{k+1})) − a_k(u(λ_k)) − ∫ 2 a_k(u, u̇)|.
/// Throws Error{contract} for nonsymmetric step forms.
[[nodiscard]] double check_product_rule(const Trajectory& trajectory);

/// Min over slabs of (1/α)(M‖u(λ_k)‖_V² + ∫_slab ‖f̄_k‖_H²) − sup_slab ‖u‖_V².
/// The sup is sampled at 17 points per slab plus the output grid.
/// Throws Error{contract} for nonsymmetric forms or ω ≠ 0.
[[nodiscard]] double check_lemma_indepmax(const Trajectory& trajectory, const FormConstants& constants);

/// Min over grid times t of c₂(∫₀ᵗ ‖f̄‖_{V′}² + ‖u₀‖_H²) − ∫₀ᵗ ‖u‖_V²
/// with c₂ = max(1/α², 1/α). Throws Error{contract} unless ω = 0 and α > 0.
[[nodiscard]] double check_lemma3(const Trajectory& trajectory, double coercivity);

/// ‖u‖_{MR(V,H)} / (‖u₀‖_V + ‖f̄‖_{L²(0,T;H)}); 0 when the denominator vanishes.
/// Throws Error{contract} for nonsymmetric forms.
[[nodiscard]] double check_h_estimate(const Trajectory& trajectory);

/// Min over interior breakpoints of
/// L(ℓ_k + ℓ_{k+1})/2 · ‖u(λ_{k+1})‖_V² − |a_k(u(λ_{k+1})) − a_{k+1}(u(λ_{k+1}))|.
/// Nonnegative whenever the step form comes from an L-Lipschitz family.
[[nodiscard]] double telescoping_margin(const Trajectory& trajectory, double lipschitz);

/// All of the above that apply to the trajectory and constants.
[[nodiscard]] MRReport mr_report(const Trajectory& trajectory, const FormConstants& constants);

[[nodiscard]] std::string mr_csv_header();
[[nodiscard]] std::string mr_csv_row(const MRReport& report);

}  // namespace evolveq
