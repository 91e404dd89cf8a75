#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evolveq/forms.hpp"
#include "evolveq/hilbert_setting.hpp"
#include "evolveq/propagator.hpp"

namespace evolveq {

enum class SetKind { whole, box, halfspace, ball };

[[nodiscard]] std::string to_string(SetKind kind);

/// Closed convex subset of H together with its H-orthogonal projection.
class ConvexSet {
public:
    [[nodiscard]] static ConvexSet whole(GalerkinSpace space);
    /// Nodewise bounds lower ≤ x ≤ upper; entries may be ±infinity.
    [[nodiscard]] static ConvexSet box(GalerkinSpace space, Vector lower, Vector upper);
    /// {x : (normal | x)_H ≤ offset}; normal must be nonzero.
    [[nodiscard]] static ConvexSet halfspace(GalerkinSpace space, Vector normal, double offset);
    /// {x : ‖x − center‖_H ≤ radius}.
    [[nodiscard]] static ConvexSet ball(GalerkinSpace space, Vector center, double radius);

    [[nodiscard]] SetKind kind() const noexcept { return kind_; }
    [[nodiscard]] const GalerkinSpace& space() const noexcept { return space_; }
    /// "lumped" when the H-Gram is diagonal, "consistent" otherwise.
    [[nodiscard]] std::string metric() const;

    /// H-orthogonal projection. Box sets on a diagonal metric clamp; on other
    /// metrics an accelerated projected-gradient QP runs to 1e-10 and throws
    /// Error{tolerance} if its iteration cap is reached.
    [[nodiscard]] Vector project(const Vector& x) const;

    [[nodiscard]] double distance(const Vector& x) const;
    [[nodiscard]] bool contains(const Vector& x, double tol = 1e-12) const;

    [[nodiscard]] const Vector& lower() const noexcept { return a_; }
    [[nodiscard]] const Vector& upper() const noexcept { return b_; }

private:
    ConvexSet(SetKind kind, GalerkinSpace space) : kind_(kind), space_(std::move(space)) {}
    [[nodiscard]] Vector project_box_qp(const Vector& x) const;

    SetKind kind_;
    GalerkinSpace space_;
    Vector a_;  // box lower, halfspace normal, ball center
    Vector b_;  // box upper
    double scalar_ = 0.0;  // halfspace offset or ball radius
};

struct SampleOptions {
    int vectors = 10000;
    std::uint64_t seed = 0;
    int threads = 1;
};

/// Minimum of a sampled criterion with the sample that attains it.
struct CriterionResult {
    double margin = 0.0;
    double witness_t = 0.0;
    Vector witness;               // v, normalized to ‖v‖_V = 1
    double witness_distance = 0.0; // ‖v − Pv‖_H
    int samples = 0;
};

/// The sample pool: Gaussian vectors, sparse ±spikes and perturbations of
/// points on the boundary of the set, each normalized to ‖v‖_V = 1.
/// Vector i depends only on (seed, i).
[[nodiscard]] Vector sample_vector(const ConvexSet& set, std::uint64_t seed, std::size_t index);

/// a(t; Pv, v − Pv) − ⟨f, v − Pv⟩ for one coefficient matrix (f optional).
[[nodiscard]] double criterion_value(const Matrix& a, const ConvexSet& set, const Vector& v,
                                     const Vector* load = nullptr);

/// a(v, v) − a(Pv, Pv) for one coefficient matrix.
[[nodiscard]] double symmetric_criterion_value(const Matrix& a, const ConvexSet& set, const Vector& v);

/// Min over times and pooled vectors of a(t; Pv, v − Pv), or of
/// a(t; Pv, v − Pv) − ⟨f(t), v − Pv⟩ when a load is given.
/// Ties go to the lowest vector index, then the earliest time.
[[nodiscard]] CriterionResult check_criterion(const FormFamily& family, const ConvexSet& set,
                                              std::span<const double> times, const SampleOptions& options,
                                              const LoadFunction& load = {});

/// Min over samples of a(t; v, v) − a(t; Pv, Pv). Throws Error{contract}
/// for nonsymmetric families or when the family is not coercive at ω = 0.
[[nodiscard]] CriterionResult check_criterion_symmetric(const FormFamily& family, const ConvexSet& set,
                                                        std::span<const double> times, const SampleOptions& options);

/// Exhaustive sign analysis for the nonnegative cone {x ≥ 0} with a lumped
/// metric: the criterion holds for every v iff all off-diagonal entries of
/// A(t) are ≤ 0, because then a(Pv, v − Pv) = −Σ_{i≠j} A_ij v⁻_i v⁺_j.
struct StencilCertificate {
    bool applicable = false;
    bool holds = false;
    double max_off_diagonal = 0.0;  // over the sampled times
};

[[nodiscard]] StencilCertificate stencil_certificate(const FormFamily& family, const ConvexSet& set,
                                                     std::span<const double> times);

struct AuditResult {
    double violation = 0.0;  // max ‖u(t) − Pu(t)‖_H
    double t = 0.0;
};

/// Max distance to the set over the output grid and, when present, the slab breakpoints.
[[nodiscard]] AuditResult audit_trajectory(const Trajectory& trajectory, const ConvexSet& set);

struct InvarianceRow {
    std::string preset;
    std::string set_kind;
    std::string metric;
    double criterion_margin = 0.0;
    std::optional<double> symmetric_margin;
    double worst_violation = 0.0;
    double witness_t = 0.0;
    double witness_norm = 0.0;
};

[[nodiscard]] std::string invariance_csv(std::span<const InvarianceRow> rows);

}  // namespace evolveq
