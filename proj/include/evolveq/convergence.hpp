#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evolveq/forms.hpp"
#include "evolveq/mr_norms.hpp"
#include "evolveq/propagator.hpp"

namespace evolveq {

struct RefinementOptions {
    int threads = 1;
    /// Implicit Euler steps for the oracle gap column; 0 skips the oracle.
    int oracle_steps = 0;
};

/// Results of solving one problem on a nested dyadic ladder of uniform subdivisions.
struct RefinementStudy {
    std::vector<int> slab_counts;
    std::vector<double> mesh;
    /// Entry i compares ladder points i and i + 1.
    std::vector<double> diffs_l2V;
    std::vector<double> diffs_supH;
    /// Least-squares slope of log diff against log mesh over the last three differences.
    std::optional<double> rate;
    std::vector<MRReport> mr_rows;
    /// Lipschitz telescoping margin per ladder point (symmetric families only).
    std::vector<std::optional<double>> telescoping;
    /// Relative sup-H gap to the oracle per ladder point (when requested).
    std::vector<std::optional<double>> oracle_gaps;
    std::vector<Trajectory> trajectories;
};

/// ‖u_c − u_f‖_{L²(0,T;V)} for trajectories on nested subdivisions, integrated
/// exactly on each fine slab through the joint flow of (u_c − u_f, u_f, 1).
/// Throws Error{argument} if the coarse subdivision is not nested in the fine one.
[[nodiscard]] double l2v_difference(const Trajectory& coarse, const Trajectory& fine);

/// sup over `times` of ‖u_c(t) − u_f(t)‖_H.
[[nodiscard]] double sup_h_difference(const Trajectory& a, const Trajectory& b, std::span<const double> times);

/// Slope p of diff ∝ mesh^p by least squares on log-log data.
/// Empty when fewer than two points or any diff is not positive.
[[nodiscard]] std::optional<double> fit_rate(std::span<const double> mesh, std::span<const double> diffs);

/// Throws Error{argument} unless counts are positive, strictly increasing and
/// each divides the next.
[[nodiscard]] RefinementStudy refine(const ProblemData& problem, std::span<const int> slab_counts,
                                     const FormConstants& constants, const RefinementOptions& options = {});

struct OracleGap {
    double absolute = 0.0;  // sup ‖u_Λ − u_oracle‖_H
    double relative = 0.0;  // absolute / sup ‖u_oracle‖_H (0 when the oracle vanishes)
};

/// Compares a trajectory with slab data to an oracle trajectory on the oracle
/// grid, thinned to at most 4097 evenly spaced points.
[[nodiscard]] OracleGap oracle_gap(const Trajectory& trajectory, const Trajectory& oracle);

[[nodiscard]] OracleGap oracle_gap(const ProblemData& problem, const Subdivision& subdivision, int steps);

[[nodiscard]] std::string convergence_csv(const RefinementStudy& study);

}  // namespace evolveq
