#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "evolveq/config.hpp"
#include "evolveq/convergence.hpp"
#include "evolveq/invariance.hpp"

namespace evolveq {

enum class Pipeline { constants, solve, converge, invariance, all };

/// Parses constants | solve | converge | invariance | all; throws Error{argument} otherwise.
[[nodiscard]] Pipeline parse_pipeline(const std::string& name);

/// One named pass/fail check evaluated by a run.
struct Check {
    std::string name;
    bool passed = true;
    std::string detail;
};

struct InvarianceOutcome {
    CriterionResult criterion;
    std::optional<CriterionResult> symmetric;
    StencilCertificate certificate;
    bool initial_in_set = false;
    std::vector<int> slab_counts;
    std::vector<AuditResult> audits;  // one per ladder point
    InvarianceRow row;
};

struct ExperimentResult {
    ExperimentConfig config;
    Pipeline pipeline = Pipeline::all;
    /// Problem actually solved: the preset, rescaled by ω with load e^{−ωt}f when ω > 0.
    std::optional<ProblemData> problem;
    double omega = 0.0;
    FormConstants sampled;   // estimated on the sample grid
    FormConstants resolved;  // with declared constants substituted
    double embedding = 0.0;  // c_H
    /// Ladder solves (rows and trajectories); differences only for converge/all.
    std::optional<RefinementStudy> study;
    std::optional<InvarianceOutcome> invariance;
    std::vector<Check> checks;
    std::vector<std::filesystem::path> files;

    [[nodiscard]] bool passed() const;
};

/// Runs a pipeline without writing files.
[[nodiscard]] ExperimentResult run_experiment(const ExperimentConfig& config, Pipeline pipeline);

/// Writes the artifacts of a run into `dir` (created if missing):
/// summary.txt always; mr.csv and traj_<n>.csv for solve; convergence.csv for
/// converge; invariance.csv for invariance; two-column .dat files for plots.
void write_artifacts(ExperimentResult& result, const std::filesystem::path& dir);

/// Plain-text report of a run (also the content of summary.txt).
[[nodiscard]] std::string summary_text(const ExperimentResult& result);

/// State of the original (unshifted) problem: e^{ωt} w(t).
[[nodiscard]] Vector original_state(const ExperimentResult& result, const Trajectory& trajectory, std::size_t index);

}  // namespace evolveq
