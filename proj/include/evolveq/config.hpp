#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "evolveq/presets.hpp"

namespace evolveq {

struct InvarianceConfig {
    std::string set = "box";  // box | halfspace | ball | whole
    double lower = 0.0;       // box, every node
    double upper = std::numeric_limits<double>::infinity();
    double radius = 1.0;      // ball centred at 0
    double offset = 1.0;      // halfspace (1 | x)_H ≤ offset
    int samples = 10000;
    int time_samples = 33;
};

/// One experiment, read from a sectioned key-value file:
///
///     [experiment]  preset, elements, horizon, metric, initial, omega (number or auto)
///     [load]        name (zero | constant | smooth), amplitude
///     [ladder]      slab_counts (comma list), oracle_steps, output_points
///     [invariance]  set, lower, upper, radius, offset, samples, time_samples
///     [output]      dir, seed, threads
///
/// Only `experiment.preset` is required. Unknown sections or keys are errors.
struct ExperimentConfig {
    std::string preset;
    PresetOptions options;
    std::optional<double> omega;  // empty: 0 if the family is elliptic, else the smallest ω that makes it so
    std::vector<int> slab_counts{8, 16, 32, 64, 128, 256};
    int oracle_steps = 0;
    int output_points = 0;  // 0: breakpoints of the finest ladder subdivision
    InvarianceConfig invariance;
    std::optional<std::string> out_dir;
    std::uint64_t seed = 0;
    int threads = 1;
};

/// Throws Error{config} with the offending section/key, or Error{unknown_preset}.
[[nodiscard]] ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
[[nodiscard]] ExperimentConfig load_config(const std::filesystem::path& path);

/// Output directory by precedence: flag, then config, then $EVOLVEQ_OUT, then "evolveq-out".
[[nodiscard]] std::filesystem::path resolve_output_dir(const std::optional<std::string>& flag,
                                                       const ExperimentConfig& config);

}  // namespace evolveq
