#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evolveq/linalg.hpp"
#include "evolveq/propagator.hpp"

namespace evolveq {

struct PresetOptions {
    int elements = 32;               // P1 elements on [0, 1]; ignored by scalar presets
    std::optional<double> horizon;   // preset default when empty
    std::string metric = "lumped";   // H-Gram: lumped | consistent
    std::string load = "zero";       // zero | constant | smooth
    double amplitude = 1.0;
    std::string initial = "default"; // default | zero | ones | sine
};

struct PresetInfo {
    std::string name;
    std::string description;
};

[[nodiscard]] const std::vector<PresetInfo>& list_presets();
[[nodiscard]] bool has_preset(std::string_view name);

/// Builds the problem for a registered preset. Throws Error{unknown_preset}
/// for unregistered names and Error{config} for invalid options.
[[nodiscard]] ProblemData make_problem(std::string_view name, const PresetOptions& options = {});

namespace fem {

/// Uniform P1 nodes on [0, 1] with `elements` elements.
[[nodiscard]] std::vector<double> uniform_nodes(int elements);
[[nodiscard]] Matrix mass(const std::vector<double>& nodes);
[[nodiscard]] Matrix lumped_mass(const std::vector<double>& nodes);
/// ∫ w(x) u′v′ for w affine on each element (midpoint rule is exact).
template <class Weight>
[[nodiscard]] Matrix stiffness(const std::vector<double>& nodes, Weight&& weight)
{
    const auto n = static_cast<Eigen::Index>(nodes.size());
    Matrix k = Matrix::Zero(n, n);
    for (Eigen::Index e = 0; e + 1 < n; ++e) {
        const double h = nodes[static_cast<std::size_t>(e + 1)] - nodes[static_cast<std::size_t>(e)];
        const double c = weight(0.5 * (nodes[static_cast<std::size_t>(e)] + nodes[static_cast<std::size_t>(e + 1)])) / h;
        k(e, e) += c;
        k(e + 1, e + 1) += c;
        k(e, e + 1) -= c;
        k(e + 1, e) -= c;
    }
    return k;
}
/// Convection ∫ u′ v in the row-test / column-trial convention.
[[nodiscard]] Matrix convection(const std::vector<double>& nodes);

}  // namespace fem

}  // namespace evolveq
