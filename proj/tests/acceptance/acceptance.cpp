// Runs every acceptance criterion against the shipped configs and prints one
// PASS/FAIL line per criterion. Exit status is the number of failures.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "evolveq/config.hpp"
#include "evolveq/convergence.hpp"
#include "evolveq/errors.hpp"
#include "evolveq/experiment.hpp"
#include "evolveq/presets.hpp"

using namespace evolveq;
namespace fs = std::filesystem;

namespace {

const fs::path config_dir = EVOLVEQ_CONFIG_DIR;
const fs::path work_dir = EVOLVEQ_WORK_DIR;

struct Outcome {
    bool passed;
    std::string detail;
};

const std::vector<std::string> preset_names{"scalar-decay",    "scalar-sine",  "scalar-constant",  "heat-1d-lipschitz",
                                            "heat-1d-constant", "broken-coupling", "convdiff-1d", "heat-1d-reactive"};

ExperimentResult run_config(const std::string& name, Pipeline pipeline)
{
    return run_experiment(load_config(config_dir / name), pipeline);
}

// Solve runs of every preset config, shared by the per-preset criteria.
const std::map<std::string, ExperimentResult>& preset_runs()
{
    static const std::map<std::string, ExperimentResult> runs = [] {
        std::map<std::string, ExperimentResult> m;
        for (const auto& p : preset_names) {
            m.emplace(p, run_config("presets/" + p + ".ini", Pipeline::solve));
        }
        return m;
    }();
    return runs;
}

double max_of(double a, const std::optional<double>& b) { return b ? std::max(a, *b) : a; }

Outcome autonomous_collapse()
{
    double worst = 0.0;
    for (const char* p : {"scalar-constant", "heat-1d-constant"}) {
        const auto& trajs = preset_runs().at(p).study->trajectories;
        for (std::size_t i = 0; i < trajs.size(); ++i) {
            for (std::size_t j = i + 1; j < trajs.size(); ++j) {
                worst = std::max(worst, l2v_difference(trajs[i], trajs[j]));
            }
        }
    }
    return {worst <= 1e-11, fmt::format("max pairwise L2(V) difference {:.3e} (<= 1e-11)", worst)};
}

Outcome scalar_exactness()
{
    const std::map<std::string, double> integral{
        {"scalar-decay", 1.25}, {"scalar-sine", 4.0 * M_PI}, {"scalar-constant", 1.0}};
    double worst = 0.0;
    for (const auto& [name, total] : integral) {
        const ExperimentResult& r = preset_runs().at(name);
        const double exact = std::exp(-total) * r.problem->u0(0);
        for (const Trajectory& t : r.study->trajectories) {
            worst = std::max(worst, std::abs(t.states().back()(0) - exact));
        }
    }
    return {worst <= 1e-12, fmt::format("max |u(T) - exp(-int p) u0| {:.3e} (<= 1e-12)", worst)};
}

Outcome oracle_equivalence()
{
    const ExperimentResult r = run_config("oracle-heat.ini", Pipeline::solve);
    const double gap = r.study->oracle_gaps.at(0).value();
    return {gap <= 1e-3, fmt::format("relative sup-H gap at 256 slabs vs 1e5 Euler steps {:.3e} (<= 1e-3)", gap)};
}

Outcome refinement_cauchy(const ExperimentResult& r)
{
    const auto& d = r.study->diffs_l2V;
    bool decreasing = d.size() == 6;
    for (std::size_t i = 1; i < d.size(); ++i) {
        decreasing = decreasing && d[i] < d[i - 1];
    }
    const double rate = r.study->rate.value_or(0.0);
    return {decreasing && rate >= 0.9,
            fmt::format("diffs {:.3e} -> {:.3e} strictly decreasing: {}, fitted rate {:.3f} (>= 0.9)", d.front(),
                        d.back(), decreasing ? "yes" : "no", rate)};
}

Outcome lemma3_bound()
{
    double worst = 1e300;
    int presets = 0;
    for (const auto& [name, r] : preset_runs()) {
        if (r.omega != 0.0 || !r.resolved.elliptic) {
            continue;
        }
        ++presets;
        for (const MRReport& m : r.study->mr_rows) {
            worst = std::min(worst, m.margin_lem3.value_or(-1.0));
        }
    }
    return {worst >= 0.0, fmt::format("min margin {:.3e} over {} presets with omega = 0 (>= 0)", worst, presets)};
}

Outcome slab_maximum_bound()
{
    double worst = 1e300;
    int presets = 0;
    for (const auto& [name, r] : preset_runs()) {
        if (!r.problem->family.symmetric()) {
            continue;
        }
        ++presets;
        for (const MRReport& m : r.study->mr_rows) {
            worst = std::min(worst, m.margin_indepmax.value_or(-1.0));
        }
    }
    return {worst >= -1e-10, fmt::format("min margin {:.3e} over {} symmetric presets (>= -1e-10)", worst, presets)};
}

Outcome calculus_identities()
{
    double chain = 0.0;
    double product = 0.0;
    for (const auto& [name, r] : preset_runs()) {
        for (const MRReport& m : r.study->mr_rows) {
            chain = max_of(chain, m.residual_chain);
            if (r.problem->family.symmetric()) {
                product = max_of(product, m.residual_product.value_or(1.0));
            }
        }
    }
    return {chain <= 1e-8 && product <= 1e-8,
            fmt::format("max chain residual {:.3e}, max product residual {:.3e} (<= 1e-8)", chain, product)};
}

Outcome boundedness(const ExperimentResult& r)
{
    double lo = 1e300;
    double hi = 0.0;
    double telescoping = 1e300;
    for (std::size_t i = 0; i < r.study->mr_rows.size(); ++i) {
        const double ratio = r.study->mr_rows[i].ratio_H.value_or(0.0);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
        telescoping = std::min(telescoping, r.study->telescoping[i].value_or(-1.0));
    }
    const double spread = (hi - lo) / lo;
    return {spread <= 0.1 && telescoping >= -1e-9,
            fmt::format("ratio in [{:.4f}, {:.4f}], spread {:.3e} (<= 0.1); min telescoping margin {:.3e} (>= -1e-9)",
                        lo, hi, spread, telescoping)};
}

Outcome invariance()
{
    const ExperimentResult heat = run_config("invariance-heat.ini", Pipeline::invariance);
    const ExperimentResult broken = run_config("invariance-broken.ini", Pipeline::invariance);
    const InvarianceOutcome& h = *heat.invariance;
    const InvarianceOutcome& b = *broken.invariance;
    const bool heat_ok = h.criterion.margin >= -1e-12 && h.row.worst_violation <= 1e-10 && h.initial_in_set &&
                         h.criterion.samples >= 10000;
    const bool broken_ok = b.criterion.margin < 0.0 && b.row.worst_violation > 0.0;
    return {heat_ok && broken_ok,
            fmt::format("heat margin {:.3e}, violation {:.3e}; broken margin {:.3e}, violation {:.3e}",
                        h.criterion.margin, h.row.worst_violation, b.criterion.margin, b.row.worst_violation)};
}

Outcome rescaling()
{
    const ExperimentResult base = run_config("rescale-omega0.ini", Pipeline::solve);
    double worst = 0.0;
    for (const char* name : {"rescale-omega1.ini", "rescale-omega5.ini"}) {
        const ExperimentResult shifted = run_config(name, Pipeline::solve);
        for (std::size_t k = 0; k < base.study->trajectories.size(); ++k) {
            const Trajectory& a = base.study->trajectories[k];
            const Trajectory& b = shifted.study->trajectories[k];
            for (std::size_t i = 0; i < a.grid().size(); ++i) {
                const Vector u = original_state(base, a, i);
                const Vector w = original_state(shifted, b, i);
                worst = std::max(worst, a.space().norm_h(u - w) / a.space().norm_h(u));
            }
        }
    }
    return {worst <= 1e-9, fmt::format("max relative H difference {:.3e} for omega in {{1, 5}} (<= 1e-9)", worst)};
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism()
{
    const fs::path config = config_dir / "determinism.ini";
    std::vector<fs::path> dirs;
    for (int threads : {1, 4}) {
        const fs::path dir = work_dir / fmt::format("determinism-t{}", threads);
        fs::remove_all(dir);
        const std::string cmd = fmt::format("\"{}\" all --config \"{}\" --out \"{}\" --threads {} > \"{}\" 2>&1",
                                            EVOLVEQ_CLI, config.string(), dir.string(), threads,
                                            (work_dir / fmt::format("determinism-t{}.log", threads)).string());
        if (std::system(cmd.c_str()) != 0) {
            return {false, "CLI run failed: " + cmd};
        }
        dirs.push_back(dir);
    }
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(dirs[0])) {
        if (entry.path().extension() != ".csv") {
            continue;
        }
        const fs::path other = dirs[1] / entry.path().filename();
        if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
            return {false, "differs: " + entry.path().filename().string()};
        }
        ++compared;
    }
    return {compared > 0, fmt::format("{} CSV files byte-identical for --threads 1 and 4", compared)};
}

}  // namespace

int main()
{
    fs::create_directories(work_dir);
    std::optional<ExperimentResult> refinement;
    const auto refinement_run = [&]() -> const ExperimentResult& {
        if (!refinement) {
            refinement = run_config("refinement-heat.ini", Pipeline::converge);
        }
        return *refinement;
    };

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"autonomous collapse", autonomous_collapse},
        {"scalar exactness", scalar_exactness},
        {"oracle equivalence", oracle_equivalence},
        {"refinement Cauchy behavior", [&] { return refinement_cauchy(refinement_run()); }},
        {"L2(V) a priori bound", lemma3_bound},
        {"per-slab maximum bound", slab_maximum_bound},
        {"chain and product rules", calculus_identities},
        {"MR(V,H) boundedness and telescoping", [&] { return boundedness(refinement_run()); }},
        {"convex-set invariance", invariance},
        {"rescaling equivariance", rescaling},
        {"determinism across thread counts", determinism},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const Error& e) {
            o = {false, fmt::format("error[{}]: {}", to_string(e.kind()), e.what())};
        } catch (const std::exception& e) {
            o = {false, fmt::format("error: {}", e.what())};
        }
        failures += o.passed ? 0 : 1;
        std::printf("%s %2zu %s: %s\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures;
}
