#include "evolveq/convergence.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "evolveq/errors.hpp"
#include "evolveq/moments.hpp"
#include "evolveq/parallel.hpp"

namespace evolveq {

namespace {

constexpr std::size_t max_oracle_points = 4097;

std::string number(const std::optional<double>& v)
{
    return v && std::isfinite(*v) ? fmt::format("{:.16e}", *v) : std::string("nan");
}

}  // namespace

double l2v_difference(const Trajectory& coarse, const Trajectory& fine)
{
    const auto& cd = coarse.slab_data();
    const auto& fd = fine.slab_data();
    const Subdivision& cs = cd.step_form.subdivision();
    const Subdivision& fs = fd.step_form.subdivision();
    if (!cs.nested_in(fs)) {
        throw Error(ErrorKind::argument, "coarse subdivision is not nested in the fine one");
    }
    const GalerkinSpace& space = fine.space();
    const Eigen::Index n = space.dim();
    Matrix q = Matrix::Zero(2 * n + 1, 2 * n + 1);
    q.topLeftCorner(n, n) = space.gram_v();

    double total = 0.0;
    Matrix c = Matrix::Zero(2 * n + 1, 2 * n + 1);
    Vector y(2 * n + 1);
    for (int j = 0; j < fs.slab_count(); ++j) {
        const auto jj = static_cast<std::size_t>(j);
        const double a = fs.start(j);
        const auto kk = static_cast<std::size_t>(cs.slab_index(a));
        const Matrix& bc = cd.propagators[kk].generator();
        const Matrix& bf = fd.propagators[jj].generator();
        // e = u_c − u_f obeys ė = −B_c e + (B_f − B_c) u_f + (f̄_c − f̄_f).
        c.setZero();
        c.block(0, 0, n, n) = -bc;
        c.block(0, n, n, n) = bf - bc;
        c.block(0, 2 * n, n, 1) = cd.loads[kk] - fd.loads[jj];
        c.block(n, n, n, n) = -bf;
        c.block(n, 2 * n, n, 1) = fd.loads[jj];
        y.head(n) = coarse.state_at(a) - fd.breakpoints[jj];
        y.segment(n, n) = fd.breakpoints[jj];
        y(2 * n) = 1.0;
        total += moment_integral(q, second_moment(c, y, fs.length(j)));
    }
    return std::sqrt(std::max(total, 0.0));
}

double sup_h_difference(const Trajectory& a, const Trajectory& b, std::span<const double> times)
{
    double worst = 0.0;
    for (const double t : times) {
        worst = std::max(worst, a.space().norm_h(a.state_at(t) - b.state_at(t)));
    }
    return worst;
}

std::optional<double> fit_rate(std::span<const double> mesh, std::span<const double> diffs)
{
    if (mesh.size() != diffs.size() || diffs.size() < 2) {
        return std::nullopt;
    }
    double sx = 0.0;
    double sy = 0.0;
    double sxx = 0.0;
    double sxy = 0.0;
    const auto m = static_cast<double>(diffs.size());
    for (std::size_t i = 0; i < diffs.size(); ++i) {
        if (!(diffs[i] > 0.0) || !(mesh[i] > 0.0)) {
            return std::nullopt;
        }
        const double x = std::log(mesh[i]);
        const double y = std::log(diffs[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double denom = m * sxx - sx * sx;
    if (denom == 0.0) {
        return std::nullopt;
    }
    return (m * sxy - sx * sy) / denom;
}

RefinementStudy refine(const ProblemData& problem, std::span<const int> slab_counts, const FormConstants& constants,
                       const RefinementOptions& options)
{
    if (slab_counts.empty()) {
        throw Error(ErrorKind::argument, "refinement needs at least one slab count");
    }
    for (std::size_t i = 0; i < slab_counts.size(); ++i) {
        if (slab_counts[i] < 1) {
            throw Error(ErrorKind::argument, "slab counts must be positive");
        }
        if (i > 0 && (slab_counts[i] <= slab_counts[i - 1] || slab_counts[i] % slab_counts[i - 1] != 0)) {
            throw Error(ErrorKind::argument, "slab counts must be strictly increasing and each must divide the next");
        }
    }
    const double horizon = problem.horizon();
    const std::size_t points = slab_counts.size();
    RefinementStudy study;
    study.slab_counts.assign(slab_counts.begin(), slab_counts.end());
    const std::vector<double> common = Subdivision::uniform(horizon, slab_counts.back()).points();

    std::vector<std::optional<Trajectory>> trajs(points);
    parallel_for(points, options.threads, [&](std::size_t i) {
        trajs[i].emplace(solve(problem, Subdivision::uniform(horizon, slab_counts[i]), common));
    });
    for (auto& t : trajs) {
        study.trajectories.push_back(std::move(*t));
        study.mesh.push_back(study.trajectories.back().subdivision().mesh());
    }

    const bool symmetric = problem.family.symmetric();
    std::optional<Trajectory> oracle;
    if (options.oracle_steps > 0) {
        oracle.emplace(oracle_solve(problem, options.oracle_steps));
    }

    // Tasks: one per ladder point (reports) and one per consecutive pair (differences).
    study.mr_rows.resize(points);
    study.telescoping.resize(points);
    study.oracle_gaps.resize(points);
    study.diffs_l2V.resize(points - 1);
    study.diffs_supH.resize(points - 1);
    parallel_for(2 * points - 1, options.threads, [&](std::size_t task) {
        if (task < points) {
            const Trajectory& t = study.trajectories[task];
            study.mr_rows[task] = mr_report(t, constants);
            if (symmetric) {
                study.telescoping[task] = telescoping_margin(t, constants.lipschitz);
            }
            if (oracle) {
                study.oracle_gaps[task] = oracle_gap(t, *oracle).relative;
            }
        } else {
            const std::size_t i = task - points;
            study.diffs_l2V[i] = l2v_difference(study.trajectories[i], study.trajectories[i + 1]);
            study.diffs_supH[i] = sup_h_difference(study.trajectories[i], study.trajectories[i + 1], common);
        }
    });

    const std::size_t tail = std::min<std::size_t>(3, study.diffs_l2V.size());
    const std::size_t first = study.diffs_l2V.size() - tail;
    study.rate = fit_rate(std::span(study.mesh).subspan(first, tail), std::span(study.diffs_l2V).subspan(first, tail));
    return study;
}

OracleGap oracle_gap(const Trajectory& trajectory, const Trajectory& oracle)
{
    if (std::abs(trajectory.horizon() - oracle.horizon()) > 1e-12 * oracle.horizon()) {
        throw Error(ErrorKind::argument, "trajectory and oracle have different horizons");
    }
    const auto& grid = oracle.grid();
    const std::size_t steps = grid.size() - 1;
    const std::size_t samples = std::min(max_oracle_points - 1, steps);
    const GalerkinSpace& space = trajectory.space();
    OracleGap gap;
    double scale = 0.0;
    for (std::size_t j = 0; j <= samples; ++j) {
        const std::size_t i = (j * steps) / samples;
        const Vector& reference = oracle.states()[i];
        gap.absolute = std::max(gap.absolute, space.norm_h(trajectory.state_at(grid[i]) - reference));
        scale = std::max(scale, space.norm_h(reference));
    }
    gap.relative = scale > 0.0 ? gap.absolute / scale : 0.0;
    return gap;
}

OracleGap oracle_gap(const ProblemData& problem, const Subdivision& subdivision, int steps)
{
    return oracle_gap(solve(problem, subdivision, std::vector<double>{}), oracle_solve(problem, steps));
}

std::string convergence_csv(const RefinementStudy& study)
{
    std::string out = "n_slabs,mesh,diff_l2V,diff_supH,rate_estimate,oracle_gap\n";
    const std::size_t points = study.slab_counts.size();
    for (std::size_t i = 0; i < points; ++i) {
        std::optional<double> l2v;
        std::optional<double> suph;
        std::optional<double> local;
        if (i + 1 < points) {
            l2v = study.diffs_l2V[i];
            suph = study.diffs_supH[i];
        }
        if (i >= 1 && i + 1 < points) {
            const std::vector<double> m{study.mesh[i - 1], study.mesh[i]};
            const std::vector<double> d{study.diffs_l2V[i - 1], study.diffs_l2V[i]};
            local = fit_rate(m, d);
        }
        out += fmt::format("{},{:.16e},{},{},{},{}\n", study.slab_counts[i], study.mesh[i], number(l2v), number(suph),
                           number(local), number(study.oracle_gaps[i]));
    }
    return out;
}

}  // namespace evolveq
