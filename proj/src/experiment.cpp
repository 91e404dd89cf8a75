#include "evolveq/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "evolveq/errors.hpp"
#include "evolveq/parallel.hpp"

namespace evolveq {

namespace {

constexpr int constant_samples = 65;
constexpr double tol_identity = 1e-8;
constexpr double tol_indepmax = -1e-10;
constexpr double tol_telescoping = -1e-9;
constexpr double tol_criterion = -1e-12;
constexpr double tol_audit = 1e-9;

std::string num(double v) { return fmt::format("{:.16e}", v); }
std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string("nan"); }

ProblemData shifted_problem(const ProblemData& base, double omega)
{
    if (omega == 0.0) {
        return base;
    }
    LoadFunction load;
    if (base.has_load()) {
        load = [f = base.load, omega](double t) { return DualVector{std::exp(-omega * t) * f(t).coeffs}; };
    }
    return ProblemData{rescale(base.family, omega), base.u0, load, base.tag};
}

ConvexSet make_set(const InvarianceConfig& c, const GalerkinSpace& space)
{
    const Eigen::Index n = space.dim();
    if (c.set == "box") {
        return ConvexSet::box(space, Vector::Constant(n, c.lower), Vector::Constant(n, c.upper));
    }
    if (c.set == "halfspace") {
        return ConvexSet::halfspace(space, Vector::Ones(n), c.offset);
    }
    if (c.set == "ball") {
        return ConvexSet::ball(space, Vector::Zero(n), c.radius);
    }
    return ConvexSet::whole(space);
}

std::vector<double> output_grid(const ExperimentConfig& config, double horizon)
{
    if (config.output_points > 1) {
        return sample_times(horizon, config.output_points);
    }
    return Subdivision::uniform(horizon, config.slab_counts.back()).points();
}

void add(std::vector<Check>& checks, std::string name, bool passed, std::string detail)
{
    checks.push_back({std::move(name), passed, std::move(detail)});
}

void check_rows(ExperimentResult& r)
{
    const RefinementStudy& s = *r.study;
    for (std::size_t i = 0; i < s.mr_rows.size(); ++i) {
        const MRReport& m = s.mr_rows[i];
        const std::string at = fmt::format(" (n = {})", m.n_slabs);
        add(r.checks, "chain rule residual <= 1e-8" + at, m.residual_chain.value_or(0.0) <= tol_identity,
            opt(m.residual_chain));
        if (m.residual_product) {
            add(r.checks, "product rule residual <= 1e-8" + at, *m.residual_product <= tol_identity,
                num(*m.residual_product));
        }
        if (m.margin_lem3) {
            add(r.checks, "L2(V) estimate margin >= 0" + at, *m.margin_lem3 >= 0.0, num(*m.margin_lem3));
        }
        if (m.margin_indepmax) {
            add(r.checks, "slab maximum estimate margin >= -1e-10" + at, *m.margin_indepmax >= tol_indepmax,
                num(*m.margin_indepmax));
        }
        if (s.telescoping[i]) {
            add(r.checks, "Lipschitz telescoping margin >= -1e-9" + at, *s.telescoping[i] >= tol_telescoping,
                num(*s.telescoping[i]));
        }
    }
    for (std::size_t i = 1; i < s.diffs_l2V.size(); ++i) {
        const bool ok = s.diffs_l2V[i] <= std::max(1.05 * s.diffs_l2V[i - 1], 1e-11);
        add(r.checks, fmt::format("refinement difference non-increasing (n = {})", s.slab_counts[i + 1]), ok,
            num(s.diffs_l2V[i]));
    }
}

RefinementStudy solve_ladder(const ProblemData& problem, const ExperimentConfig& config, const FormConstants& constants)
{
    const double horizon = problem.horizon();
    const std::vector<double> grid = output_grid(config, horizon);
    const std::size_t points = config.slab_counts.size();
    std::vector<std::optional<Trajectory>> trajs(points);
    RefinementStudy s;
    s.slab_counts = config.slab_counts;
    s.mr_rows.resize(points);
    s.telescoping.resize(points);
    s.oracle_gaps.resize(points);
    std::optional<Trajectory> oracle;
    if (config.oracle_steps > 0) {
        oracle.emplace(oracle_solve(problem, config.oracle_steps));
    }
    parallel_for(points, config.threads, [&](std::size_t i) {
        trajs[i].emplace(solve(problem, Subdivision::uniform(horizon, config.slab_counts[i]), grid));
        s.mr_rows[i] = mr_report(*trajs[i], constants);
        if (problem.family.symmetric()) {
            s.telescoping[i] = telescoping_margin(*trajs[i], constants.lipschitz);
        }
        if (oracle) {
            s.oracle_gaps[i] = oracle_gap(*trajs[i], *oracle).relative;
        }
    });
    for (auto& t : trajs) {
        s.mesh.push_back(t->subdivision().mesh());
        s.trajectories.push_back(std::move(*t));
    }
    return s;
}

Trajectory original_trajectory(const ExperimentResult& r, const Trajectory& t)
{
    if (r.omega == 0.0) {
        return t;
    }
    std::vector<Vector> states;
    states.reserve(t.states().size());
    for (std::size_t i = 0; i < t.states().size(); ++i) {
        states.push_back(original_state(r, t, i));
    }
    return Trajectory(t.space(), t.grid(), std::move(states), t.tag());
}

void run_invariance(ExperimentResult& r)
{
    const ProblemData& problem = *r.problem;
    const ExperimentConfig& c = r.config;
    const ConvexSet set = make_set(c.invariance, problem.space());
    const std::vector<double> times = sample_times(problem.horizon(), c.invariance.time_samples);
    const SampleOptions options{c.invariance.samples, c.seed, c.threads};

    InvarianceOutcome out;
    out.criterion = check_criterion(problem.family, set, times, options, problem.load);
    if (problem.family.symmetric() && r.resolved.coercivity > 0.0) {
        out.symmetric = check_criterion_symmetric(problem.family, set, times, options);
    }
    out.certificate = stencil_certificate(problem.family, set, times);
    out.initial_in_set = set.contains(problem.u0);

    if (!r.study) {
        r.study = solve_ladder(problem, c, r.resolved);
    }
    for (const Trajectory& t : r.study->trajectories) {
        out.slab_counts.push_back(t.subdivision().slab_count());
        out.audits.push_back(audit_trajectory(original_trajectory(r, t), set));
    }

    double worst = 0.0;
    for (const AuditResult& a : out.audits) {
        worst = std::max(worst, a.violation);
    }
    out.row = {problem.tag,
               to_string(set.kind()),
               set.metric(),
               out.criterion.margin,
               out.symmetric ? std::optional<double>(out.symmetric->margin) : std::nullopt,
               worst,
               out.criterion.witness_t,
               out.criterion.witness_distance};

    if (out.criterion.margin >= tol_criterion && out.initial_in_set) {
        add(r.checks, "criterion holds => trajectories stay in the set (violation <= 1e-9)", worst <= tol_audit,
            num(worst));
    }
    if (out.certificate.applicable && out.certificate.holds) {
        add(r.checks, "stencil certificate agrees with sampled criterion", out.criterion.margin >= tol_criterion,
            num(out.criterion.margin));
    }
    r.invariance = std::move(out);
}

void write_file(ExperimentResult& r, const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) {
        throw Error(ErrorKind::argument, "cannot write " + path.string());
    }
    r.files.push_back(path);
}

}  // namespace

Pipeline parse_pipeline(const std::string& name)
{
    if (name == "constants") return Pipeline::constants;
    if (name == "solve") return Pipeline::solve;
    if (name == "converge") return Pipeline::converge;
    if (name == "invariance") return Pipeline::invariance;
    if (name == "all") return Pipeline::all;
    throw Error(ErrorKind::argument, "unknown pipeline '" + name + "'");
}

bool ExperimentResult::passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

Vector original_state(const ExperimentResult& result, const Trajectory& trajectory, std::size_t index)
{
    const Vector& w = trajectory.states().at(index);
    return result.omega == 0.0 ? w : Vector(std::exp(result.omega * trajectory.grid()[index]) * w);
}

ExperimentResult run_experiment(const ExperimentConfig& config, Pipeline pipeline)
{
    ExperimentResult r;
    r.config = config;
    r.pipeline = pipeline;
    const ProblemData base = make_problem(config.preset, config.options);
    const std::vector<double> grid = sample_times(base.horizon(), constant_samples);
    if (config.omega) {
        r.omega = *config.omega;
    } else if (!estimate_constants(base.family, grid).elliptic) {
        r.omega = select_omega(base.family, grid);
    }
    r.problem = shifted_problem(base, r.omega);
    r.sampled = estimate_constants(r.problem->family, grid);
    r.resolved = resolve_constants(r.problem->family, grid);
    r.embedding = embedding_constant(r.problem->space());

    const bool solve_like = pipeline == Pipeline::solve;
    const bool converge_like = pipeline == Pipeline::converge || pipeline == Pipeline::all;
    if (solve_like) {
        r.study = solve_ladder(*r.problem, config, r.resolved);
    } else if (converge_like) {
        r.study = refine(*r.problem, config.slab_counts, r.resolved, {config.threads, config.oracle_steps});
    }
    if (r.study) {
        check_rows(r);
    }
    if (pipeline == Pipeline::invariance || pipeline == Pipeline::all) {
        run_invariance(r);
    }
    return r;
}

std::string summary_text(const ExperimentResult& r)
{
    const ProblemData& p = *r.problem;
    std::string s;
    s += fmt::format("preset      {}\n", r.config.preset);
    s += fmt::format("dimension   {}\n", p.space().dim());
    s += fmt::format("horizon     {:.10g}\n", p.horizon());
    s += fmt::format("symmetric   {}\n", p.family.symmetric() ? "yes" : "no");
    s += fmt::format("load        {} (amplitude {:.10g})\n", r.config.options.load, r.config.options.amplitude);
    s += fmt::format("omega       {:.10g}\n", r.omega);
    s += fmt::format("c_H         {:.10g}\n\n", r.embedding);
    s += fmt::format("constants   M = {:.10g}, alpha = {:.10g}, L = {:.10g}\n", r.resolved.continuity,
                     r.resolved.coercivity, r.resolved.lipschitz);
    s += fmt::format("sampled     M = {:.10g}, alpha = {:.10g}, L = {:.10g} ({} samples)\n", r.sampled.continuity,
                     r.sampled.coercivity, r.sampled.lipschitz, r.sampled.samples);
    s += fmt::format("elliptic    {}\n", r.resolved.elliptic ? "yes" : "no");

    if (r.study) {
        const RefinementStudy& st = *r.study;
        s += fmt::format("\n{:>8} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}\n", "n", "mesh", "l2V", "mr_vh", "ratio_H",
                         "diff_l2V", "oracle_gap");
        for (std::size_t i = 0; i < st.slab_counts.size(); ++i) {
            const MRReport& m = st.mr_rows[i];
            const auto cell = [](const std::optional<double>& v) {
                return v ? fmt::format("{:12.4e}", *v) : fmt::format("{:>12}", "-");
            };
            s += fmt::format("{:>8} {:12.4e} {:12.4e} {:12.4e} {} {} {}\n", st.slab_counts[i], st.mesh[i], m.l2V,
                             m.mr_vh, cell(m.ratio_H),
                             cell(i < st.diffs_l2V.size() ? std::optional<double>(st.diffs_l2V[i]) : std::nullopt),
                             cell(st.oracle_gaps[i]));
        }
        if (!st.diffs_l2V.empty()) {
            s += fmt::format("\nfitted rate {}\n", st.rate ? fmt::format("{:.4f}", *st.rate) : std::string("n/a"));
        }
    }

    if (r.invariance) {
        const InvarianceOutcome& inv = *r.invariance;
        s += fmt::format("\nset         {} ({} metric)\n", inv.row.set_kind, inv.row.metric);
        s += fmt::format("criterion   margin {:.6e} at t = {:.6g} over {} samples\n", inv.criterion.margin,
                         inv.criterion.witness_t, inv.criterion.samples);
        if (inv.symmetric) {
            s += fmt::format("symmetric   margin {:.6e}\n", inv.symmetric->margin);
        }
        if (inv.certificate.applicable) {
            s += fmt::format("stencil     {} (max off-diagonal {:.6e})\n", inv.certificate.holds ? "certified" : "fails",
                             inv.certificate.max_off_diagonal);
        }
        s += fmt::format("u0 in set   {}\n", inv.initial_in_set ? "yes" : "no");
        for (std::size_t i = 0; i < inv.audits.size(); ++i) {
            s += fmt::format("audit n = {:<5} violation {:.6e} at t = {:.6g}\n", inv.slab_counts[i],
                             inv.audits[i].violation, inv.audits[i].t);
        }
    }

    if (!r.checks.empty()) {
        s += "\n";
        for (const Check& c : r.checks) {
            s += fmt::format("{} {} [{}]\n", c.passed ? "PASS" : "FAIL", c.name, c.detail);
        }
    }
    s += fmt::format("\nresult      {}\n", r.passed() ? "ok" : "FAILED");
    return s;
}

void write_artifacts(ExperimentResult& r, const std::filesystem::path& dir)
{
    std::filesystem::create_directories(dir);
    if (r.study) {
        const RefinementStudy& st = *r.study;
        std::string mr = mr_csv_header() + "\n";
        for (const MRReport& m : st.mr_rows) {
            mr += mr_csv_row(m) + "\n";
        }
        write_file(r, dir / "mr.csv", mr);

        if (r.pipeline == Pipeline::solve || r.pipeline == Pipeline::all) {
            for (const Trajectory& t : st.trajectories) {
                const int n = t.subdivision().slab_count();
                std::string csv = "t";
                for (Eigen::Index j = 0; j < t.space().dim(); ++j) {
                    csv += fmt::format(",u_{}", j);
                }
                csv += "\n";
                std::string dat;
                for (std::size_t i = 0; i < t.grid().size(); ++i) {
                    const Vector u = original_state(r, t, i);
                    csv += num(t.grid()[i]);
                    for (Eigen::Index j = 0; j < u.size(); ++j) {
                        csv += "," + num(u(j));
                    }
                    csv += "\n";
                    dat += num(t.grid()[i]) + " " + num(t.space().norm_h(u)) + "\n";
                }
                write_file(r, dir / fmt::format("traj_{}.csv", n), csv);
                write_file(r, dir / fmt::format("norm_h_{}.dat", n), dat);
            }
        }
        if (!st.diffs_l2V.empty()) {
            write_file(r, dir / "convergence.csv", convergence_csv(st));
            std::string dat;
            for (std::size_t i = 0; i < st.diffs_l2V.size(); ++i) {
                dat += num(st.mesh[i]) + " " + num(st.diffs_l2V[i]) + "\n";
            }
            write_file(r, dir / "diff_l2V.dat", dat);
        }
        std::string ratio;
        for (std::size_t i = 0; i < st.mr_rows.size(); ++i) {
            if (st.mr_rows[i].ratio_H) {
                ratio += num(st.mesh[i]) + " " + num(*st.mr_rows[i].ratio_H) + "\n";
            }
        }
        if (!ratio.empty()) {
            write_file(r, dir / "ratio_H.dat", ratio);
        }
    }
    if (r.invariance) {
        write_file(r, dir / "invariance.csv", invariance_csv(std::span(&r.invariance->row, 1)));
        std::string dat;
        for (std::size_t i = 0; i < r.invariance->audits.size(); ++i) {
            dat += fmt::format("{} {}\n", r.invariance->slab_counts[i], num(r.invariance->audits[i].violation));
        }
        write_file(r, dir / "violation.dat", dat);
    }
    write_file(r, dir / "summary.txt", summary_text(r));
}

}  // namespace evolveq
