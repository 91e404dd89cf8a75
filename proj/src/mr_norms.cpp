#include "evolveq/mr_norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "evolveq/errors.hpp"
#include "evolveq/moments.hpp"

namespace evolveq {

namespace {

constexpr int sup_samples_per_slab = 17;

double root(double square) { return std::sqrt(std::max(square, 0.0)); }

std::vector<double> segment_points(const Trajectory& traj)
{
    const auto& breaks = traj.subdivision().points();
    const auto& grid = traj.grid();
    std::vector<double> pts;
    pts.reserve(breaks.size() + grid.size());
    std::merge(breaks.begin(), breaks.end(), grid.begin(), grid.end(), std::back_inserter(pts));
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
}

Matrix lift(const Matrix& block, Eigen::Index n)
{
    Matrix q = Matrix::Zero(n + 1, n + 1);
    q.topLeftCorner(block.rows(), block.cols()) = block;
    return q;
}

void require_symmetric(const Trajectory& traj, const char* what)
{
    if (!traj.slab_data().step_form.symmetric()) {
        throw Error(ErrorKind::contract, std::string(what) + " needs a symmetric family");
    }
}

}  // namespace

TrajectoryIntegrals::TrajectoryIntegrals(const Trajectory& trajectory) : trajectory_(&trajectory)
{
    const auto& data = trajectory.slab_data();
    const GalerkinSpace& space = trajectory.space();
    const Eigen::Index n = space.dim();
    const Subdivision& sub = data.step_form.subdivision();
    const bool symmetric = data.step_form.symmetric();
    const Matrix s_v = space.v_factor();

    q_v_ = lift(space.gram_v(), n);
    const auto slabs = static_cast<std::size_t>(sub.slab_count());
    q_dot_h_.reserve(slabs);
    q_dot_vp_.reserve(slabs);
    q_chain_.reserve(slabs);
    for (std::size_t k = 0; k < slabs; ++k) {
        // u̇ = R z with z = (u, 1).
        Matrix r(n, n + 1);
        r.leftCols(n) = -data.propagators[k].generator();
        r.col(n) = data.loads[k];
        const Matrix hr = space.gram_h() * r;
        const Matrix w = s_v.transpose().triangularView<Eigen::Lower>().solve(hr);
        q_dot_h_.push_back(r.transpose() * hr);
        q_dot_vp_.push_back(w.transpose() * w);
        q_chain_.push_back(sym(2.0 * lift(hr, n)));
        if (symmetric) {
            q_product_.push_back(sym(2.0 * lift(data.step_form.slab(static_cast<int>(k)) * r, n)));
        }
    }

    const std::vector<double> pts = segment_points(trajectory);
    segments_.reserve(pts.size());
    Vector z(n + 1);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double a = pts[i];
        const double b = pts[i + 1];
        const int k = sub.slab_index(a);
        const auto kk = static_cast<std::size_t>(k);
        z.head(n) = trajectory.state_at(a);
        z(n) = 1.0;
        const Matrix c = data.propagators[kk].augmented_generator(data.loads[kk]);
        segments_.push_back({k, a, b, second_moment(c, z, b - a)});
    }
}

namespace {

MRReport norms_from(const TrajectoryIntegrals& ints)
{
    const Trajectory& trajectory = ints.trajectory();
    const auto& data = trajectory.slab_data();
    const Subdivision& sub = data.step_form.subdivision();
    const GalerkinSpace& space = trajectory.space();
    const double t0 = 0.0;
    const double t1 = trajectory.horizon();

    MRReport r;
    r.n_slabs = sub.slab_count();
    r.mesh = sub.mesh();
    r.l2V = root(ints.integrate([&](int) -> const Matrix& { return ints.l2v_form(); }, t0, t1));
    r.h1H = root(ints.integrate([&](int k) -> const Matrix& { return ints.h1h_form(k); }, t0, t1));
    r.h1Vp = root(ints.integrate([&](int k) -> const Matrix& { return ints.h1vp_form(k); }, t0, t1));
    r.mr_vvp = std::hypot(r.l2V, r.h1Vp);
    r.mr_vh = std::hypot(r.l2V, r.h1H);

    for (int k = 0; k < sub.slab_count(); ++k) {
        const auto kk = static_cast<std::size_t>(k);
        for (int j = 0; j < sup_samples_per_slab; ++j) {
            const double h = sub.length(k) * j / (sup_samples_per_slab - 1);
            r.supV = std::max(r.supV, space.norm_v(data.propagators[kk].step(data.breakpoints[kk], data.loads[kk], h)));
        }
    }
    for (const Vector& s : trajectory.states()) {
        r.supV = std::max(r.supV, space.norm_v(s));
    }
    return r;
}

double chain_from(const TrajectoryIntegrals& ints)
{
    const Trajectory& trajectory = ints.trajectory();
    const GalerkinSpace& space = trajectory.space();
    const auto& grid = trajectory.grid();
    const auto& states = trajectory.states();
    double worst = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        const double lhs = space.inner_h(states[i + 1], states[i + 1]) - space.inner_h(states[i], states[i]);
        const double rhs = ints.integrate([&](int k) -> const Matrix& { return ints.chain_form(k); }, grid[i], grid[i + 1]);
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

double product_from(const TrajectoryIntegrals& ints)
{
    const Trajectory& trajectory = ints.trajectory();
    require_symmetric(trajectory, "the product rule check");
    const auto& data = trajectory.slab_data();
    const Subdivision& sub = data.step_form.subdivision();
    double worst = 0.0;
    for (int k = 0; k < sub.slab_count(); ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const Matrix& a = data.step_form.slab(k);
        const Vector& u0 = data.breakpoints[kk];
        const Vector& u1 = data.breakpoints[kk + 1];
        const double lhs = u1.dot(a * u1) - u0.dot(a * u0);
        const double rhs = ints.integrate([&](int s) -> const Matrix& { return ints.product_form(s); }, sub.start(k),
                                          sub.end(k));
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

}  // namespace

MRReport mr_norms(const Trajectory& trajectory) { return norms_from(TrajectoryIntegrals(trajectory)); }

double check_chain_rule(const Trajectory& trajectory) { return chain_from(TrajectoryIntegrals(trajectory)); }

double check_product_rule(const Trajectory& trajectory)
{
    require_symmetric(trajectory, "the product rule check");
    return product_from(TrajectoryIntegrals(trajectory));
}

double check_lemma_indepmax(const Trajectory& trajectory, const FormConstants& constants)
{
    require_symmetric(trajectory, "the slab maximum estimate");
    if (constants.omega != 0.0 || !(constants.coercivity > 0.0)) {
        throw Error(ErrorKind::contract, "the slab maximum estimate needs omega = 0 and positive coercivity");
    }
    const auto& data = trajectory.slab_data();
    const Subdivision& sub = data.step_form.subdivision();
    const GalerkinSpace& space = trajectory.space();
    const auto& grid = trajectory.grid();
    double margin = std::numeric_limits<double>::infinity();
    for (int k = 0; k < sub.slab_count(); ++k) {
        const auto kk = static_cast<std::size_t>(k);
        const auto& prop = data.propagators[kk];
        double sup = 0.0;
        for (int j = 0; j < sup_samples_per_slab; ++j) {
            const double h = sub.length(k) * j / (sup_samples_per_slab - 1);
            sup = std::max(sup, std::pow(space.norm_v(prop.step(data.breakpoints[kk], data.loads[kk], h)), 2));
        }
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (grid[i] > sub.start(k) && grid[i] < sub.end(k)) {
                sup = std::max(sup, std::pow(space.norm_v(trajectory.states()[i]), 2));
            }
        }
        const double load = sub.length(k) * std::pow(space.norm_h(data.loads[kk]), 2);
        const double rhs =
            (constants.continuity * std::pow(space.norm_v(data.breakpoints[kk]), 2) + load) / constants.coercivity;
        margin = std::min(margin, rhs - sup);
    }
    return margin;
}

namespace {

double lemma3_from(const TrajectoryIntegrals& ints, double coercivity)
{
    const Trajectory& trajectory = ints.trajectory();
    const auto& data = trajectory.slab_data();
    const GalerkinSpace& space = trajectory.space();
    const double c2 = std::max(1.0 / (coercivity * coercivity), 1.0 / coercivity);
    const double u0_sq = space.inner_h(data.breakpoints.front(), data.breakpoints.front());

    std::vector<double> load_sq;
    load_sq.reserve(data.loads.size());
    for (const Vector& f : data.loads) {
        load_sq.push_back(std::pow(dual_norm(space, space.h_representation(f)), 2));
    }

    const auto& grid = trajectory.grid();
    std::size_t next = 1;
    double lhs = 0.0;
    double load = 0.0;
    double margin = c2 * u0_sq;
    for (const auto& s : ints.segments()) {
        lhs += moment_integral(ints.l2v_form(), s.moment);
        load += (s.end - s.start) * load_sq[static_cast<std::size_t>(s.slab)];
        if (next < grid.size() && s.end == grid[next]) {
            margin = std::min(margin, c2 * (load + u0_sq) - lhs);
            ++next;
        }
    }
    return margin;
}

double h_estimate_from(const TrajectoryIntegrals& ints, double mr_vh)
{
    const Trajectory& trajectory = ints.trajectory();
    const auto& data = trajectory.slab_data();
    const GalerkinSpace& space = trajectory.space();
    const Subdivision& sub = data.step_form.subdivision();
    double load_sq = 0.0;
    for (int k = 0; k < sub.slab_count(); ++k) {
        load_sq += sub.length(k) * std::pow(space.norm_h(data.loads[static_cast<std::size_t>(k)]), 2);
    }
    const double denominator = space.norm_v(data.breakpoints.front()) + std::sqrt(load_sq);
    if (denominator == 0.0) {
        return 0.0;
    }
    return mr_vh / denominator;
}

}  // namespace

double check_lemma3(const Trajectory& trajectory, double coercivity)
{
    if (!(coercivity > 0.0)) {
        throw Error(ErrorKind::contract, "the L2(V) estimate needs positive coercivity at omega = 0");
    }
    return lemma3_from(TrajectoryIntegrals(trajectory), coercivity);
}

double check_h_estimate(const Trajectory& trajectory)
{
    require_symmetric(trajectory, "the MR(V,H) estimate");
    const TrajectoryIntegrals ints(trajectory);
    return h_estimate_from(ints, norms_from(ints).mr_vh);
}

double telescoping_margin(const Trajectory& trajectory, double lipschitz)
{
    const auto& data = trajectory.slab_data();
    const GalerkinSpace& space = trajectory.space();
    const Subdivision& sub = data.step_form.subdivision();
    double margin = std::numeric_limits<double>::infinity();
    for (int k = 0; k + 1 < sub.slab_count(); ++k) {
        const Vector& u = data.breakpoints[static_cast<std::size_t>(k) + 1];
        const double jump = std::abs(u.dot((data.step_form.slab(k) - data.step_form.slab(k + 1)) * u));
        const double bound = lipschitz * 0.5 * (sub.length(k) + sub.length(k + 1)) * std::pow(space.norm_v(u), 2);
        margin = std::min(margin, bound - jump);
    }
    return margin;
}

MRReport mr_report(const Trajectory& trajectory, const FormConstants& constants)
{
    const TrajectoryIntegrals ints(trajectory);
    MRReport r = norms_from(ints);
    r.residual_chain = chain_from(ints);
    const bool symmetric = trajectory.slab_data().step_form.symmetric();
    const bool certified = constants.omega == 0.0 && constants.coercivity > 0.0;
    if (symmetric) {
        r.residual_product = product_from(ints);
        r.ratio_H = h_estimate_from(ints, r.mr_vh);
    }
    if (certified) {
        r.margin_lem3 = lemma3_from(ints, constants.coercivity);
        if (symmetric) {
            r.margin_indepmax = check_lemma_indepmax(trajectory, constants);
        }
    }
    return r;
}

std::string mr_csv_header()
{
    return "n_slabs,mesh,l2V,h1H,h1Vp,supV,mr_vvp,mr_vh,residual_chain,residual_product,margin_lem3,margin_indepmax,"
           "ratio_H";
}

std::string mr_csv_row(const MRReport& r)
{
    const auto opt = [](const std::optional<double>& v) { return v ? fmt::format("{:.16e}", *v) : std::string("nan"); };
    return fmt::format("{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{},{},{},{}", r.n_slabs, r.mesh,
                       r.l2V, r.h1H, r.h1Vp, r.supV, r.mr_vvp, r.mr_vh, opt(r.residual_chain),
                       opt(r.residual_product), opt(r.margin_lem3), opt(r.margin_indepmax), opt(r.ratio_H));
}

}  // namespace evolveq
