#include "evolveq/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "evolveq/errors.hpp"
#include "evolveq/expm.hpp"
#include "evolveq/quadrature.hpp"

namespace evolveq {

namespace {

// exp(x) overflows a double just above x = 709.78.
constexpr double max_exponent = 700.0;

double h_operator_norm(const Matrix& h_factor, const Matrix& op)
{
    // ‖E‖_H = ‖R E R⁻¹‖₂ with G_H = RᵀR.
    const Matrix re = h_factor * op;
    const Matrix rer = h_factor.transpose().triangularView<Eigen::Lower>().solve(re.transpose()).transpose();
    Eigen::JacobiSVD<Matrix> svd(rer);
    return svd.singularValues()(0);
}

}  // namespace

// ---------------------------------------------------------------------------
// SlabPropagator

SlabPropagator::SlabPropagator(const GalerkinSpace& space, const Matrix& form_matrix, double length, bool symmetric,
                               double omega)
    : generator_(space.solve_h_columns(form_matrix)), length_(length), spectral_(symmetric)
{
    if (!(length > 0.0)) {
        throw Error(ErrorKind::argument, "slab length must be positive");
    }
    if (!generator_.allFinite()) {
        throw Error(ErrorKind::structural, "H-Gram solve failed while forming the slab generator");
    }
    if (spectral_) {
        Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> pencil(sym(form_matrix), sym(space.gram_h()),
                                                                Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
        if (pencil.info() != Eigen::Success) {
            throw Error(ErrorKind::structural, "eigensolver failed for the slab pencil (A_k, gram_H)");
        }
        rates_ = pencil.eigenvalues();
        modes_ = pencil.eigenvectors();
        coords_ = modes_.transpose() * space.gram_h();
    }

    const Matrix r = space.h_factor();
    conditioning_ = 0.0;
    for (const double frac : {0.25, 0.5, 1.0}) {
        const double h = frac * length_;
        conditioning_ = std::max(conditioning_, h_operator_norm(r, semigroup(h)) * std::exp(-omega * h));
    }
}

Matrix SlabPropagator::semigroup(double h) const
{
    if (h < 0.0) {
        throw Error(ErrorKind::argument, "semigroup time must be non-negative");
    }
    if (spectral_) {
        const Vector scale = (-h * rates_).array();
        if (scale.maxCoeff() > max_exponent) {
            throw Error(ErrorKind::numerical_range, "slab semigroup overflows: -h*lambda too large");
        }
        return modes_ * scale.array().exp().matrix().asDiagonal() * coords_;
    }
    return expm(-h * generator_);
}

Vector SlabPropagator::step(const Vector& u, const Vector& load_h, double h) const
{
    if (h < 0.0 || h > length_ * (1.0 + 1e-12)) {
        throw Error(ErrorKind::argument, "step duration must lie in [0, slab length]");
    }
    if (h == 0.0) {
        return u;
    }
    if (spectral_) {
        const Vector c = coords_ * u;
        const Vector d = coords_ * load_h;
        Vector out(c.size());
        for (Eigen::Index j = 0; j < c.size(); ++j) {
            const double z = -h * rates_(j);
            if (z > max_exponent) {
                throw Error(ErrorKind::numerical_range, "slab step overflows: -h*lambda too large");
            }
            out(j) = std::exp(z) * c(j) + h * phi1(z) * d(j);
        }
        return modes_ * out;
    }
    const Eigen::Index n = generator_.rows();
    const Matrix e = expm(h * augmented_generator(load_h));
    return e.topLeftCorner(n, n) * u + e.topRightCorner(n, 1);
}

Matrix SlabPropagator::augmented_generator(const Vector& load_h) const
{
    const Eigen::Index n = generator_.rows();
    Matrix c = Matrix::Zero(n + 1, n + 1);
    c.topLeftCorner(n, n) = -generator_;
    c.topRightCorner(n, 1) = load_h;
    return c;
}

Vector slab_step(const SlabPropagator& propagator, const Vector& u_in, const Vector& load_h, double h)
{
    return propagator.step(u_in, load_h, h);
}

// ---------------------------------------------------------------------------
// ProductPropagator

ProductPropagator::ProductPropagator(const StepForm& step_form)
    : subdivision_(step_form.subdivision()), dim_(step_form.space().dim())
{
    slabs_.reserve(static_cast<std::size_t>(step_form.slab_count()));
    for (int k = 0; k < step_form.slab_count(); ++k) {
        slabs_.emplace_back(step_form.space(), step_form.slab(k), subdivision_.length(k), step_form.symmetric());
    }
}

Matrix ProductPropagator::operator()(double a, double b) const
{
    if (a > b) {
        throw Error(ErrorKind::argument, "product(a, b) needs a <= b");
    }
    if (a < 0.0 || b > subdivision_.horizon()) {
        throw Error(ErrorKind::argument, "product(a, b) needs 0 <= a <= b <= T");
    }
    if (a == b) {
        return Matrix::Identity(dim_, dim_);
    }
    const int first = subdivision_.slab_index(a);
    const int last = subdivision_.slab_index(b);
    if (first == last) {
        return slab(first).semigroup(b - a);
    }
    Matrix p = slab(first).semigroup(subdivision_.end(first) - a);
    for (int k = first + 1; k < last; ++k) {
        p = slab(k).semigroup(subdivision_.length(k)) * p;
    }
    return slab(last).semigroup(b - subdivision_.start(last)) * p;
}

Matrix product(const StepForm& step_form, double a, double b) { return ProductPropagator(step_form)(a, b); }

// ---------------------------------------------------------------------------
// ProblemData

DualVector ProblemData::load_at(double t) const
{
    if (!load) {
        return {Vector::Zero(space().dim())};
    }
    DualVector f = load(t);
    if (f.coeffs.size() != space().dim() || !f.coeffs.allFinite()) {
        throw Error(ErrorKind::evaluation, "load evaluation is not a finite vector of the right size");
    }
    return f;
}

void ProblemData::validate() const
{
    if (u0.size() != space().dim()) {
        throw Error(ErrorKind::argument, "initial state dimension does not match the space");
    }
    if (!u0.allFinite()) {
        throw Error(ErrorKind::argument, "initial state has non-finite entries");
    }
}

Vector average_load(const ProblemData& problem, double a, double b)
{
    if (!problem.has_load()) {
        return Vector::Zero(problem.space().dim());
    }
    const Vector integral = quadrature::integrate_gauss4(
        a, b, quadrature::slab_panels, [&](double t) -> Vector { return problem.load_at(t).coeffs; });
    return problem.space().solve_h(integral / (b - a));
}

// ---------------------------------------------------------------------------
// Trajectory

Trajectory::Trajectory(GalerkinSpace space, std::vector<double> grid, std::vector<Vector> states, std::string tag,
                       std::shared_ptr<const SlabData> slabs)
    : space_(std::move(space)),
      grid_(std::move(grid)),
      states_(std::move(states)),
      tag_(std::move(tag)),
      slabs_(std::move(slabs))
{
    if (grid_.empty() || grid_.size() != states_.size()) {
        throw Error(ErrorKind::argument, "trajectory grid and states must be non-empty and of equal length");
    }
    if (grid_.front() != 0.0) {
        throw Error(ErrorKind::argument, "trajectory grid must start at 0");
    }
    for (std::size_t i = 1; i < grid_.size(); ++i) {
        if (!(grid_[i] > grid_[i - 1])) {
            throw Error(ErrorKind::argument, "trajectory grid must be strictly increasing");
        }
    }
    for (const auto& s : states_) {
        if (s.size() != space_.dim() || !s.allFinite()) {
            throw Error(ErrorKind::numerical_range, "trajectory state is not finite");
        }
    }
}

const Trajectory::SlabData& Trajectory::slab_data() const
{
    if (!slabs_) {
        throw Error(ErrorKind::contract, "trajectory '" + tag_ + "' carries no slab metadata");
    }
    return *slabs_;
}

Vector Trajectory::state_at(double t) const
{
    const SlabData& d = slab_data();
    const Subdivision& sub = d.step_form.subdivision();
    const int k = sub.slab_index(t);
    const auto kk = static_cast<std::size_t>(k);
    return d.propagators[kk].step(d.breakpoints[kk], d.loads[kk], std::min(t - sub.start(k), sub.length(k)));
}

Vector Trajectory::derivative_at(double t) const
{
    const SlabData& d = slab_data();
    const auto k = static_cast<std::size_t>(d.step_form.subdivision().slab_index(t));
    return d.loads[k] - d.propagators[k].generator() * state_at(t);
}

// ---------------------------------------------------------------------------
// Solvers

namespace {

std::vector<double> complete_grid(std::span<const double> output_grid, double horizon)
{
    std::vector<double> grid(output_grid.begin(), output_grid.end());
    for (const double t : grid) {
        if (!(t >= 0.0 && t <= horizon)) {
            throw Error(ErrorKind::argument, "output grid must lie in [0, T]");
        }
    }
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    if (grid.empty() || grid.front() != 0.0) {
        grid.insert(grid.begin(), 0.0);
    }
    if (grid.back() != horizon) {
        grid.push_back(horizon);
    }
    return grid;
}

}  // namespace

Trajectory solve(const ProblemData& problem, const Subdivision& subdivision, std::span<const double> output_grid)
{
    return solve(problem, build_step_form(problem.family, subdivision), output_grid);
}

Trajectory solve(const ProblemData& problem, const StepForm& step_form, std::span<const double> output_grid)
{
    problem.validate();
    const Subdivision& sub = step_form.subdivision();
    if (std::abs(sub.horizon() - problem.horizon()) > 1e-12 * problem.horizon()) {
        throw Error(ErrorKind::argument, "subdivision horizon differs from the problem horizon");
    }
    auto data = std::make_shared<Trajectory::SlabData>(Trajectory::SlabData{step_form, {}, {}, {}});
    const int n = sub.slab_count();
    data->propagators.reserve(static_cast<std::size_t>(n));
    data->loads.reserve(static_cast<std::size_t>(n));
    data->breakpoints.reserve(static_cast<std::size_t>(n) + 1);
    data->breakpoints.push_back(problem.u0);
    for (int k = 0; k < n; ++k) {
        data->propagators.emplace_back(problem.space(), step_form.slab(k), sub.length(k), step_form.symmetric());
        data->loads.push_back(average_load(problem, sub.start(k), sub.end(k)));
        data->breakpoints.push_back(
            data->propagators.back().step(data->breakpoints.back(), data->loads.back(), sub.length(k)));
    }

    std::vector<double> grid = complete_grid(output_grid, sub.horizon());
    std::vector<Vector> states;
    states.reserve(grid.size());
    for (const double t : grid) {
        const int k = sub.slab_index(t);
        const auto kk = static_cast<std::size_t>(k);
        states.push_back(data->propagators[kk].step(data->breakpoints[kk], data->loads[kk],
                                                    std::min(t - sub.start(k), sub.length(k))));
    }
    return Trajectory(problem.space(), std::move(grid), std::move(states), problem.tag, std::move(data));
}

Trajectory oracle_solve(const ProblemData& problem, int steps)
{
    if (steps < 1) {
        throw Error(ErrorKind::argument, "oracle needs at least one step");
    }
    problem.validate();
    const GalerkinSpace& space = problem.space();
    const double horizon = problem.horizon();
    const double dt = horizon / steps;
    std::vector<double> grid(static_cast<std::size_t>(steps) + 1);
    std::vector<Vector> states;
    states.reserve(grid.size());
    grid[0] = 0.0;
    states.push_back(problem.u0);
    for (int j = 1; j <= steps; ++j) {
        const double t = (j == steps) ? horizon : horizon * j / steps;
        grid[static_cast<std::size_t>(j)] = t;
        const Matrix lhs = space.gram_h() + dt * problem.family(t);
        const Vector rhs = space.gram_h() * states.back() + dt * problem.load_at(t).coeffs;
        Eigen::PartialPivLU<Matrix> lu(lhs);
        Vector next = lu.solve(rhs);
        if (!next.allFinite()) {
            throw Error(ErrorKind::structural, "implicit Euler solve failed");
        }
        states.push_back(std::move(next));
    }
    return Trajectory(space, std::move(grid), std::move(states), problem.tag + "/oracle");
}

}  // namespace evolveq
