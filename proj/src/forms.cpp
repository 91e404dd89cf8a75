#include "evolveq/forms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "evolveq/errors.hpp"
#include "evolveq/quadrature.hpp"

namespace evolveq {

// ---------------------------------------------------------------------------
// Subdivision

Subdivision::Subdivision(std::vector<double> points) : points_(std::move(points))
{
    if (points_.size() < 2) {
        throw Error(ErrorKind::argument, "a subdivision needs at least two points");
    }
    if (points_.front() != 0.0) {
        throw Error(ErrorKind::argument, "a subdivision must start at 0");
    }
    for (std::size_t i = 1; i < points_.size(); ++i) {
        if (!(points_[i] > points_[i - 1]) || !std::isfinite(points_[i])) {
            throw Error(ErrorKind::argument, "subdivision points must be finite and strictly increasing");
        }
        mesh_ = std::max(mesh_, points_[i] - points_[i - 1]);
    }
}

Subdivision Subdivision::uniform(double horizon, int slabs)
{
    if (slabs < 1 || !(horizon > 0.0)) {
        throw Error(ErrorKind::argument, "uniform subdivision needs slabs >= 1 and T > 0");
    }
    std::vector<double> pts(static_cast<std::size_t>(slabs) + 1);
    for (int k = 0; k <= slabs; ++k) {
        pts[static_cast<std::size_t>(k)] = horizon * k / slabs;
    }
    pts.back() = horizon;
    return Subdivision(std::move(pts));
}

int Subdivision::slab_index(double t) const
{
    if (t < 0.0 || t > horizon()) {
        throw Error(ErrorKind::argument, "time outside [0, T]");
    }
    if (t == horizon()) {
        return slab_count() - 1;
    }
    const auto it = std::upper_bound(points_.begin(), points_.end(), t);
    return static_cast<int>(it - points_.begin()) - 1;
}

bool Subdivision::is_uniform(double rel_tol) const noexcept
{
    const double h = horizon() / slab_count();
    for (int k = 0; k < slab_count(); ++k) {
        if (std::abs(length(k) - h) > rel_tol * h) {
            return false;
        }
    }
    return true;
}

bool Subdivision::nested_in(const Subdivision& finer) const
{
    const auto& fine = finer.points();
    const double tol = 1e-12 * horizon();
    return std::all_of(points_.begin(), points_.end(), [&](double p) {
        const auto it = std::lower_bound(fine.begin(), fine.end(), p - tol);
        return it != fine.end() && std::abs(*it - p) <= tol;
    });
}

// ---------------------------------------------------------------------------
// FormFamily

FormFamily::FormFamily(GalerkinSpace space, CoefficientFunction coefficients, double horizon, bool symmetric,
                       DeclaredConstants declared)
    : space_(std::move(space)),
      coefficients_(std::move(coefficients)),
      horizon_(horizon),
      symmetric_(symmetric),
      declared_(declared)
{
    if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) {
        throw Error(ErrorKind::argument, "form family horizon must be positive");
    }
    if (!coefficients_) {
        throw Error(ErrorKind::argument, "form family needs a coefficient function");
    }
}

Matrix FormFamily::operator()(double t) const
{
    Matrix a = coefficients_(t);
    if (a.rows() != space_.dim() || a.cols() != space_.dim()) {
        throw Error(ErrorKind::evaluation, "coefficient matrix has the wrong shape");
    }
    if (!a.allFinite()) {
        throw Error(ErrorKind::evaluation, "coefficient matrix has non-finite entries at t = " + std::to_string(t));
    }
    if (symmetric_ && relative_asymmetry(a) > 1e-12) {
        throw Error(ErrorKind::contract, "symmetric family returned an asymmetric matrix at t = " + std::to_string(t));
    }
    return a;
}

double FormFamily::form(double t, const Vector& u, const Vector& v) const { return v.dot((*this)(t) * u); }

// ---------------------------------------------------------------------------
// StepForm

StepForm::StepForm(GalerkinSpace space, Subdivision subdivision, std::vector<Matrix> slabs, bool symmetric)
    : space_(std::move(space)), subdivision_(std::move(subdivision)), slabs_(std::move(slabs)), symmetric_(symmetric)
{
    if (static_cast<int>(slabs_.size()) != subdivision_.slab_count()) {
        throw Error(ErrorKind::argument, "step form needs one matrix per slab");
    }
}

const Matrix& StepForm::lookup(double t) const { return slab(subdivision_.slab_index(t)); }

Matrix average_form(const FormFamily& family, double a, double b)
{
    if (!(a < b) || a < 0.0 || b > family.horizon() * (1.0 + 1e-14)) {
        throw Error(ErrorKind::argument, "averaging interval must satisfy 0 <= a < b <= T");
    }
    const Matrix integral = quadrature::integrate_gauss4(a, b, quadrature::slab_panels,
                                                         [&](double t) -> Matrix { return family(t); });
    Matrix avg = integral / (b - a);
    if (family.symmetric()) {
        avg = sym(avg);
    }
    return avg;
}

StepForm build_step_form(const FormFamily& family, const Subdivision& subdivision)
{
    std::vector<Matrix> slabs;
    slabs.reserve(static_cast<std::size_t>(subdivision.slab_count()));
    for (int k = 0; k < subdivision.slab_count(); ++k) {
        slabs.push_back(average_form(family, subdivision.start(k), subdivision.end(k)));
    }
    return StepForm(family.space(), subdivision, std::move(slabs), family.symmetric());
}

// ---------------------------------------------------------------------------
// Constants

std::vector<double> sample_times(double horizon, int count)
{
    if (count < 2) {
        throw Error(ErrorKind::argument, "need at least two sample times");
    }
    std::vector<double> t(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        t[static_cast<std::size_t>(i)] = horizon * i / (count - 1);
    }
    t.back() = horizon;
    return t;
}

FormConstants estimate_constants(const FormFamily& family, std::span<const double> t_grid, double omega)
{
    if (t_grid.size() < 33) {
        throw Error(ErrorKind::argument, "constants need a sample grid of at least 33 points");
    }
    const GalerkinSpace& space = family.space();
    FormConstants c;
    c.omega = omega;
    c.samples = static_cast<int>(t_grid.size());
    c.coercivity = std::numeric_limits<double>::infinity();

    Matrix previous;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        const Matrix a = family(t_grid[i]);
        c.continuity = std::max(c.continuity, operator_norm(space, a));
        c.coercivity = std::min(c.coercivity,
                                min_generalized_eigenvalue(sym(a) + omega * space.gram_h(), space.gram_v()));
        if (i > 0) {
            const double dt = t_grid[i] - t_grid[i - 1];
            if (dt > 0.0) {
                c.lipschitz = std::max(c.lipschitz, operator_norm(space, a - previous) / dt);
            }
        }
        previous = a;
    }
    c.elliptic = c.coercivity > 0.0;
    return c;
}

FormConstants resolve_constants(const FormFamily& family, std::span<const double> t_grid, double omega)
{
    FormConstants c = estimate_constants(family, t_grid, omega);
    const DeclaredConstants& d = family.declared();
    if (d.continuity) {
        c.continuity = *d.continuity;
    }
    if (d.coercivity && omega == 0.0) {
        c.coercivity = *d.coercivity;
    }
    if (d.lipschitz) {
        c.lipschitz = *d.lipschitz;
    }
    return c;
}

FormFamily rescale(const FormFamily& family, double omega)
{
    if (omega == 0.0) {
        return family;
    }
    const Matrix shift = omega * family.space().gram_h();
    auto base = family.coefficients();
    // The shift is time independent, so only the continuity bound moves.
    DeclaredConstants declared;
    declared.lipschitz = family.declared().lipschitz;
    return FormFamily(
        family.space(), [base, shift](double t) -> Matrix { return base(t) + shift; }, family.horizon(),
        family.symmetric(), declared);
}

double select_omega(const FormFamily& family, std::span<const double> t_grid, double start)
{
    if (estimate_constants(family, t_grid, start).elliptic) {
        return start;
    }
    const FormConstants base = estimate_constants(family, t_grid, start);
    const double c_h = embedding_constant(family.space());
    double hi = std::max(start, 0.0) + 10.0 * base.continuity / (c_h * c_h);
    if (!estimate_constants(family, t_grid, hi).elliptic) {
        throw Error(ErrorKind::contract, "no omega in [0, 10 M / c_H^2] makes the family elliptic on the samples");
    }
    double lo = start;
    while (hi - lo > 1e-9 * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        if (estimate_constants(family, t_grid, mid).elliptic) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

}  // namespace evolveq
