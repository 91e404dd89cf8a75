#include "evolveq/invariance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "evolveq/errors.hpp"
#include "evolveq/parallel.hpp"

namespace evolveq {

namespace {

constexpr double qp_tolerance = 1e-10;
constexpr int qp_max_iterations = 100000;
constexpr std::size_t block_size = 256;
constexpr double infinity = std::numeric_limits<double>::infinity();

Vector clamp(const Vector& x, const Vector& lo, const Vector& hi) { return x.cwiseMax(lo).cwiseMin(hi); }

void require_dim(const GalerkinSpace& space, const Vector& v, const char* what)
{
    if (v.size() != space.dim()) {
        throw Error(ErrorKind::argument, std::string(what) + " dimension does not match the space");
    }
}

struct Best {
    double value = infinity;
    std::size_t vector = 0;
    std::size_t time = 0;
};

// Runs value(i, j) over vectors i and times j in blocks; the reduction keeps
// the first minimum in (i, j) order whatever the thread count.
template <class Value>
Best minimize(std::size_t vectors, int threads, Value&& value)
{
    const std::size_t blocks = (vectors + block_size - 1) / block_size;
    std::vector<Best> partial(blocks);
    parallel_for(blocks, threads, [&](std::size_t b) {
        Best best;
        const std::size_t end = std::min(vectors, (b + 1) * block_size);
        for (std::size_t i = b * block_size; i < end; ++i) {
            value(i, [&](std::size_t j, double v) {
                if (v < best.value) {
                    best = {v, i, j};
                }
            });
        }
        partial[b] = best;
    });
    Best best;
    for (const Best& p : partial) {
        if (p.value < best.value) {
            best = p;
        }
    }
    return best;
}

CriterionResult finish(const Best& best, const ConvexSet& set, std::span<const double> times, std::uint64_t seed,
                       int samples)
{
    CriterionResult r;
    r.samples = samples;
    if (samples == 0) {
        return r;
    }
    r.margin = best.value;
    r.witness_t = times[best.time];
    r.witness = sample_vector(set, seed, best.vector);
    r.witness_distance = set.distance(r.witness);
    return r;
}

}  // namespace

std::string to_string(SetKind kind)
{
    switch (kind) {
    case SetKind::whole: return "whole";
    case SetKind::box: return "box";
    case SetKind::halfspace: return "halfspace";
    case SetKind::ball: return "ball";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------
// ConvexSet

ConvexSet ConvexSet::whole(GalerkinSpace space) { return ConvexSet(SetKind::whole, std::move(space)); }

ConvexSet ConvexSet::box(GalerkinSpace space, Vector lower, Vector upper)
{
    require_dim(space, lower, "box lower bound");
    require_dim(space, upper, "box upper bound");
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
        if (std::isnan(lower(i)) || std::isnan(upper(i)) || lower(i) > upper(i) || lower(i) == infinity ||
            upper(i) == -infinity) {
            throw Error(ErrorKind::argument, "box bounds must satisfy lower <= upper");
        }
    }
    ConvexSet set(SetKind::box, std::move(space));
    set.a_ = std::move(lower);
    set.b_ = std::move(upper);
    if (!set.space_.diagonal_h()) {
        // Step size for the projected-gradient QP.
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(set.space_.gram_h(), Eigen::EigenvaluesOnly);
        set.scalar_ = eig.eigenvalues().maxCoeff();
    }
    return set;
}

ConvexSet ConvexSet::halfspace(GalerkinSpace space, Vector normal, double offset)
{
    require_dim(space, normal, "halfspace normal");
    if (!(space.norm_h(normal) > 0.0) || !std::isfinite(offset)) {
        throw Error(ErrorKind::argument, "halfspace needs a nonzero normal and a finite offset");
    }
    ConvexSet set(SetKind::halfspace, std::move(space));
    set.a_ = std::move(normal);
    set.scalar_ = offset;
    return set;
}

ConvexSet ConvexSet::ball(GalerkinSpace space, Vector center, double radius)
{
    require_dim(space, center, "ball center");
    if (!(radius >= 0.0) || !std::isfinite(radius)) {
        throw Error(ErrorKind::argument, "ball radius must be finite and non-negative");
    }
    ConvexSet set(SetKind::ball, std::move(space));
    set.a_ = std::move(center);
    set.scalar_ = radius;
    return set;
}

std::string ConvexSet::metric() const { return space_.diagonal_h() ? "lumped" : "consistent"; }

Vector ConvexSet::project(const Vector& x) const
{
    require_dim(space_, x, "projected vector");
    switch (kind_) {
    case SetKind::whole:
        return x;
    case SetKind::box:
        return space_.diagonal_h() ? clamp(x, a_, b_) : project_box_qp(x);
    case SetKind::halfspace: {
        const double excess = space_.inner_h(a_, x) - scalar_;
        if (excess <= 0.0) {
            return x;
        }
        return x - (excess / space_.inner_h(a_, a_)) * a_;
    }
    case SetKind::ball: {
        const Vector d = x - a_;
        const double r = space_.norm_h(d);
        if (r <= scalar_) {
            return x;
        }
        return a_ + (scalar_ / r) * d;
    }
    }
    throw Error(ErrorKind::argument, "unknown set kind");
}

namespace {

// Exact minimizer for a guessed active set: bound components stay fixed and
// the free block solves its normal equations. Accepted only if the result is
// feasible and the multipliers on the bound components have the right sign.
std::optional<Vector> polish(const Matrix& g, const Vector& x, const Vector& y, const Vector& lo, const Vector& hi)
{
    const Eigen::Index n = x.size();
    std::vector<Eigen::Index> free;
    std::vector<Eigen::Index> bound;
    for (Eigen::Index i = 0; i < n; ++i) {
        (y(i) > lo(i) && y(i) < hi(i) ? free : bound).push_back(i);
    }
    Vector out = y;
    if (!free.empty()) {
        const auto f = static_cast<Eigen::Index>(free.size());
        Matrix gff(f, f);
        Vector rhs(f);
        for (Eigen::Index a = 0; a < f; ++a) {
            double r = 0.0;
            for (const Eigen::Index j : bound) {
                r += g(free[a], j) * (y(j) - x(j));
            }
            rhs(a) = -r;
            for (Eigen::Index b = 0; b < f; ++b) {
                gff(a, b) = g(free[a], free[b]);
            }
        }
        const Vector shift = gff.llt().solve(rhs);
        for (Eigen::Index a = 0; a < f; ++a) {
            out(free[a]) = x(free[a]) + shift(a);
            if (out(free[a]) < lo(free[a]) || out(free[a]) > hi(free[a])) {
                return std::nullopt;
            }
        }
    }
    const Vector grad = g * (out - x);
    const double tol = 1e-14 * std::max(1.0, grad.cwiseAbs().maxCoeff());
    for (const Eigen::Index i : bound) {
        if ((out(i) == lo(i) && grad(i) < -tol) || (out(i) == hi(i) && grad(i) > tol)) {
            return std::nullopt;
        }
    }
    return out;
}

}  // namespace

Vector ConvexSet::project_box_qp(const Vector& x) const
{
    // FISTA with adaptive restart on ½(y − x)ᵀ G_H (y − x) over the box,
    // finished by an exact solve on the identified active set.
    const Matrix& g = space_.gram_h();
    const double step = 1.0 / scalar_;
    const double scale = std::max(1.0, space_.norm_h(x));
    Vector y = clamp(x, a_, b_);
    Vector z = y;
    double momentum = 1.0;
    double residual = infinity;
    for (int it = 0; it < qp_max_iterations; ++it) {
        const Vector next = clamp(z - step * (g * (z - x)), a_, b_);
        const double next_momentum = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
        const Vector delta = next - y;
        if ((z - next).dot(delta) > 0.0) {
            z = next;
            momentum = 1.0;
        } else {
            z = next + ((momentum - 1.0) / next_momentum) * delta;
            momentum = next_momentum;
        }
        y = next;
        residual = space_.norm_h(y - clamp(y - step * (g * (y - x)), a_, b_)) / step;
        if (residual <= 1e-6 * scale || it % 64 == 63) {
            if (auto exact = polish(g, x, y, a_, b_)) {
                return *exact;
            }
        }
        if (residual <= qp_tolerance * scale) {
            return y;
        }
    }
    throw Error(ErrorKind::tolerance,
                fmt::format("box projection did not reach {:.1e}; residual {:.3e}", qp_tolerance * scale, residual));
}

double ConvexSet::distance(const Vector& x) const { return space_.norm_h(x - project(x)); }

bool ConvexSet::contains(const Vector& x, double tol) const { return distance(x) <= tol; }

// ---------------------------------------------------------------------------
// Criteria

Vector sample_vector(const ConvexSet& set, std::uint64_t seed, std::size_t index)
{
    const auto idx = static_cast<std::uint64_t>(index);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const GalerkinSpace& space = set.space();
    const Eigen::Index n = space.dim();
    auto gaussian = [&] {
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            v(i) = gauss(rng);
        }
        return v;
    };

    Vector v;
    switch (index % 3) {
    case 0:
        v = gaussian();
        break;
    case 1: {
        v = Vector::Zero(n);
        std::uniform_int_distribution<Eigen::Index> pos(0, n - 1);
        const int spikes = 1 + static_cast<int>(rng() % 3);
        for (int s = 0; s < spikes; ++s) {
            v(pos(rng)) += (rng() % 2 == 0 ? 1.0 : -1.0) * (1.0 + std::abs(gauss(rng)));
        }
        break;
    }
    default: {
        const Vector boundary = set.project(gaussian());
        v = boundary + 0.05 * gaussian();
        break;
    }
    }
    const double norm = space.norm_v(v);
    if (!(norm > 0.0)) {
        v = Vector::Unit(n, 0);
        return v / space.norm_v(v);
    }
    return v / norm;
}

double criterion_value(const Matrix& a, const ConvexSet& set, const Vector& v, const Vector* load)
{
    const Vector pv = set.project(v);
    const Vector d = v - pv;
    double value = d.dot(a * pv);
    if (load != nullptr) {
        value -= load->dot(d);
    }
    return value;
}

double symmetric_criterion_value(const Matrix& a, const ConvexSet& set, const Vector& v)
{
    const Vector pv = set.project(v);
    return v.dot(a * v) - pv.dot(a * pv);
}

CriterionResult check_criterion(const FormFamily& family, const ConvexSet& set, std::span<const double> times,
                                const SampleOptions& options, const LoadFunction& load)
{
    if (set.space().dim() != family.space().dim()) {
        throw Error(ErrorKind::argument, "set and family live in different spaces");
    }
    std::vector<Matrix> forms;
    std::vector<Vector> loads;
    for (const double t : times) {
        forms.push_back(family(t));
        if (load) {
            loads.push_back(load(t).coeffs);
        }
    }
    const auto vectors = static_cast<std::size_t>(std::max(0, options.vectors));
    const Best best = minimize(vectors, options.threads, [&](std::size_t i, auto&& record) {
        const Vector v = sample_vector(set, options.seed, i);
        const Vector pv = set.project(v);
        const Vector d = v - pv;
        for (std::size_t j = 0; j < forms.size(); ++j) {
            double value = d.dot(forms[j] * pv);
            if (load) {
                value -= loads[j].dot(d);
            }
            record(j, value);
        }
    });
    return finish(best, set, times, options.seed, static_cast<int>(vectors * times.size()));
}

CriterionResult check_criterion_symmetric(const FormFamily& family, const ConvexSet& set,
                                          std::span<const double> times, const SampleOptions& options)
{
    if (!family.symmetric()) {
        throw Error(ErrorKind::contract, "the symmetric criterion needs a symmetric family");
    }
    if (!(resolve_constants(family, sample_times(family.horizon(), 65)).coercivity > 0.0)) {
        throw Error(ErrorKind::contract, "the symmetric criterion needs a coercive family at omega = 0");
    }
    if (set.space().dim() != family.space().dim()) {
        throw Error(ErrorKind::argument, "set and family live in different spaces");
    }
    std::vector<Matrix> forms;
    for (const double t : times) {
        forms.push_back(family(t));
    }
    const auto vectors = static_cast<std::size_t>(std::max(0, options.vectors));
    const Best best = minimize(vectors, options.threads, [&](std::size_t i, auto&& record) {
        const Vector v = sample_vector(set, options.seed, i);
        const Vector pv = set.project(v);
        for (std::size_t j = 0; j < forms.size(); ++j) {
            record(j, v.dot(forms[j] * v) - pv.dot(forms[j] * pv));
        }
    });
    return finish(best, set, times, options.seed, static_cast<int>(vectors * times.size()));
}

StencilCertificate stencil_certificate(const FormFamily& family, const ConvexSet& set, std::span<const double> times)
{
    StencilCertificate c;
    c.applicable = set.kind() == SetKind::box && set.space().diagonal_h() && (set.lower().array() == 0.0).all() &&
                   (set.upper().array() == infinity).all();
    if (!c.applicable) {
        return c;
    }
    c.max_off_diagonal = -infinity;
    for (const double t : times) {
        Matrix a = family(t);
        a.diagonal().setConstant(-infinity);
        c.max_off_diagonal = std::max(c.max_off_diagonal, a.maxCoeff());
    }
    c.holds = c.max_off_diagonal <= 0.0;
    return c;
}

AuditResult audit_trajectory(const Trajectory& trajectory, const ConvexSet& set)
{
    AuditResult r;
    auto visit = [&](double t, const Vector& u) {
        const double d = set.distance(u);
        if (d > r.violation) {
            r.violation = d;
            r.t = t;
        }
    };
    for (std::size_t i = 0; i < trajectory.grid().size(); ++i) {
        visit(trajectory.grid()[i], trajectory.states()[i]);
    }
    if (trajectory.has_slab_data()) {
        const auto& d = trajectory.slab_data();
        const auto& pts = d.step_form.subdivision().points();
        for (std::size_t k = 0; k < d.breakpoints.size(); ++k) {
            visit(pts[k], d.breakpoints[k]);
        }
    }
    return r;
}

std::string invariance_csv(std::span<const InvarianceRow> rows)
{
    std::string out = "preset,set_kind,metric,criterion_margin,symmetric_margin,worst_violation,witness_t,witness_norm\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{:.16e},{},{:.16e},{:.16e},{:.16e}\n", r.preset, r.set_kind, r.metric,
                           r.criterion_margin, r.symmetric_margin ? fmt::format("{:.16e}", *r.symmetric_margin) : "nan",
                           r.worst_violation, r.witness_t, r.witness_norm);
    }
    return out;
}

}  // namespace evolveq
