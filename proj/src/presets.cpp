#include "evolveq/presets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "evolveq/errors.hpp"

namespace evolveq {

namespace fem {

std::vector<double> uniform_nodes(int elements)
{
    std::vector<double> x(static_cast<std::size_t>(elements) + 1);
    for (int i = 0; i <= elements; ++i) {
        x[static_cast<std::size_t>(i)] = static_cast<double>(i) / elements;
    }
    return x;
}

Matrix mass(const std::vector<double>& nodes)
{
    const auto n = static_cast<Eigen::Index>(nodes.size());
    Matrix m = Matrix::Zero(n, n);
    for (Eigen::Index e = 0; e + 1 < n; ++e) {
        const double h = nodes[static_cast<std::size_t>(e + 1)] - nodes[static_cast<std::size_t>(e)];
        m(e, e) += h / 3.0;
        m(e + 1, e + 1) += h / 3.0;
        m(e, e + 1) += h / 6.0;
        m(e + 1, e) += h / 6.0;
    }
    return m;
}

Matrix lumped_mass(const std::vector<double>& nodes)
{
    const Matrix m = mass(nodes);
    return Matrix(m.rowwise().sum().asDiagonal());
}

Matrix convection(const std::vector<double>& nodes)
{
    const auto n = static_cast<Eigen::Index>(nodes.size());
    Matrix c = Matrix::Zero(n, n);
    for (Eigen::Index e = 0; e + 1 < n; ++e) {
        // ∫ φ_j′ φ_i over one element: φ′ = ∓1/h, ∫ φ_i = h/2.
        c(e, e) -= 0.5;
        c(e, e + 1) += 0.5;
        c(e + 1, e) -= 0.5;
        c(e + 1, e + 1) += 0.5;
    }
    return c;
}

}  // namespace fem

namespace {

using std::numbers::pi;

constexpr double robin_coefficient = 1.0;

const std::vector<PresetInfo> registry{
    {"scalar-decay", "dim 1, gram_H = gram_V = [1], A(t) = [1 + t/2], T = 1"},
    {"scalar-sine", "dim 1, gram_H = gram_V = [1], A(t) = [2 + sin t], T = 2*pi"},
    {"scalar-constant", "dim 1, gram_H = gram_V = [1], A = [1], T = 1 (autonomous)"},
    {"heat-1d-lipschitz",
     "P1 on [0,1]: a(t;u,v) = int kappa u'v' + Robin (beta = 1), kappa = 1 + x sin(t)/2, L = 1/2, T = 1"},
    {"heat-1d-constant", "P1 on [0,1]: kappa = 1 + x/2, Robin (beta = 1), autonomous, T = 1"},
    {"broken-coupling",
     "heat-1d-lipschitz with the off-diagonal couplings sign-flipped (positivity counterexample)"},
    {"convdiff-1d", "heat-1d-lipschitz + cos(pi t)/2 * int u'v (non-symmetric), L = 1/2 + pi/2, T = 1"},
    {"heat-1d-reactive", "heat-1d-lipschitz - 6 int u v: needs omega > 0 to be coercive, T = 1"},
};

struct Problem1d {
    GalerkinSpace space;
    Vector profile;  // spatial load profile (nodal)
    Vector initial;  // default initial state
    Vector sine;     // sin(pi x) nodal
};

Problem1d scalar_space()
{
    Matrix one = Matrix::Ones(1, 1);
    return {GalerkinSpace(one, one), Vector::Ones(1), Vector::Ones(1), Vector::Ones(1)};
}

Problem1d mesh_space(const std::vector<double>& nodes, const std::string& metric)
{
    const Matrix m = fem::mass(nodes);
    Matrix gram_h;
    if (metric == "lumped") {
        gram_h = fem::lumped_mass(nodes);
    } else if (metric == "consistent") {
        gram_h = m;
    } else {
        throw Error(ErrorKind::config, "metric must be 'lumped' or 'consistent', got '" + metric + "'");
    }
    const Matrix gram_v = fem::stiffness(nodes, [](double) { return 1.0; }) + m;
    const auto n = static_cast<Eigen::Index>(nodes.size());
    Vector sine(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        sine(i) = std::sin(pi * nodes[static_cast<std::size_t>(i)]);
    }
    return {GalerkinSpace(gram_h, gram_v, nodes), sine, sine.array() + 0.5, sine};
}

Matrix robin(Eigen::Index n)
{
    Matrix r = Matrix::Zero(n, n);
    r(0, 0) = robin_coefficient;
    r(n - 1, n - 1) = robin_coefficient;
    return r;
}

Matrix alternating_signs(Eigen::Index n)
{
    Vector s(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        s(i) = (i % 2 == 0) ? 1.0 : -1.0;
    }
    return Matrix(s.asDiagonal());
}

LoadFunction make_load(const PresetOptions& options, const GalerkinSpace& space, const Vector& profile,
                       double horizon)
{
    const Vector dual = space.gram_h() * profile;
    const double amp = options.amplitude;
    if (options.load == "zero") {
        return {};
    }
    if (options.load == "constant") {
        return [dual, amp](double) { return DualVector{amp * dual}; };
    }
    if (options.load == "smooth") {
        return [dual, amp, horizon](double t) {
            return DualVector{amp * (1.0 + std::cos(2.0 * pi * t / horizon)) * dual};
        };
    }
    throw Error(ErrorKind::config, "load must be zero, constant or smooth, got '" + options.load + "'");
}

Vector make_initial(const PresetOptions& options, const Problem1d& p)
{
    if (options.initial == "default") {
        return p.initial;
    }
    if (options.initial == "zero") {
        return Vector::Zero(p.initial.size());
    }
    if (options.initial == "ones") {
        return Vector::Ones(p.initial.size());
    }
    if (options.initial == "sine") {
        return p.sine;
    }
    throw Error(ErrorKind::config, "initial must be default, zero, ones or sine, got '" + options.initial + "'");
}

}  // namespace

const std::vector<PresetInfo>& list_presets() { return registry; }

bool has_preset(std::string_view name)
{
    return std::any_of(registry.begin(), registry.end(), [&](const PresetInfo& p) { return p.name == name; });
}

ProblemData make_problem(std::string_view name, const PresetOptions& options)
{
    if (!has_preset(name)) {
        throw Error(ErrorKind::unknown_preset, "unknown preset '" + std::string(name) + "'");
    }
    if (options.horizon && !(*options.horizon > 0.0)) {
        throw Error(ErrorKind::config, "horizon must be positive");
    }
    const std::string tag(name);

    if (name.starts_with("scalar-")) {
        const Problem1d p = scalar_space();
        double horizon = 1.0;
        CoefficientFunction a;
        DeclaredConstants declared;
        if (name == "scalar-decay") {
            horizon = options.horizon.value_or(1.0);
            a = [](double t) { return Matrix::Constant(1, 1, 1.0 + 0.5 * t); };
            declared = {1.0 + 0.5 * horizon, 1.0, 0.5};
        } else if (name == "scalar-sine") {
            horizon = options.horizon.value_or(2.0 * pi);
            a = [](double t) { return Matrix::Constant(1, 1, 2.0 + std::sin(t)); };
            declared = {3.0, 1.0, 1.0};
        } else {
            horizon = options.horizon.value_or(1.0);
            a = [](double) { return Matrix::Constant(1, 1, 1.0); };
            declared = {1.0, 1.0, 0.0};
        }
        FormFamily family(p.space, a, horizon, true, declared);
        return {family, make_initial(options, p), make_load(options, p.space, p.profile, horizon), tag};
    }

    if (options.elements < 2 || options.elements > 512) {
        throw Error(ErrorKind::config, "elements must lie in [2, 512]");
    }
    const std::vector<double> nodes = fem::uniform_nodes(options.elements);
    const Problem1d p = mesh_space(nodes, options.metric);
    const auto n = static_cast<Eigen::Index>(nodes.size());
    const double horizon = options.horizon.value_or(1.0);

    const Matrix k0 = fem::stiffness(nodes, [](double) { return 1.0; }) + robin(n);
    const Matrix k1 = fem::stiffness(nodes, [](double x) { return 0.5 * x; });

    CoefficientFunction a;
    bool symmetric = true;
    DeclaredConstants declared;
    if (name == "heat-1d-lipschitz") {
        a = [k0, k1](double t) -> Matrix { return k0 + std::sin(t) * k1; };
        declared.lipschitz = 0.5;
    } else if (name == "heat-1d-constant") {
        const Matrix fixed = k0 + k1;
        a = [fixed](double) -> Matrix { return fixed; };
        declared.lipschitz = 0.0;
    } else if (name == "broken-coupling") {
        const Matrix s = alternating_signs(n);
        const Matrix f0 = s * k0 * s;
        const Matrix f1 = s * k1 * s;
        a = [f0, f1](double t) -> Matrix { return f0 + std::sin(t) * f1; };
    } else if (name == "convdiff-1d") {
        const Matrix c = fem::convection(nodes);
        a = [k0, k1, c](double t) -> Matrix { return k0 + std::sin(t) * k1 + 0.5 * std::cos(pi * t) * c; };
        symmetric = false;
        declared.lipschitz = 0.5 + 0.5 * pi;
    } else {  // heat-1d-reactive
        const Matrix shifted = k0 - 6.0 * fem::mass(nodes);
        a = [shifted, k1](double t) -> Matrix { return shifted + std::sin(t) * k1; };
        declared.lipschitz = 0.5;
    }
    FormFamily family(p.space, a, horizon, symmetric, declared);
    return {family, make_initial(options, p), make_load(options, p.space, p.profile, horizon), tag};
}

}  // namespace evolveq
