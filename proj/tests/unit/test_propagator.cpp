#include <gtest/gtest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <random>
#include <vector>

#include "evolveq/errors.hpp"
#include "evolveq/expm.hpp"
#include "evolveq/presets.hpp"
#include "evolveq/propagator.hpp"
#include "test_support.hpp"

using namespace evolveq;
using evolveq::test::scalar_space;

namespace {

ProblemData scalar_problem(std::function<double(double)> coefficient, double u0 = 1.0, double horizon = 1.0,
                           LoadFunction load = {})
{
    FormFamily fam(scalar_space(1.0, 1.0), [coefficient](double t) { return Matrix::Constant(1, 1, coefficient(t)); },
                   horizon, true);
    return ProblemData{std::move(fam), Vector::Constant(1, u0), std::move(load), "scalar"};
}

Matrix random_matrix(std::mt19937_64& rng, int n, double scale)
{
    std::normal_distribution<double> g(0.0, scale);
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            m(i, j) = g(rng);
        }
    }
    return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Matrix exponential, checked against Eigen's independent implementation.

TEST(Expm, ZeroAndDiagonal)
{
    EXPECT_EQ((expm(Matrix::Zero(3, 3)) - Matrix::Identity(3, 3)).norm(), 0.0);
    const Vector d{{-2.0, 0.0, 1.5}};
    const Matrix e = expm(d.asDiagonal().toDenseMatrix());
    for (int i = 0; i < 3; ++i) {
        EXPECT_NEAR(e(i, i), std::exp(d(i)), 1e-15 * std::exp(d(i)));
    }
}

class ExpmAgainstEigen : public ::testing::TestWithParam<double> {};

TEST_P(ExpmAgainstEigen, RandomMatrices)
{
    std::mt19937_64 rng(static_cast<std::uint64_t>(GetParam() * 1000));
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = random_matrix(rng, 6, GetParam());
        const Matrix ours = expm(a);
        const Matrix reference = a.exp();
        EXPECT_LE((ours - reference).norm(), 1e-12 * std::max(1.0, reference.norm())) << "scale " << GetParam();
    }
}

INSTANTIATE_TEST_SUITE_P(Scales, ExpmAgainstEigen, ::testing::Values(1e-3, 0.1, 1.0, 5.0, 20.0));

TEST(Expm, RejectsNonFinite)
{
    Matrix a = Matrix::Zero(2, 2);
    a(0, 1) = std::numeric_limits<double>::infinity();
    EXPECT_THROW((void)expm(a), Error);
}

TEST(Phi1, Values)
{
    EXPECT_EQ(phi1(0.0), 1.0);
    EXPECT_NEAR(phi1(-1.0), 1.0 - std::exp(-1.0), 1e-16);
    EXPECT_NEAR(phi1(1e-12), 1.0 + 5e-13, 1e-16);
    EXPECT_NEAR(phi1(-50.0), 1.0 / 50.0, 1e-17);
}

// ---------------------------------------------------------------------------
// Slab steps

TEST(SlabStep, ZeroGenerator)
{
    const GalerkinSpace space(Matrix::Identity(3, 3), Matrix::Identity(3, 3));
    const Vector u{{1.0, -2.0, 0.5}};
    const Vector f{{0.3, 0.0, 1.0}};
    for (const bool symmetric : {true, false}) {
        const SlabPropagator p(space, Matrix::Zero(3, 3), 2.0, symmetric);
        EXPECT_LE((slab_step(p, u, f, 1.5) - (u + 1.5 * f)).norm(), 1e-14);
    }
}

TEST(SlabStep, ScalarClosedForms)
{
    for (const bool symmetric : {true, false}) {
        const SlabPropagator p(scalar_space(1.0, 1.0), Matrix::Constant(1, 1, 1.0), 1.0, symmetric);
        EXPECT_NEAR(slab_step(p, Vector::Constant(1, 1.0), Vector::Zero(1), 1.0)(0), 0.3678794412, 1e-10);
        EXPECT_NEAR(slab_step(p, Vector::Zero(1), Vector::Constant(1, 1.0), 1.0)(0), 0.6321205588, 1e-10);
    }
}

TEST(SlabStep, SpectralAndPadePathsAgree)
{
    const ProblemData heat = make_problem("heat-1d-lipschitz", {.elements = 16, .metric = "consistent", .load = "smooth"});
    const Matrix a = average_form(heat.family, 0.0, 0.25);
    const SlabPropagator spectral(heat.space(), a, 0.25, true);
    const SlabPropagator pade(heat.space(), a, 0.25, false);
    ASSERT_TRUE(spectral.spectral());
    ASSERT_FALSE(pade.spectral());
    const Vector f = average_load(heat, 0.0, 0.25);
    for (const double h : {0.0, 0.01, 0.1, 0.25}) {
        const Vector x = slab_step(spectral, heat.u0, f, h);
        const Vector y = slab_step(pade, heat.u0, f, h);
        EXPECT_LE(heat.space().norm_h(x - y), 1e-11 * heat.space().norm_h(x)) << "h = " << h;
    }
}

TEST(SlabStep, RejectsOffsetsBeyondSlab)
{
    const SlabPropagator p(scalar_space(1.0, 1.0), Matrix::Constant(1, 1, 1.0), 1.0, true);
    EXPECT_THROW((void)slab_step(p, Vector::Zero(1), Vector::Zero(1), 1.5), Error);
    EXPECT_THROW((void)slab_step(p, Vector::Zero(1), Vector::Zero(1), -0.1), Error);
}

TEST(SlabStep, OverflowIsANumericalRangeError)
{
    try {
        const SlabPropagator p(scalar_space(1.0, 1.0), Matrix::Constant(1, 1, -1e4), 1.0, true);
        (void)slab_step(p, Vector::Constant(1, 1.0), Vector::Zero(1), 1.0);
        FAIL() << "overflow not detected";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::numerical_range);
    }
}

TEST(SlabPropagator, ConditioningOfCoerciveSlabIsAtMostOne)
{
    const ProblemData heat = make_problem("heat-1d-lipschitz", {.elements = 16});
    const SlabPropagator p(heat.space(), average_form(heat.family, 0.0, 0.1), 0.1, true);
    EXPECT_LE(p.conditioning(), 1.0 + 1e-12);
}

// ---------------------------------------------------------------------------
// Products

TEST(Product, IdentityOnEmptyInterval)
{
    const ProblemData heat = make_problem("heat-1d-lipschitz", {.elements = 8});
    const StepForm sf = build_step_form(heat.family, Subdivision::uniform(1.0, 4));
    EXPECT_EQ((product(sf, 0.3, 0.3) - Matrix::Identity(heat.space().dim(), heat.space().dim())).norm(), 0.0);
    EXPECT_THROW((void)product(sf, 0.6, 0.2), Error);
}

TEST(Product, CompositionLawOnRandomBreakpoints)
{
    const ProblemData p = make_problem("convdiff-1d", {.elements = 8});
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> pts{0.0, 1.0};
        for (int i = 0; i < 5; ++i) {
            pts.push_back(unif(rng));
        }
        std::sort(pts.begin(), pts.end());
        const ProductPropagator prod(build_step_form(p.family, Subdivision(pts)));
        std::vector<double> abc{unif(rng), unif(rng), unif(rng)};
        std::sort(abc.begin(), abc.end());
        const Matrix lhs = prod(abc[0], abc[2]);
        const Matrix rhs = prod(abc[1], abc[2]) * prod(abc[0], abc[1]);
        EXPECT_LE((lhs - rhs).norm(), 1e-12 * std::max(1.0, lhs.norm()));
    }
}

TEST(Product, ScalarTelescopingIsSubdivisionIndependent)
{
    const ProblemData p = scalar_problem([](double t) { return t; });
    for (const auto& pts : {std::vector<double>{0.0, 1.0}, {0.0, 0.1, 0.45, 1.0}, {0.0, 0.3, 0.31, 0.9, 1.0}}) {
        EXPECT_NEAR(product(build_step_form(p.family, Subdivision(pts)), 0.0, 1.0)(0, 0), 0.6065306597, 1e-10);
    }
}

// ---------------------------------------------------------------------------
// Full solves

TEST(Solve, AutonomousIsSubdivisionIndependent)
{
    const ProblemData p = make_problem("heat-1d-constant", {.elements = 16});
    const Matrix b = p.space().solve_h_columns(p.family(0.0));
    const Vector exact = expm(-1.0 * b) * p.u0;
    for (const int n : {1, 3, 8}) {
        const Trajectory traj = solve(p, Subdivision::uniform(1.0, n), std::vector<double>{});
        EXPECT_LE(p.space().norm_h(traj.states().back() - exact), 1e-12 * p.space().norm_h(exact)) << n;
    }
}

TEST(Solve, ScalarDecayEndpoint)
{
    const ProblemData p = make_problem("scalar-decay");
    for (const auto& pts : {std::vector<double>{0.0, 1.0}, {0.0, 0.2, 0.7, 1.0}}) {
        const Trajectory traj = solve(p, Subdivision(pts), std::vector<double>{0.5});
        ASSERT_EQ(traj.grid().size(), 3U);
        EXPECT_NEAR(traj.states().back()(0), 0.2865047969, 1e-10);
    }
}

TEST(Solve, WithinSlabEvaluationMatchesStates)
{
    const ProblemData p = make_problem("heat-1d-lipschitz", {.elements = 8, .load = "smooth"});
    const std::vector<double> grid{0.0, 0.1, 0.125, 0.3, 0.77, 1.0};
    const Trajectory traj = solve(p, Subdivision::uniform(1.0, 8), grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        EXPECT_LE((traj.state_at(grid[i]) - traj.states()[i]).norm(), 1e-14 * traj.states()[i].norm() + 1e-15);
    }
    const auto& d = traj.slab_data();
    EXPECT_EQ(d.breakpoints.size(), 9U);
}

TEST(Solve, HeatDifferenceShrinksUnderRefinement)
{
    const ProblemData p = make_problem("heat-1d-lipschitz", {.elements = 16, .load = "smooth"});
    const auto grid = Subdivision::uniform(1.0, 32).points();
    const auto u8 = solve(p, Subdivision::uniform(1.0, 8), grid);
    const auto u16 = solve(p, Subdivision::uniform(1.0, 16), grid);
    const auto u32 = solve(p, Subdivision::uniform(1.0, 32), grid);
    double d1 = 0.0;
    double d2 = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        d1 = std::max(d1, p.space().norm_v(u8.states()[i] - u16.states()[i]));
        d2 = std::max(d2, p.space().norm_v(u16.states()[i] - u32.states()[i]));
    }
    EXPECT_LT(d2, d1);
}

TEST(Solve, ContractivityWithoutLoad)
{
    for (const char* name : {"heat-1d-lipschitz", "heat-1d-constant", "convdiff-1d", "scalar-sine", "scalar-decay"}) {
        const ProblemData p = make_problem(name, {.elements = 16});
        const auto grid = sample_times(p.horizon(), 101);
        const Trajectory traj = solve(p, Subdivision::uniform(p.horizon(), 16), grid);
        for (std::size_t i = 1; i < grid.size(); ++i) {
            EXPECT_LE(p.space().norm_h(traj.states()[i]), p.space().norm_h(traj.states()[i - 1]) + 1e-10) << name;
        }
    }
}

TEST(Solve, LinearInDataProperty)
{
    std::mt19937_64 rng(8);
    const ProblemData base = make_problem("convdiff-1d", {.elements = 8});
    const int n = base.space().dim();
    for (int trial = 0; trial < 5; ++trial) {
        const Vector u0 = test::random_vector(rng, n);
        const Vector v0 = test::random_vector(rng, n);
        const Vector fdir = test::random_vector(rng, n);
        const Vector gdir = test::random_vector(rng, n);
        auto with = [&](const Vector& init, LoadFunction load) {
            return ProblemData{base.family, init, std::move(load), "lin"};
        };
        const LoadFunction f = [fdir](double t) { return DualVector{std::cos(3.0 * t) * fdir}; };
        const LoadFunction g = [gdir](double t) { return DualVector{t * gdir}; };
        const LoadFunction fg = [f, g](double t) { return DualVector{f(t).coeffs + g(t).coeffs}; };
        const auto sub = Subdivision::uniform(1.0, 8);
        const std::vector<double> grid = sample_times(1.0, 17);
        const auto sum = solve(with(u0 + v0, fg), sub, grid);
        const auto a = solve(with(u0, f), sub, grid);
        const auto b = solve(with(v0, g), sub, grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const Vector expected = a.states()[i] + b.states()[i];
            EXPECT_LE((sum.states()[i] - expected).norm(), 1e-10 * std::max(1.0, expected.norm()));
        }
    }
}

TEST(Solve, RescalingEquivarianceWithoutLoad)
{
    for (const char* name : {"heat-1d-lipschitz", "convdiff-1d"}) {
        const ProblemData p = make_problem(name, {.elements = 16});
        const double omega = 1.7;
        const ProblemData shifted{rescale(p.family, omega), p.u0, {}, "shifted"};
        const auto sub = Subdivision::uniform(p.horizon(), 16);
        const auto grid = sample_times(p.horizon(), 33);
        const auto u = solve(p, sub, grid);
        const auto w = solve(shifted, sub, grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const Vector back = std::exp(omega * grid[i]) * w.states()[i];
            EXPECT_LE(p.space().norm_h(back - u.states()[i]), 1e-9 * p.space().norm_h(u.states()[i])) << name;
        }
    }
}

TEST(Solve, RescalingGapWithLoadShrinksUnderRefinement)
{
    // With a load the slab average of e^{-ωt} f does not commute with the
    // rescaling, so the gap is a discretization error that vanishes as |Λ| → 0.
    const ProblemData p = make_problem("heat-1d-lipschitz", {.elements = 8, .load = "smooth"});
    const double omega = 2.0;
    const LoadFunction damped = [p, omega](double t) { return DualVector{std::exp(-omega * t) * p.load_at(t).coeffs}; };
    const ProblemData shifted{rescale(p.family, omega), p.u0, damped, "shifted"};
    auto gap = [&](int n) {
        const auto u = solve(p, Subdivision::uniform(1.0, n), std::vector<double>{});
        const auto w = solve(shifted, Subdivision::uniform(1.0, n), std::vector<double>{});
        return p.space().norm_h(std::exp(omega) * w.states().back() - u.states().back());
    };
    const double g8 = gap(8);
    const double g32 = gap(32);
    EXPECT_GT(g8, 0.0);
    EXPECT_LT(g32, 0.1 * g8);
}

TEST(Solve, RejectsMismatchedHorizonAndInitialState)
{
    const ProblemData p = make_problem("scalar-decay");
    EXPECT_THROW((void)solve(p, Subdivision::uniform(2.0, 4), std::vector<double>{}), Error);
    const ProblemData bad{p.family, Vector::Zero(3), {}, "bad"};
    EXPECT_THROW((void)solve(bad, Subdivision::uniform(1.0, 4), std::vector<double>{}), Error);
    EXPECT_THROW((void)solve(p, Subdivision::uniform(1.0, 4), std::vector<double>{1.5}), Error);
}

// ---------------------------------------------------------------------------
// Oracle

TEST(Oracle, ZeroGeneratorKeepsInitialState)
{
    const ProblemData p = scalar_problem([](double) { return 0.0; }, 2.5);
    const Trajectory traj = oracle_solve(p, 10);
    for (const auto& s : traj.states()) {
        EXPECT_EQ(s(0), 2.5);
    }
    EXPECT_FALSE(traj.has_slab_data());
    EXPECT_THROW((void)traj.slab_data(), Error);
}

TEST(Oracle, ScalarFirstOrderAccuracy)
{
    const ProblemData p = make_problem("scalar-constant");
    const Trajectory traj = oracle_solve(p, 100000);
    EXPECT_LE(std::abs(traj.states().back()(0) - std::exp(-1.0)), 1e-4);
    EXPECT_THROW((void)oracle_solve(p, 0), Error);
}
