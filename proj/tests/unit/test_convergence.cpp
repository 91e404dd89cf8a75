#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "evolveq/convergence.hpp"
#include "evolveq/errors.hpp"
#include "evolveq/presets.hpp"
#include "evolveq/quadrature.hpp"
#include "test_support.hpp"

using namespace evolveq;

namespace {

FormConstants constants_of(const ProblemData& p) { return resolve_constants(p.family, sample_times(p.horizon(), 65)); }

const std::vector<int> short_ladder{8, 16, 32, 64, 128};

}  // namespace

TEST(FitRate, RecoversPowerLaw)
{
    const std::vector<double> mesh{0.1, 0.05, 0.025};
    const std::vector<double> diffs{3.0 * 0.01, 3.0 * 0.0025, 3.0 * 0.000625};
    EXPECT_NEAR(*fit_rate(mesh, diffs), 2.0, 1e-12);
    EXPECT_FALSE(fit_rate(std::vector<double>{0.1}, std::vector<double>{1.0}).has_value());
    EXPECT_FALSE(fit_rate(mesh, std::vector<double>{1.0, 0.0, 1.0}).has_value());
}

TEST(L2VDifference, MatchesBruteForceQuadrature)
{
    const ProblemData p = make_problem("heat-1d-lipschitz", {.elements = 4, .load = "smooth"});
    const auto coarse = solve(p, Subdivision::uniform(1.0, 2), std::vector<double>{});
    const auto fine = solve(p, Subdivision::uniform(1.0, 8), std::vector<double>{});
    double brute = 0.0;
    for (int j = 0; j < 8; ++j) {
        // Integrate inside each fine slab so the integrand is smooth.
        brute += quadrature::integrate_gauss4(j / 8.0, (j + 1) / 8.0, 64, [&](double t) {
            const double lo = j / 8.0;
            const double hi = (j + 1) / 8.0;
            const double s = std::clamp(t, lo, std::nextafter(hi, lo));
            return std::pow(p.space().norm_v(coarse.state_at(s) - fine.state_at(s)), 2);
        });
    }
    EXPECT_NEAR(l2v_difference(coarse, fine), std::sqrt(brute), 1e-9 * std::sqrt(brute));
}

TEST(L2VDifference, RequiresNesting)
{
    const ProblemData p = make_problem("scalar-decay");
    const auto a = solve(p, Subdivision::uniform(1.0, 3), std::vector<double>{});
    const auto b = solve(p, Subdivision::uniform(1.0, 4), std::vector<double>{});
    EXPECT_THROW((void)l2v_difference(a, b), Error);
}

TEST(Refine, RejectsNonNestedCounts)
{
    const ProblemData p = make_problem("scalar-decay");
    const FormConstants c = constants_of(p);
    EXPECT_THROW((void)refine(p, std::vector<int>{8, 12}, c), Error);
    EXPECT_THROW((void)refine(p, std::vector<int>{8, 8}, c), Error);
    EXPECT_THROW((void)refine(p, std::vector<int>{0, 8}, c), Error);
    EXPECT_THROW((void)refine(p, std::vector<int>{}, c), Error);
}

TEST(Refine, AutonomousLadderCollapses)
{
    for (const char* name : {"heat-1d-constant", "scalar-constant"}) {
        const ProblemData p = make_problem(name, {.elements = 16});
        const RefinementStudy s = refine(p, short_ladder, constants_of(p));
        for (std::size_t i = 0; i < s.diffs_l2V.size(); ++i) {
            EXPECT_LE(s.diffs_l2V[i], 1e-12) << name;
            EXPECT_LE(s.diffs_supH[i], 1e-12) << name;
        }
        EXPECT_FALSE(s.rate.has_value() && std::isfinite(*s.rate) && s.diffs_l2V.back() > 1e-12);
    }
}

TEST(Refine, ScalarTelescopingIsExactAtSharedBreakpoints)
{
    // Scalar averages telescope, so every ladder point agrees with exp(−∫p) at
    // the coarse breakpoints. Between them the frozen exponent is only a
    // chord of ∫p, and the L²(V) differences shrink like |Λ|².
    const ProblemData p = make_problem("scalar-decay");
    const RefinementStudy s = refine(p, short_ladder, constants_of(p));
    const auto coarse_points = Subdivision::uniform(1.0, short_ladder.front()).points();
    for (const auto& traj : s.trajectories) {
        for (const double t : coarse_points) {
            EXPECT_NEAR(traj.state_at(t)(0), std::exp(-(t + t * t / 4.0)), 1e-12);
        }
    }
    EXPECT_NEAR(*s.rate, 2.0, 0.05);
}

TEST(Refine, HeatWithLoadConverges)
{
    const ProblemData p = make_problem("heat-1d-lipschitz", {.load = "smooth"});
    const RefinementStudy s = refine(p, short_ladder, constants_of(p));
    for (std::size_t i = 1; i < s.diffs_l2V.size(); ++i) {
        EXPECT_LT(s.diffs_l2V[i], s.diffs_l2V[i - 1]);
    }
    ASSERT_TRUE(s.rate.has_value());
    EXPECT_GE(*s.rate, 0.9);
}

TEST(Refine, MonotoneDifferencesOnAllPresets)
{
    for (const auto& info : list_presets()) {
        if (info.name == "heat-1d-reactive") {
            continue;  // not elliptic without a shift
        }
        const ProblemData p = make_problem(info.name, {.elements = 16, .load = "smooth"});
        const RefinementStudy s = refine(p, std::vector<int>{4, 8, 16, 32}, constants_of(p));
        for (std::size_t i = 1; i < s.diffs_l2V.size(); ++i) {
            EXPECT_LE(s.diffs_l2V[i], std::max(1.05 * s.diffs_l2V[i - 1], 1e-11)) << info.name;
        }
    }
}

TEST(Refine, EmbeddingConstantIsStableAcrossRefinement)
{
    const ProblemData p = make_problem("heat-1d-lipschitz", {.elements = 16, .load = "smooth"});
    const RefinementStudy s = refine(p, short_ladder, constants_of(p));
    double lo = INFINITY;
    double hi = 0.0;
    for (std::size_t i = 0; i < s.trajectories.size(); ++i) {
        double sup_h = 0.0;
        for (const auto& u : s.trajectories[i].states()) {
            sup_h = std::max(sup_h, p.space().norm_h(u));
        }
        const double kappa = sup_h / s.mr_rows[i].mr_vvp;
        lo = std::min(lo, kappa);
        hi = std::max(hi, kappa);
    }
    EXPECT_LE(hi, 1.1 * lo);
}

TEST(Refine, DeterministicAcrossThreadCounts)
{
    const ProblemData p = make_problem("convdiff-1d", {.elements = 8, .load = "smooth"});
    const FormConstants c = constants_of(p);
    const std::vector<int> ladder{4, 8, 16};
    const std::string one = convergence_csv(refine(p, ladder, c, {.threads = 1, .oracle_steps = 200}));
    const std::string three = convergence_csv(refine(p, ladder, c, {.threads = 3, .oracle_steps = 200}));
    EXPECT_EQ(one, three);
}

TEST(ConvergenceCsv, Layout)
{
    const ProblemData p = make_problem("scalar-decay");
    const std::string csv = convergence_csv(refine(p, std::vector<int>{2, 4, 8}, constants_of(p)));
    EXPECT_EQ(csv.rfind("n_slabs,mesh,diff_l2V,diff_supH,rate_estimate,oracle_gap\n", 0), 0U);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
    EXPECT_NE(csv.find("\n8,1.2500000000000000e-01,nan,nan,nan,nan\n"), std::string::npos);
}

TEST(OracleGap, ZeroDynamics)
{
    const GalerkinSpace space = test::scalar_space(1.0, 1.0);
    const ProblemData p{FormFamily(space, [](double) { return Matrix::Zero(1, 1); }, 1.0, true), Vector::Constant(1, 1.0),
                        {}, "still"};
    const OracleGap g = oracle_gap(p, Subdivision::uniform(1.0, 8), 100);
    EXPECT_EQ(g.absolute, 0.0);
    EXPECT_EQ(g.relative, 0.0);
}

TEST(OracleGap, ScalarDecay)
{
    const ProblemData p = make_problem("scalar-decay");
    EXPECT_LE(oracle_gap(p, Subdivision::uniform(1.0, 256), 100000).absolute, 2e-4);
}

TEST(OracleGap, LadderConsistency)
{
    const ProblemData p = make_problem("heat-1d-lipschitz", {.elements = 16, .load = "smooth"});
    const RefinementStudy s = refine(p, std::vector<int>{4, 16, 64}, constants_of(p), {.oracle_steps = 20000});
    EXPECT_LE(*s.oracle_gaps.back(), *s.oracle_gaps.front());
}
