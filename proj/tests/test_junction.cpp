#include "cascade/junction.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace cascade;

namespace {

std::shared_ptr<const StripDomain> domain(double h1, double h2, double R = 12.0, int cpu = 32) {
    return std::make_shared<const StripDomain>(h1, h2, R, cpu);
}

/// Interface source balanced by a constant vertical-wall flux.
StripProblem balancedInterface(double h1, double h2) {
    StripProblem p;
    p.Phi = [](double) { return 1.0; };
    p.G = [g = h2 / (h1 - h2)](double) { return g; };
    return p;
}

double maxAsymmetry(const JunctionLayer& N) {
    const auto& g = N.domain().grid();
    const int J = g.rows() - 1;
    double m = 0.0;
    for (int i = 0; i < g.columns(); ++i)
        for (int j = g.rowLo(i); j <= g.rowHi(i); ++j) m = std::max(m, std::abs(N.nodal(i, j) - N.nodal(i, J - j)));
    return m;
}

}  // namespace

TEST(Solvability, Functional) {
    const auto dom = domain(1.0, 0.5, 6.0, 8);
    EXPECT_EQ(checkSolvability(StripProblem{}, *dom), 0.0);
    StripProblem g;
    g.G = [](double) { return 1.0; };
    EXPECT_NEAR(checkSolvability(g, *dom), -0.5, 1e-12);
    StripProblem phi;
    phi.Phi = [](double) { return 1.0; };
    EXPECT_NEAR(checkSolvability(phi, *dom), 0.5, 1e-12);
    EXPECT_NEAR(checkSolvability(balancedInterface(1.0, 0.5), *dom), 0.0, 1e-12);
}

TEST(Solvability, ViolationIsReported) {
    StripProblem p;
    p.Phi = [](double) { return 1.0; };
    try {
        solveStrip(p, domain(1.0, 0.5, 6.0, 8));
        FAIL();
    } catch (const SolvabilityError& e) {
        EXPECT_NEAR(e.residual(), 0.5, 1e-12);
    }
}

TEST(Solvability, WallLoadSignsMatchFunctional) {
    // each wall source balanced through the interface must give a balanced discrete load
    const double h1 = 1.0, h2 = 0.5;
    const auto dom = domain(h1, h2, 8.0, 16);
    auto bump = [](double c) { return [c](double xi) { return std::exp(-(xi - c) * (xi - c)); }; };
    for (int wall = 0; wall < 4; ++wall) {
        StripProblem p;
        const bool wide = wall < 2;
        auto b = bump(wide ? -3.0 : 3.0);
        (wall == 0 ? p.Bplus1 : wall == 1 ? p.Bminus1 : wall == 2 ? p.Bplus2 : p.Bminus2) = b;
        const double mass = integrate(b, wide ? -8.0 : 0.0, wide ? 0.0 : 8.0, 1e-13).value;
        p.Phi = [mass, h2](double) { return mass / h2; };
        EXPECT_NEAR(checkSolvability(p, *dom), 0.0, 1e-10) << wall;
        const auto loads = detail::assembleStripLoads(p, *dom, 1.0);
        double sum = 0.0, scale = 0.0;
        for (double v : loads.b) {
            sum += v;
            scale += std::abs(v);
        }
        EXPECT_LT(std::abs(sum), 1e-6 * scale) << wall;
        const auto N = solveStrip(p, dom);
        const auto z0 = solveZ0(*dom);
        EXPECT_NEAR(N.dPlus(), computeD0(p, *dom, z0), 1e-3) << wall;
    }
}

TEST(Z0, StraightChannelSlopes) {
    for (double h : {1.0, 0.5}) {
        const auto z = solveZ0(*domain(h, h, 8.0, 16));
        EXPECT_NEAR(z.slope_left, 1.0 / h, 1e-6);
        EXPECT_NEAR(z.slope_right, 1.0 / h, 1e-6);
        EXPECT_NEAR(z.ch2 - z.ch1, 0.0, 1e-9);
    }
}

TEST(Z0, SlopesAndEvenness) {
    const auto z = solveZ0(*domain(1.0, 0.5));
    EXPECT_NEAR(z.slope_left, 1.0, 1e-3);
    EXPECT_NEAR(z.slope_right, 2.0, 1e-3);
    EXPECT_NEAR(z.intercept_left, 0.0, 1e-12);
    EXPECT_LT(z.max_asymmetry, 1e-8);
}

TEST(SolveStrip, ZeroDataGivesZero) {
    const auto N = solveStrip(StripProblem{}, domain(1.0, 0.5, 6.0, 8));
    EXPECT_TRUE(N.isZero());
    EXPECT_EQ(N.dPlus(), 0.0);
}

TEST(SolveStrip, StraightChannelHasNoFirstOrderLayer) {
    const CascadeGeometry g(1.0, 1.0);
    const auto w = BranchFunction1D::affine(0.0, 1.0, 0.0, 1.0);
    JunctionInputs in;
    in.omega2 = &w;
    const auto N = buildNk(1, in, domain(1.0, 1.0, 6.0, 16));
    EXPECT_LT(N.maxAbs(), 1e-12);
    EXPECT_LT(std::abs(N.dPlus()), 1e-12);
}

TEST(SolveStrip, PlateauAgreesWithGreenFormula) {
    const auto dom = domain(1.0, 0.5);
    const auto p = balancedInterface(1.0, 0.5);
    const auto N = solveStrip(p, dom);
    const auto z0 = solveZ0(*dom);
    EXPECT_NEAR(N.dPlus(), computeD0(p, *dom, z0), 1e-3);
    EXPECT_LT(maxAsymmetry(N), 1e-8);
}

TEST(SolveStrip, OddDataHasZeroPlateau) {
    const auto dom = domain(1.0, 0.5, 8.0, 16);
    StripProblem p;
    p.Phi = [](double e) { return e; };
    p.G = [](double e) { return std::sin(3 * e); };
    const auto z0 = solveZ0(*dom);
    EXPECT_NEAR(computeD0(p, *dom, z0), 0.0, 1e-12);
    EXPECT_NEAR(solveStrip(p, dom).dPlus(), 0.0, 1e-10);
    EXPECT_EQ(computeD0(StripProblem{}, *dom, z0), 0.0);
}

TEST(SolveStrip, TruncationIndependence) {
    const auto p = balancedInterface(1.0, 0.5);
    const double d12 = solveStrip(p, domain(1.0, 0.5, 12.0)).dPlus();
    const double d14 = solveStrip(p, domain(1.0, 0.5, 14.0)).dPlus();
    EXPECT_NEAR(d12, d14, 1e-4);
}

TEST(SolveStrip, FluxConservationAndFarField) {
    const auto dom = domain(1.0, 0.5);
    const auto N = solveStrip(balancedInterface(1.0, 0.5), dom);
    const auto& g = dom->grid();
    // no sources away from the junction: each column crossing carries the far-field flux 0
    for (int i = 0; i + 1 < g.i0(); ++i) EXPECT_NEAR(g.crossingFlux(N.values(), i), 0.0, 1e-8) << i;
    for (int i = g.i0() + 1; i + 1 < g.columns(); ++i) EXPECT_NEAR(g.crossingFlux(N.values(), i), 0.0, 1e-8) << i;
    EXPECT_GT(N.amplitudeAtJunction(), 0.0);
    EXPECT_LT(N.amplitudeFarLeft(), 1e-6 * N.amplitudeAtJunction());
    EXPECT_LT(N.amplitudeFarRight(), 1e-6 * N.amplitudeAtJunction());
}

TEST(SolveStrip, ValueJumpIsReproduced) {
    const auto dom = domain(1.0, 0.5, 8.0, 16);
    StripProblem p;
    p.Psi = [](double e) { return std::cos(2 * std::numbers::pi * e / 0.5); };
    const auto N = solveStrip(p, dom);
    const auto& g = dom->grid();
    for (int j = g.j0(); j <= g.j1(); ++j)
        EXPECT_NEAR(N.rightLimit()[j] + N.dPlus() - N.nodal(g.i0(), j), p.Psi(g.eta(j)), 1e-12);
    EXPECT_NEAR(N.dPlus(), computeD0(p, *dom, solveZ0(*dom)), 1e-3);
}

TEST(SolveStrip, UnitFluxFirstOrderLayer) {
    const double h1 = 1.0, h2 = 0.5;
    const auto w = BranchFunction1D::affine(0.0, 1.0, 0.0, h1 / h2);
    JunctionInputs in;
    in.omega2 = &w;
    const auto dom = domain(h1, h2);
    const auto N = buildNk(1, in, dom);
    const auto p = junctionProblem(1, in, h1, h2);
    EXPECT_NEAR(N.dPlus(), computeD0(p, *dom, solveZ0(*dom)), 1e-6);
    EXPECT_LT(maxAsymmetry(N), 1e-8);
    EXPECT_NEAR(buildNk(1, in, domain(h1, h2, 14.0)).dPlus(), N.dPlus(), 1e-4);
}
