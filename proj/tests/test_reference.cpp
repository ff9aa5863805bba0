#include "cascade/reference.hpp"
#include "cascade/validator.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace cascade;

namespace {

const double kPi = std::numbers::pi;

ProblemData makeData(const std::string& f, const std::string& pp1 = "0", const std::string& pm1 = "0",
                     const std::string& pp2 = "0", const std::string& pm2 = "0") {
    return {parse(f), parse(pp1), parse(pm1), parse(pp2), parse(pm2)};
}

std::shared_ptr<const CascadeGrid> uniform(double eps, const CascadeGeometry& g, int n) {
    return std::make_shared<const CascadeGrid>(CascadeGrid::uniform(eps, g, n, n));
}

/// Manufactured solution whose x-derivative vanishes on the vertical wall at x = 0.
Expression mmsSolution(const CascadeGeometry& g) {
    const Expression x = Expression::variable(Var::X), eta = Expression::variable(Var::Eta);
    return sin(kPi / 2.0 * (x + 1.0)) * cos(2.0 * kPi / g.h1() * eta);
}

double nodalError(const GridFunction2D& u, const Expression& exact) {
    return (u - sampleOnGrid(u.cascadePtr(), [&](double x, double e) { return exact(x, e); })).maxAbs();
}

}  // namespace

TEST(SolveReference, ZeroDataGivesZero) {
    const CascadeGeometry g(1.0, 0.5);
    const auto u = solveReference(makeData("0"), uniform(0.1, g, 16));
    EXPECT_EQ(u.maxAbs(), 0.0);
    EXPECT_EQ(energyResidual(u, makeData("0")), 0.0);
}

TEST(SolveReference, ManufacturedSecondOrder) {
    const CascadeGeometry g(1.0, 0.5);
    const double eps = 0.5;
    const Expression ue = mmsSolution(g);
    const ProblemData d = manufacturedData(ue, eps, g);
    std::vector<double> hs, err;
    for (int n : {32, 64, 128}) {
        hs.push_back(1.0 / n);
        err.push_back(nodalError(solveReference(d, uniform(eps, g, n)), ue));
    }
    EXPECT_GE(fitRate(hs, err).slope, 1.9);
}

TEST(SolveReference, EvenDataGivesEvenSolution) {
    const CascadeGeometry g(1.0, 0.5);
    const auto u = solveReference(makeData("cos(x)*(1+eta^2)", "x", "-x", "1", "-1"), uniform(0.1, g, 32));
    const auto& gr = u.grid();
    const int J = gr.rows() - 1;
    for (int n = 0; n < gr.nodeCount(); ++n) {
        const auto [i, j] = gr.coords(n);
        EXPECT_NEAR(u.at(i, j), u.at(i, J - j), 1e-9 * u.maxAbs());
    }
}

TEST(SolveReference, ConstantLoadIsReproducedExactly) {
    const CascadeGeometry g(1.0, 0.5);
    Discretization disc;
    disc.nx = 32;
    disc.neta = 16;
    for (double eps : {0.1, 0.025}) {
        auto cg = std::make_shared<const CascadeGrid>(CascadeGrid::layered(eps, g, disc));
        const auto d = makeData("1");
        const auto u = solveReference(d, cg);
        EXPECT_LT(nodalError(u, parse("(1-x^2)/2")), 1e-9);
        EXPECT_LT(energyResidual(u, d), 1e-6);
    }
}

TEST(EnergyResidual, DecreasesAtSecondOrder) {
    const CascadeGeometry g(1.0, 0.5);
    const double eps = 0.5;
    const ProblemData d = manufacturedData(mmsSolution(g), eps, g);
    std::vector<double> hs, mism;
    for (int n : {32, 64, 128}) {
        hs.push_back(1.0 / n);
        mism.push_back(energyResidual(solveReference(d, uniform(eps, g, n)), d));
    }
    EXPECT_GE(fitRate(hs, mism).slope, 1.9);
}

TEST(AverageE, ProfilesOfSampledFunctions) {
    const CascadeGeometry g(1.0, 0.5);
    const auto cg = uniform(0.1, g, 16);
    const auto u = sampleOnGrid(cg, [](double x, double e) { return 1.0 - x * x + e; });
    for (int br : {1, 2}) {
        const auto p = averageE(u, br);
        EXPECT_EQ(p.x.size(), 17u);
        for (std::size_t k = 0; k < p.x.size(); ++k) EXPECT_NEAR(p.v[k], 1.0 - p.x[k] * p.x[k], 1e-14);
    }
    const auto c = sampleOnGrid(cg, [](double, double) { return 2.0; });
    const auto p = averageE(c, 1);
    EXPECT_NEAR(p.normL2(), 2.0, 1e-14);
    EXPECT_NEAR(p.normH1(), 2.0, 1e-14);
    EXPECT_EQ(p.maxAbs(), 2.0);
}

TEST(SolveReference, MaximumPrinciple) {
    const CascadeGeometry g(1.0, 0.4);
    const auto u = solveReference(makeData("1+x^2+eta", "-1", "0.5", "0", "1"), uniform(0.2, g, 32));
    for (double v : u.values()) EXPECT_GE(v, -1e-12);
}

TEST(SolveReference, IsLinearInTheData) {
    const CascadeGeometry g(1.0, 0.5);
    const auto cg = uniform(0.1, g, 32);
    const auto a = solveReference(makeData("cos(x)", "x", "0", "0", "1"), cg);
    const auto b = solveReference(makeData("eta^2", "0", "x^3", "2", "0"), cg);
    const auto s = solveReference(makeData("2*cos(x) - 3*eta^2", "2*x", "-3*x^3", "-6", "2"), cg);
    const double scale = s.maxAbs();
    for (int n = 0; n < cg->grid.nodeCount(); ++n)
        EXPECT_NEAR(s.values()[n], 2 * a.values()[n] - 3 * b.values()[n], 1e-9 * scale);
}

TEST(CascadeGrid, LayeredGridResolvesLayers) {
    const CascadeGeometry g(1.0, 0.5);
    Discretization disc;
    const auto cg = CascadeGrid::layered(0.05, g, disc);
    const auto& s = cg.grid.sNodes();
    EXPECT_EQ(s.front(), -1.0);
    EXPECT_EQ(s.back(), 1.0);
    EXPECT_EQ(cg.grid.s(cg.grid.i0()), 0.0);
    EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
    const double fine = 0.05 / disc.neta;
    EXPECT_NEAR(cg.grid.s(cg.grid.i0() + 1), fine, 1e-15);
    EXPECT_NEAR(1.0 - s[s.size() - 2], fine, 1e-15);
    for (std::size_t k = 0; k + 1 < s.size(); ++k) EXPECT_LE(s[k + 1] - s[k], 1.0 / disc.nx + 1e-12);
    EXPECT_THROW(CascadeGrid::uniform(0.0, g, 8, 8), ConfigError);
}
