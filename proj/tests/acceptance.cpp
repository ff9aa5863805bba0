#include "cascade/validator.hpp"
#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <thread>

using namespace cascade;
using cascade::testing::makeData;
using cascade::testing::randomData;
using cascade::testing::rateSuiteData;

namespace {

constexpr double kZeroTol = 1e-10;
constexpr double kZeroRuntime = 5.0;
constexpr double kClosedFormTol = 1e-8;
constexpr double kTransmissionTol = 1e-9;
constexpr double kPlateauGreenRel = 1e-3;
constexpr double kTruncationRel = 1e-4;
constexpr double kJunctionRuntime = 60.0;
constexpr double kSlopeTol = 1e-3;
constexpr double kEvennessTol = 1e-8;
constexpr double kDegenerateTol = 1e-9;
constexpr double kReferenceOrder = 1.9;
constexpr double kSweepRuntime = 600.0;
constexpr double kResidualSlope = 1.8;
constexpr int kRandomSets = 5;

const CascadeGeometry kGeom(1.0, 0.5);

using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& check) {
    Outcome o;
    try {
        o = check();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str());
    std::fflush(stdout);
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double maxAbs(const CorrectorField& u, double h, double xlo) {
    double m = 0.0;
    for (int i = 0; i <= 10; ++i)
        for (int j = 0; j <= 10; ++j) m = std::max(m, std::abs(u(xlo + 0.1 * i, -0.5 * h + h * j / 10.0)));
    return m;
}

Outcome trivialProblem() {
    const auto t0 = Clock::now();
    const ProblemData d = makeData("0");
    const Discretization disc;
    const Components c = buildComponents(d, kGeom, disc, 1);
    auto cg = std::make_shared<const CascadeGrid>(CascadeGrid::layered(0.1, kGeom, disc));
    double m = solveReference(d, cg).maxAbs();
    m = std::max(m, PartialSum(c, 0.1, 1).sample(cg).maxAbs());
    for (int br = 1; br <= 2; ++br) {
        for (int k = 0; k <= 20; ++k) m = std::max(m, std::abs(c.omega.at(2)(kGeom.xLo(br) + k / 20.0)));
        m = std::max(m, maxAbs(c.corrector(2, br), kGeom.thickness(br), kGeom.xLo(br)));
    }
    for (Side s : {Side::Left, Side::Right}) {
        const FourierLayer& P = c.layer(2, s);
        for (int j = 0; j <= 10; ++j) m = std::max(m, std::abs(P.eval(0.0, -0.25 + 0.05 * j)));
    }
    m = std::max({m, c.N.at(1).maxAbs(), std::abs(c.d_plus.at(1))});
    const double t = seconds(t0);
    return {m <= kZeroTol && t < kZeroRuntime, "max |object| = " + num(m) + ", " + num(t) + " s"};
}

Outcome closedForms() {
    const auto w = solveMain(effectiveRhs(makeData("1"), kGeom, 1), effectiveRhs(makeData("1"), kGeom, 2), kGeom, 1024);
    double err = 0.0;
    for (int k = 0; k <= 2000; ++k) {
        const double x = -1.0 + k / 1000.0;
        err = std::max(err, std::abs(w(x) - 0.5 * (1.0 - x * x)));
    }
    const ProblemData one = makeData("0", "0", "1");
    const auto v = solveMain(effectiveRhs(one, kGeom, 1), effectiveRhs(one, kGeom, 2), kGeom, 1024);
    const double e2 = std::abs(v(0.0) - 1.0 / (2.0 * (kGeom.h1() + kGeom.h2())));
    return {err < kClosedFormTol && e2 < kClosedFormTol,
            "parabola error " + num(err) + ", one-sided omega2(0) error " + num(e2)};
}

Outcome fluxTransmission() {
    double worst = 0.0;
    for (unsigned s = 1; s <= kRandomSets; ++s) {
        const ProblemData d = randomData(100 + s);
        const auto w = solveMain(effectiveRhs(d, kGeom, 1), effectiveRhs(d, kGeom, 2), kGeom, 1024);
        worst = std::max(worst, std::abs(kGeom.h1() * w.derivative(1, 0.0) - kGeom.h2() * w.derivative(2, 0.0)));
    }
    return {worst < kTransmissionTol, "max flux mismatch " + num(worst) + " over " + std::to_string(kRandomSets) + " data sets"};
}

Outcome junctionCrossValidation() {
    const auto t0 = Clock::now();
    const ProblemData d = rateSuiteData();
    const auto w = solveMain(effectiveRhs(d, kGeom, 1), effectiveRhs(d, kGeom, 2), kGeom, 1024);
    JunctionInputs in;
    in.omega2 = &w;
    const StripProblem p = junctionProblem(1, in, kGeom.h1(), kGeom.h2());
    auto dom12 = std::make_shared<const StripDomain>(kGeom.h1(), kGeom.h2(), 12.0, 64);
    auto dom14 = std::make_shared<const StripDomain>(kGeom.h1(), kGeom.h2(), 14.0, 64);
    const double plateau = solveStrip(p, dom12).dPlus();
    const double green = computeD0(p, *dom12, solveZ0(*dom12));
    const double d14 = solveStrip(p, dom14).dPlus();
    const double rel_pg = std::abs(plateau - green) / std::abs(plateau);
    const double rel_r = std::abs(plateau - d14) / std::abs(plateau);
    const double t = seconds(t0);
    return {rel_pg < kPlateauGreenRel && rel_r < kTruncationRel && t < kJunctionRuntime,
            "d1+ = " + num(plateau) + ", plateau/green rel " + num(rel_pg) + ", R 12/14 rel " + num(rel_r) + ", " +
                num(t) + " s"};
}

Outcome z0Slopes() {
    const StripDomain dom(kGeom.h1(), kGeom.h2(), 12.0, 64);
    const Z0Result z = solveZ0(dom);
    const double el = std::abs(z.slope_left - 1.0 / kGeom.h1()), er = std::abs(z.slope_right - 1.0 / kGeom.h2());
    return {el < kSlopeTol && er < kSlopeTol && z.max_asymmetry < kEvennessTol,
            "slopes " + num(z.slope_left) + ", " + num(z.slope_right) + ", asymmetry " + num(z.max_asymmetry)};
}

Outcome equalThickness() {
    const CascadeGeometry g(1.0, 1.0);
    const Components c = buildComponents(rateSuiteData(), g, Discretization{}, 1);
    const double n = c.N.at(1).maxAbs(), d = std::abs(c.d_plus.at(1));
    return {n < kDegenerateTol && d < kDegenerateTol, "max |N1| = " + num(n) + ", |d1+| = " + num(d)};
}

Outcome referenceVerification() {
    const double eps = 0.1;
    const Expression x = Expression::variable(Var::X), eta = Expression::variable(Var::Eta);
    const double pi = std::numbers::pi;
    const Expression ue = sin(pi / 2.0 * (x + 1.0)) * cos(2.0 * pi / kGeom.h1() * eta);
    const ProblemData d = manufacturedData(ue, eps, kGeom);
    std::vector<double> hs, err, mism;
    for (int n : {32, 64, 128}) {
        auto cg = std::make_shared<const CascadeGrid>(CascadeGrid::uniform(eps, kGeom, n, n));
        const GridFunction2D u = solveReference(d, cg);
        hs.push_back(1.0 / n);
        err.push_back((u - sampleOnGrid(cg, [&](double a, double b) { return ue(a, b); })).maxAbs());
        mism.push_back(energyResidual(u, d));
    }
    const double p = fitRate(hs, err).slope, q = fitRate(hs, mism).slope;
    return {p >= kReferenceOrder && q >= kReferenceOrder,
            "manufactured order " + num(p) + ", energy mismatch order " + num(q)};
}

Config rateSuiteConfig() {
    Config cfg;
    cfg.data = rateSuiteData();
    cfg.epsilons = {0.2, 0.1, 0.05, 0.025};
    cfg.m = 1;
    return cfg;
}

}  // namespace

int main() {
    std::printf("acceptance suite\n");
    report(1, "trivial problem", trivialProblem);
    report(2, "homogenized closed forms", closedForms);
    report(3, "flux transmission", fluxTransmission);
    report(4, "junction cross-validation", junctionCrossValidation);
    report(5, "Z0 far-field slopes", z0Slopes);
    report(6, "equal-thickness degeneracy", equalThickness);
    report(7, "reference solver verification", referenceVerification);

    ConvergenceReport rep;
    double sweep_time = 0.0;
    std::string sweep_error;
    try {
        const auto t0 = Clock::now();
        SweepOptions opt;
        opt.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
        rep = sweep(rateSuiteConfig(), 1, opt);
        sweep_time = seconds(t0);
    } catch (const std::exception& e) {
        sweep_error = e.what();
    }
    report(8, "rate suite", [&]() -> Outcome {
        if (!sweep_error.empty()) return {false, "sweep failed: " + sweep_error};
        const RateThresholds t;
        const bool ok = meetsThresholds(rep, t) && sweep_time < kSweepRuntime;
        return {ok, "slopes l2 " + num(rep.l2_u_w2.slope) + ", h1 " + num(rep.h1_u_w2.slope) + ", first " +
                        num(rep.h1_first.slope) + ", partial " + num(rep.h1_partial.slope) + ", avg_max " +
                        num(rep.avg_max[0].slope) + "/" + num(rep.avg_max[1].slope) + ", " + num(sweep_time) +
                        " s" + (rep.refined ? ", refined" : "")};
    });
    report(9, "constant-bound inequality", [&]() -> Outcome {
        if (!sweep_error.empty()) return {false, "sweep failed: " + sweep_error};
        bool ok = rep.eta_grad_u2 <= rep.bounds.t9;
        double worst = rep.eta_grad_u2 / rep.bounds.t9;
        Discretization disc;
        disc.neta = 32;
        for (unsigned s = 1; s <= kRandomSets; ++s) {
            const ProblemData d = randomData(200 + s);
            const Components c = buildComponents(d, kGeom, disc, 1);
            const double lhs = etaGradientNormU2(c), t9 = constantBounds(d, kGeom, disc.c_delta, c.d_plus.at(1)).t9;
            ok = ok && lhs <= t9;
            worst = std::max(worst, lhs / t9);
        }
        return {ok, "rate suite " + num(rep.eta_grad_u2) + " <= " + num(rep.bounds.t9) + ", worst ratio " + num(worst)};
    });
    report(10, "residual scaling", [&]() -> Outcome {
        if (!sweep_error.empty()) return {false, "sweep failed: " + sweep_error};
        const bool ok = rep.residual[0].meets(kResidualSlope) && rep.residual[1].meets(kResidualSlope);
        return {ok, "slopes " + num(rep.residual[0].slope) + ", " + num(rep.residual[1].slope)};
    });
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
