#pragma once

#include "cascade/assembler.hpp"
#include "cascade/config.hpp"
#include "cascade/error.hpp"
#include "cascade/quadrature.hpp"
#include "cascade/reference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numbers>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

namespace cascade {

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    int used = 0;
    bool excluded_zero = false;  ///< at least one exact zero was dropped
    bool exact = false;          ///< every value at the noise floor; no slope was fitted

    /// Exact reproduction counts as meeting any rate.
    [[nodiscard]] bool meets(double threshold) const { return exact || (used >= 3 && slope >= threshold); }
};

/// Least-squares slope of log(value) against log(eps).
inline FitResult fitRate(const std::vector<double>& eps, const std::vector<double>& values) {
    if (eps.size() != values.size()) throw Error("fitRate: size mismatch");
    FitResult r;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < eps.size(); ++k) {
        if (values[k] == 0.0) {
            r.excluded_zero = true;
            continue;
        }
        if (!(values[k] > 0.0) || !(eps[k] > 0.0)) throw Error("fitRate: values must be positive");
        const double x = std::log(eps[k]), y = std::log(values[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++r.used;
    }
    if (r.used < 3) throw Error("fitRate: fewer than 3 usable points");
    const double n = r.used;
    r.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    r.intercept = (sy - r.slope * sx) / n;
    return r;
}

/// One row of the convergence report (all norms in the scaled thin-domain measure).
struct ConvergenceRow {
    double eps = 0.0;
    double l2_u_w2 = 0.0;      ///< ||u - omega2||_L2
    double h1_u_w2 = 0.0;      ///< ||u - omega2||_H1
    double h1_first = 0.0;     ///< ||u - omega2 - eps (omega3 + chi0 N1)||_H1
    double h1_partial = 0.0;   ///< ||u - U^(m)||_H1
    std::array<double, 2> avg_l2{}, avg_h1{}, avg_max{};  ///< E^(i)(u) - omega2 on I_i
    std::array<double, 2> residual{};                     ///< sup |Delta U + f| per branch
    double energy_mismatch = 0.0;
    int grid_nodes = 0;
    double u_norm = 0.0;  ///< ||u||_H1 of the reference solution
};

/// Norms of the differences between a reference solution and the expansion.
inline ConvergenceRow errorNorms(const GridFunction2D& uref, const Components& c, int m) {
    const auto& cg = uref.cascadePtr();
    const double eps = cg->eps;
    ConvergenceRow row;
    row.eps = eps;
    row.grid_nodes = cg->grid.nodeCount();
    row.u_norm = uref.normH1();
    const BranchFunction1D& w2 = c.omega.at(2);
    const GridFunction2D W2 = sampleOnGrid(cg, [&](double x, double) { return w2(x); });
    const GridFunction2D U1 = PartialSum(c, eps, 1, true).sample(cg);
    const GridFunction2D Um = PartialSum(c, eps, m).sample(cg);
    const GridFunction2D e0 = uref - W2;
    row.l2_u_w2 = e0.normL2();
    row.h1_u_w2 = e0.normH1();
    row.h1_first = (uref - U1).normH1();
    row.h1_partial = (uref - Um).normH1();
    for (int br = 1; br <= 2; ++br) {
        Profile1D p = averageE(uref, br);
        for (std::size_t k = 0; k < p.x.size(); ++k) p.v[k] -= w2.value(br, p.x[k]);
        row.avg_l2[br - 1] = p.normL2();
        row.avg_h1[br - 1] = p.normH1();
        row.avg_max[br - 1] = p.maxAbs();
    }
    return row;
}

struct ResidualReport {
    std::array<double, 2> sup{};
    std::array<double, 2> argmax_x{};
};

/// sup over the nodes of a grid of |Delta U^(m) + f|, per branch.
inline ResidualReport residualSup(const Components& c, const CascadeGrid& cg, int m) {
    const PartialSum ps(c, cg.eps, m);
    const auto& g = cg.grid;
    ResidualReport rep;
    for (int i = 0; i < g.columns(); ++i) {
        const int br = i <= g.i0() ? 1 : 2;
        std::vector<double> etas;
        for (int j = g.rowLo(i); j <= g.rowHi(i); ++j) etas.push_back(g.eta(j));
        const auto r = ps.residualColumn(g.s(i), br, etas);
        for (double v : r) {
            if (std::abs(v) > rep.sup[br - 1]) {
                rep.sup[br - 1] = std::abs(v);
                rep.argmax_x[br - 1] = g.s(i);
            }
        }
    }
    return rep;
}

struct ConstantBounds {
    double t9 = 0.0;
    double t10 = 0.0;
};

namespace detail {

inline double l2Branch2D(const Expression& e, double h, double xlo, double tol) {
    if (e.isZero()) return 0.0;
    const double v = integrate(
        [&](double x) {
            return integrate([&](double t) { return e(x, t) * e(x, t); }, -0.5 * h, 0.5 * h, tol).value;
        },
        xlo, xlo + 1.0, tol).value;
    return std::sqrt(std::max(0.0, v));
}

inline double l2Branch1D(const Expression& e, double xlo, double tol) {
    if (e.isZero()) return 0.0;
    const double v = integrate([&](double x) { return e(x, 0.0) * e(x, 0.0); }, xlo, xlo + 1.0, tol).value;
    return std::sqrt(std::max(0.0, v));
}

}  // namespace detail

/// Explicit data bounds: `t9` bounds the summed L2 norms of d_eta u2, `t10` the energy
/// of the second junction layer; c_delta is a free constant and |d1+| enters t10.
inline ConstantBounds constantBounds(const ProblemData& data, const CascadeGeometry& geom, double c_delta,
                                     double d1_plus, double tol = 1e-10) {
    ConstantBounds b;
    for (int br = 1; br <= 2; ++br) {
        const double h = geom.thickness(br), xlo = geom.xLo(br);
        const double nf = detail::l2Branch2D(data.f, h, xlo, tol);
        const double nfx = detail::l2Branch2D(differentiate(data.f, Var::X), h, xlo, tol);
        const double nm = detail::l2Branch1D(data.phiMinus(br), xlo, tol);
        const double nmx = detail::l2Branch1D(differentiate(data.phiMinus(br), Var::X), xlo, tol);
        const double np = detail::l2Branch1D(data.phiPlus(br), xlo, tol);
        const double npx = detail::l2Branch1D(differentiate(data.phiPlus(br), Var::X), xlo, tol);
        const double sh = std::sqrt(h);
        b.t9 += sh * (std::sqrt(5.0 * h) * nf + 2.0 * std::sqrt(2.0) * nm + std::sqrt(6.0) * np);
        b.t10 += 2.0 * (h * (c_delta * std::sqrt(2.0) * h * std::sqrt(1.0 + h * h) + std::sqrt(5.0)) * (nf + nfx) +
                        sh * (c_delta * h * std::sqrt(3.0 + 2.0 * h * h) + 2.0 * std::sqrt(2.0)) * (nm + nmx) +
                        sh * (c_delta * h * std::sqrt(3.0 + 2.0 * h * h) + std::sqrt(6.0)) * (np + npx));
    }
    const double h1 = geom.h1(), h2 = geom.h2();
    b.t10 += 2.0 * std::abs(d1_plus) * (h2 * std::sqrt(h1) + h1 * std::sqrt(h2)) / (h1 + h2);
    return b;
}

/// Sum over branches of ||d_eta u2||_L2(I_i x Y_i), by tensor Gauss-Legendre.
inline double etaGradientNormU2(const Components& c) {
    const auto [gx, gw] = gaussLegendre(6);
    double total = 0.0;
    for (int br = 1; br <= 2; ++br) {
        const CorrectorField d = c.corrector(2, br).dEta();
        if (d.isZero()) continue;
        const double h = c.geom.thickness(br), xlo = c.geom.xLo(br);
        const int px = 32, pe = 8;
        std::vector<double> etas, we;
        for (int q = 0; q < pe; ++q)
            for (int k = 0; k < 6; ++k) {
                const double w = h / pe;
                etas.push_back(-0.5 * h + (q + 0.5) * w + 0.5 * w * gx[k]);
                we.push_back(0.5 * w * gw[k]);
            }
        double s = 0.0;
        for (int q = 0; q < px; ++q)
            for (int k = 0; k < 6; ++k) {
                const double w = 1.0 / px, x = xlo + (q + 0.5) * w + 0.5 * w * gx[k];
                const auto col = d.sampleColumn(x, etas);
                for (std::size_t j = 0; j < etas.size(); ++j) s += 0.5 * w * gw[k] * we[j] * col[j] * col[j];
            }
        total += std::sqrt(s);
    }
    return total;
}

/// Errors at or below this fraction of ||u||_H1 are solver round-off.
inline constexpr double kNoiseFloor = 1e-8;

/// Sweep options beyond the configuration.
struct SweepOptions {
    int jobs = 1;
    bool auto_refine = true;
    bool with_residual = true;
};

struct ConvergenceReport {
    int m = 1;
    std::vector<ConvergenceRow> rows;
    FitResult l2_u_w2, h1_u_w2, h1_first, h1_partial;
    std::array<FitResult, 2> avg_l2, avg_h1, avg_max, residual;
    ConstantBounds bounds;
    double eta_grad_u2 = 0.0;  ///< measured left side of the t9 inequality
    double d1_plus = 0.0;
    double reference_error_estimate = 0.0;
    bool refined = false;
    std::vector<std::string> notes;
};

/// Thin-domain manufactured solution sin(pi (x+1)/2) (1 + eps^2 cos(2 pi eta / h1)) and its data.
inline ProblemData manufacturedData(const Expression& u, double eps, const CascadeGeometry& geom) {
    ProblemData d;
    const double k = 1.0 / (eps * eps);
    d.f = -(differentiate(differentiate(u, Var::X), Var::X)) - k * differentiate(differentiate(u, Var::Eta), Var::Eta);
    const Expression ue = differentiate(u, Var::Eta);
    auto wall = [&](double eta) { return -k * substitute(ue, Var::Eta, Expression::constant(eta)); };
    d.phi_plus_1 = wall(0.5 * geom.h1());
    d.phi_minus_1 = wall(-0.5 * geom.h1());
    d.phi_plus_2 = wall(0.5 * geom.h2());
    d.phi_minus_2 = wall(-0.5 * geom.h2());
    return d;
}

inline Expression thinManufactured(double eps, const CascadeGeometry& geom) {
    const Expression x = Expression::variable(Var::X), eta = Expression::variable(Var::Eta);
    const double pi = std::numbers::pi;
    return sin(pi / 2.0 * (x + 1.0)) * (1.0 + eps * eps * cos(2.0 * pi / geom.h1() * eta));
}

/// Richardson estimate of the reference discretization error, split by direction: the
/// problem is re-solved with every other x column, and separately on the eta lattice with
/// half the density, and the nodal differences are scaled by 1/3 (second order).
struct DiscretizationEstimate {
    double x = 0.0;
    double eta = 0.0;
    bool eta_available = false;
    [[nodiscard]] double total() const { return x + eta; }
};

namespace detail {

inline double coarseDifference(const ProblemData& data, const GridFunction2D& fine,
                               const std::shared_ptr<const CascadeGrid>& coarse, const ReferenceOptions& ro) {
    const auto& fg = fine.grid();
    const auto& cgr = coarse->grid;
    const GridFunction2D uc = solveReference(data, coarse, ro);
    GridFunction2D restricted(coarse);
    auto nearest = [](const std::vector<double>& v, double t) {
        const auto it = std::lower_bound(v.begin(), v.end(), t - 1e-12);
        return static_cast<int>(it - v.begin());
    };
    for (int n = 0; n < cgr.nodeCount(); ++n) {
        const auto [i, j] = cgr.coords(n);
        restricted.values()[n] = fine.at(nearest(fg.sNodes(), cgr.s(i)), nearest(fg.lattice().eta, cgr.eta(j)));
    }
    return (uc - restricted).normH1() / 3.0;
}

}  // namespace detail

inline DiscretizationEstimate referenceErrorEstimate(const ProblemData& data, const GridFunction2D& fine,
                                                     const CascadeGeometry& geom, int neta,
                                                     const ReferenceOptions& ro) {
    DiscretizationEstimate est;
    const auto& cg = fine.cascade();
    const auto& g = cg.grid;
    std::vector<double> xs;
    for (int i = 0; i < g.columns(); ++i)
        if ((i - g.i0()) % 2 == 0 || i == 0 || i == g.columns() - 1) xs.push_back(g.s(i));
    auto cx = std::make_shared<const CascadeGrid>(cg.eps, BranchedGrid(xs, g.lattice()));
    est.x = detail::coarseDifference(data, fine, cx, ro);
    if (neta % 2 == 0) {
        const EtaLattice half = EtaLattice::make(geom.h1(), geom.h2(), neta / 2);
        bool nested = true;
        for (double e : half.eta)
            nested = nested && std::any_of(g.lattice().eta.begin(), g.lattice().eta.end(),
                                           [e](double t) { return std::abs(t - e) < 1e-12; });
        if (nested) {
            auto ce = std::make_shared<const CascadeGrid>(cg.eps, BranchedGrid(g.sNodes(), half));
            est.eta = detail::coarseDifference(data, fine, ce, ro);
            est.eta_available = true;
        }
    }
    return est;
}

/// Run the eps sweep: reference solve and expansion comparison per eps, rows in parallel.
inline ConvergenceReport sweep(const Config& cfg, int m, const SweepOptions& opt = {}) {
    ConvergenceReport rep;
    rep.m = m;
    Discretization disc = cfg.disc;
    Components comp = buildComponents(cfg.data, cfg.geometry, disc, m);
    rep.d1_plus = comp.d_plus.at(1);
    ReferenceOptions ro;
    ro.solver = disc.solver;
    ro.tol_lin_solve = disc.tol_lin_solve;

    auto runRows = [&](const Discretization& d) {
        std::vector<ConvergenceRow> rows(cfg.epsilons.size());
        std::atomic<std::size_t> next{0};
        std::mutex err_mu;
        std::exception_ptr err;
        auto worker = [&] {
            for (std::size_t k; (k = next.fetch_add(1)) < rows.size();) {
                try {
                    const double eps = cfg.epsilons[k];
                    auto cg = std::make_shared<const CascadeGrid>(CascadeGrid::layered(eps, cfg.geometry, d));
                    const GridFunction2D u = solveReference(cfg.data, cg, ro);
                    rows[k] = errorNorms(u, comp, m);
                    rows[k].energy_mismatch = energyResidual(u, cfg.data);
                    if (opt.with_residual) rows[k].residual = residualSup(comp, *cg, m).sup;
                } catch (...) {
                    std::lock_guard<std::mutex> lk(err_mu);
                    if (!err) err = std::current_exception();
                }
            }
        };
        const int jobs = std::max(1, std::min<int>(opt.jobs, static_cast<int>(rows.size())));
        std::vector<std::thread> pool;
        for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
        worker();
        for (auto& t : pool) t.join();
        if (err) std::rethrow_exception(err);
        return rows;
    };

    rep.rows = runRows(disc);
    if (opt.auto_refine && !rep.rows.empty()) {
        // Near x = 0 the reference grid is the eps-scaled strip lattice, so the corner
        // singularity error is shared with the junction layers and cancels in u - U. The gate
        // therefore uses the first-order error, which is dominated by the expansion itself.
        const double eps_min = cfg.epsilons.back();
        auto cg = std::make_shared<const CascadeGrid>(CascadeGrid::layered(eps_min, cfg.geometry, disc));
        const GridFunction2D u = solveReference(cfg.data, cg, ro);
        const DiscretizationEstimate est = referenceErrorEstimate(cfg.data, u, cfg.geometry, disc.neta, ro);
        rep.reference_error_estimate = est.total();
        const double smallest = rep.rows.back().h1_first;
        if (smallest > kNoiseFloor * rep.rows.back().u_norm && est.total() > 0.1 * smallest) {
            rep.refined = true;
            if (est.x >= est.eta) {
                disc.nx *= 2;
                rep.notes.push_back("reference grid refined once in x (nx doubled)");
                rep.rows = runRows(disc);
            } else {
                disc.neta *= 2;
                rep.notes.push_back("grids refined once in eta (neta doubled)");
                comp = buildComponents(cfg.data, cfg.geometry, disc, m);
                rep.d1_plus = comp.d_plus.at(1);
                rep.rows = runRows(disc);
            }
        }
    }

    std::vector<double> eps;
    for (const auto& r : rep.rows) eps.push_back(r.eps);
    auto fit = [&](auto get, FitResult& out, const std::string& name) {
        std::vector<double> v;
        bool floor = true;
        for (const auto& r : rep.rows) {
            v.push_back(get(r));
            floor = floor && v.back() <= kNoiseFloor * std::max(1.0, r.u_norm);
        }
        if (floor) {
            out.exact = true;
            rep.notes.push_back(name + ": at the noise floor for every eps");
            return;
        }
        try {
            out = fitRate(eps, v);
        } catch (const Error& e) {
            rep.notes.push_back(name + ": " + e.what());
        }
    };
    if (rep.rows.size() >= 3) {
        fit([](const ConvergenceRow& r) { return r.l2_u_w2; }, rep.l2_u_w2, "l2_u_w2");
        fit([](const ConvergenceRow& r) { return r.h1_u_w2; }, rep.h1_u_w2, "h1_u_w2");
        fit([](const ConvergenceRow& r) { return r.h1_first; }, rep.h1_first, "h1_first");
        fit([](const ConvergenceRow& r) { return r.h1_partial; }, rep.h1_partial, "h1_partial");
        for (int b = 0; b < 2; ++b) {
            fit([b](const ConvergenceRow& r) { return r.avg_l2[b]; }, rep.avg_l2[b], "avg_l2_" + std::to_string(b + 1));
            fit([b](const ConvergenceRow& r) { return r.avg_h1[b]; }, rep.avg_h1[b], "avg_h1_" + std::to_string(b + 1));
            fit([b](const ConvergenceRow& r) { return r.avg_max[b]; }, rep.avg_max[b], "avg_max_" + std::to_string(b + 1));
            if (opt.with_residual) fit([b](const ConvergenceRow& r) { return r.residual[b]; }, rep.residual[b], "residual_" + std::to_string(b + 1));
        }
    } else {
        rep.notes.push_back("fewer than 3 sweep points; no slopes fitted");
    }
    rep.bounds = constantBounds(cfg.data, cfg.geometry, disc.c_delta, rep.d1_plus);
    rep.eta_grad_u2 = etaGradientNormU2(comp);
    return rep;
}

/// Slope thresholds of the rate suite.
struct RateThresholds {
    double l2_u_w2 = 1.4, h1_u_w2 = 0.9, h1_first = 1.4, h1_partial = 2.2, avg_max = 0.4, residual = 1.8;
};

/// True when every fitted slope meets its threshold.
inline bool meetsThresholds(const ConvergenceReport& r, const RateThresholds& t = {}) {
    bool ok = r.l2_u_w2.meets(t.l2_u_w2) && r.h1_u_w2.meets(t.h1_u_w2) && r.h1_first.meets(t.h1_first) &&
              r.h1_partial.meets(t.h1_partial);
    for (int b = 0; b < 2; ++b) ok = ok && r.avg_max[b].meets(t.avg_max);
    return ok;
}

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// CSV: one row per eps followed by a slope row and a bounds row.
inline void writeReportCsv(std::ostream& os, const ConvergenceReport& r) {
    os << "kind,eps,l2_u_w2,h1_u_w2,h1_first,h1_partial,avg_l2_1,avg_l2_2,avg_h1_1,avg_h1_2,avg_max_1,avg_max_2,"
          "residual_1,residual_2,energy_mismatch,grid_nodes\n";
    for (const auto& w : r.rows) {
        os << "row," << fmt17(w.eps) << ',' << fmt17(w.l2_u_w2) << ',' << fmt17(w.h1_u_w2) << ',' << fmt17(w.h1_first)
           << ',' << fmt17(w.h1_partial) << ',' << fmt17(w.avg_l2[0]) << ',' << fmt17(w.avg_l2[1]) << ','
           << fmt17(w.avg_h1[0]) << ',' << fmt17(w.avg_h1[1]) << ',' << fmt17(w.avg_max[0]) << ','
           << fmt17(w.avg_max[1]) << ',' << fmt17(w.residual[0]) << ',' << fmt17(w.residual[1]) << ','
           << fmt17(w.energy_mismatch) << ',' << w.grid_nodes << '\n';
    }
    auto sl = [](const FitResult& f) { return f.exact ? std::string("exact") : fmt17(f.slope); };
    os << "slope,," << sl(r.l2_u_w2) << ',' << sl(r.h1_u_w2) << ',' << sl(r.h1_first) << ',' << sl(r.h1_partial)
       << ',' << sl(r.avg_l2[0]) << ',' << sl(r.avg_l2[1]) << ',' << sl(r.avg_h1[0]) << ',' << sl(r.avg_h1[1]) << ','
       << sl(r.avg_max[0]) << ',' << sl(r.avg_max[1]) << ',' << sl(r.residual[0]) << ',' << sl(r.residual[1])
       << ",,\n";
    os << "# bound_t9," << fmt17(r.bounds.t9) << "\n";
    os << "# bound_t10," << fmt17(r.bounds.t10) << "\n";
    os << "# eta_grad_u2," << fmt17(r.eta_grad_u2) << "\n";
    os << "# d1_plus," << fmt17(r.d1_plus) << "\n";
    os << "# reference_error_estimate," << fmt17(r.reference_error_estimate) << "\n";
    os << "# refined," << (r.refined ? 1 : 0) << "\n";
}

}  // namespace cascade
