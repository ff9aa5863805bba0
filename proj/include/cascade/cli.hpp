#pragma once

#include "cascade/assembler.hpp"
#include "cascade/config.hpp"
#include "cascade/error.hpp"
#include "cascade/junction.hpp"
#include "cascade/reference.hpp"
#include "cascade/validator.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace cascade::cli {

enum ExitCode : int { Ok = 0, ValidationFailure = 1, InputError = 2 };

namespace detail {

inline std::ofstream openOut(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    return out;
}

/// --jobs, overridden by CASCADE_ASYM_JOBS; 0 means all cores.
inline int resolveJobs(int flag) {
    int jobs = flag;
    if (const char* env = std::getenv("CASCADE_ASYM_JOBS")) {
        try {
            jobs = std::stoi(env);
        } catch (const std::exception&) {
            throw ConfigError(std::string("CASCADE_ASYM_JOBS is not an integer: ") + env);
        }
    }
    if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    return jobs;
}

inline void writeField(std::ostream& os, const GridFunction2D& u, const char* name) {
    const auto& g = u.grid();
    os << "x,eta," << name << '\n';
    for (int n = 0; n < g.nodeCount(); ++n) {
        const auto [i, j] = g.coords(n);
        os << fmt17(g.s(i)) << ',' << fmt17(g.eta(j)) << ',' << fmt17(u.values()[n]) << '\n';
    }
}

inline void dumpCorrectors(const std::string& path, const Components& c, int samples) {
    auto os = openOut(path);
    os << "k,branch,x,eta,u\n";
    for (const auto& [k, pair] : c.u) {
        for (int br = 1; br <= 2; ++br) {
            const double h = c.geom.thickness(br), xlo = c.geom.xLo(br);
            std::vector<double> etas;
            for (int j = 0; j <= 16; ++j) etas.push_back(-0.5 * h + h * j / 16.0);
            for (int s = 0; s <= samples; ++s) {
                const double x = xlo + static_cast<double>(s) / samples;
                const auto col = pair[br - 1].sampleColumn(x, etas);
                for (std::size_t j = 0; j < etas.size(); ++j)
                    os << k << ',' << br << ',' << fmt17(x) << ',' << fmt17(etas[j]) << ',' << fmt17(col[j]) << '\n';
            }
        }
    }
}

inline void dumpLayers(const std::string& path, const Components& c) {
    auto os = openOut(path);
    os << "kind,k,side,index,value\n";
    for (const auto& [k, pair] : c.pi) {
        for (const FourierLayer& L : pair) {
            const char* side = L.side == Side::Left ? "left" : "right";
            os << "pi_a0," << k << ',' << side << ",0," << fmt17(L.a0) << '\n';
            for (std::size_t p = 1; p < L.a.size(); ++p)
                os << "pi_a," << k << ',' << side << ',' << p << ',' << fmt17(L.a[p]) << '\n';
            for (std::size_t p = 0; p < L.b.size(); ++p)
                os << "pi_b," << k << ',' << side << ',' << p << ',' << fmt17(L.b[p]) << '\n';
        }
    }
    for (const auto& [k, N] : c.N) {
        os << "n_d_plus," << k << ",junction,0," << fmt17(N.dPlus()) << '\n';
        os << "n_amp_junction," << k << ",junction,0," << fmt17(N.amplitudeAtJunction()) << '\n';
        os << "n_amp_far_left," << k << ",junction,0," << fmt17(N.amplitudeFarLeft()) << '\n';
        os << "n_amp_far_right," << k << ",junction,0," << fmt17(N.amplitudeFarRight()) << '\n';
    }
}

/// One two-column file per reported quantity: eps and value, for log-log plotting.
inline void writePlots(const std::string& out, const ConvergenceReport& r) {
    namespace fs = std::filesystem;
    const fs::path base(out);
    const fs::path dir = base.has_parent_path() ? base.parent_path() : fs::path(".");
    const std::string stem = base.stem().string();
    auto emit = [&](const std::string& name, auto get) {
        auto os = openOut((dir / (stem + "_" + name + ".dat")).string());
        os << "# eps " << name << '\n';
        for (const auto& w : r.rows) os << fmt17(w.eps) << ' ' << fmt17(get(w)) << '\n';
    };
    emit("l2_u_w2", [](const ConvergenceRow& w) { return w.l2_u_w2; });
    emit("h1_u_w2", [](const ConvergenceRow& w) { return w.h1_u_w2; });
    emit("h1_first", [](const ConvergenceRow& w) { return w.h1_first; });
    emit("h1_partial", [](const ConvergenceRow& w) { return w.h1_partial; });
    emit("avg_max_1", [](const ConvergenceRow& w) { return w.avg_max[0]; });
    emit("avg_max_2", [](const ConvergenceRow& w) { return w.avg_max[1]; });
    emit("residual_1", [](const ConvergenceRow& w) { return w.residual[0]; });
    emit("residual_2", [](const ConvergenceRow& w) { return w.residual[1]; });
}

inline Config load(const std::string& path, std::ostream& err) {
    Config cfg = loadConfig(path);
    for (const auto& w : cfg.warnings) err << "warning: " << w << '\n';
    return cfg;
}

}  // namespace detail

/// Parse argv and dispatch. Normal output goes to `out`, diagnostics to `err`.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Asymptotic expansion toolkit for Poisson problems in thin cascade domains", "cascade-asym"};
    app.require_subcommand(1);

    std::string config, outPath, dumpCorrector, dumpLayers;
    double eps = 0.1;
    std::optional<int> mFlag;
    int jobs = 0;
    bool plots = false, noRefine = false;
    double jh1 = 1.0, jh2 = 0.5, jR = 12.0;
    int jneta = 64;

    auto* solve = app.add_subcommand("solve", "Reference solution on the layer-resolving grid");
    solve->add_option("--config", config, "Configuration file")->required();
    solve->add_option("--eps", eps, "Thickness parameter")->check(CLI::PositiveNumber);
    solve->add_option("--out", outPath, "Nodal values x,eta,u")->default_val("u.csv");

    auto* homog = app.add_subcommand("homogenize", "Homogenized profile omega2 on both branches");
    homog->add_option("--config", config, "Configuration file")->required();
    homog->add_option("--out", outPath, "x, omega2, omega2' per branch")->default_val("omega2.csv");

    auto* junc = app.add_subcommand("junction", "First junction layer N1 and its plateau constant");
    junc->add_option("--config", config, "Configuration file (default: unit-flux data)");
    junc->add_option("--h1", jh1, "Wide thickness")->check(CLI::PositiveNumber);
    junc->add_option("--h2", jh2, "Narrow thickness")->check(CLI::PositiveNumber);
    junc->add_option("--R", jR, "Strip half-length")->check(CLI::PositiveNumber);
    junc->add_option("--neta", jneta, "Strip cells per unit length")->check(CLI::PositiveNumber);
    junc->add_option("--out", outPath, "Nodal values xi,eta,N1");

    auto* asym = app.add_subcommand("asymptotics", "Partial sum U^(m) sampled on the reference grid");
    asym->add_option("--config", config, "Configuration file")->required();
    asym->add_option("--eps", eps, "Thickness parameter")->check(CLI::PositiveNumber);
    asym->add_option("--m", mFlag, "Expansion order (1..3)");
    asym->add_option("--out", outPath, "Nodal values x,eta,U")->default_val("asymptotics.csv");
    asym->add_option("--dump-corrector", dumpCorrector, "Sampled regular correctors u_k");
    asym->add_option("--dump-layers", dumpLayers, "Boundary-layer coefficients and junction constants");

    auto* sweepCmd = app.add_subcommand("sweep", "Convergence report over the eps list");
    auto* valid = app.add_subcommand("validate", "Sweep and check the rate thresholds");
    for (auto* sc : {sweepCmd, valid}) {
        sc->add_option("--config", config, "Configuration file")->required();
        sc->add_option("--m", mFlag, "Expansion order (1..3)");
        sc->add_option("--jobs", jobs, "Worker threads (0: all cores)");
        sc->add_option("--out", outPath, "Report CSV")->default_val("report.csv");
        sc->add_flag("--no-refine", noRefine, "Skip the reference-error check and refinement");
        sc->add_flag("--plots", plots, "Also write eps/value files per quantity");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return Ok;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n' << app.help();
        return InputError;
    }

    try {
        if (solve->parsed()) {
            const Config cfg = detail::load(config, err);
            auto cg = std::make_shared<const CascadeGrid>(CascadeGrid::layered(eps, cfg.geometry, cfg.disc));
            ReferenceOptions ro;
            ro.solver = cfg.disc.solver;
            ro.tol_lin_solve = cfg.disc.tol_lin_solve;
            const GridFunction2D u = solveReference(cfg.data, cg, ro);
            auto os = detail::openOut(outPath);
            detail::writeField(os, u, "u");
            out << "nodes " << cg->grid.nodeCount() << ", energy mismatch " << fmt17(energyResidual(u, cfg.data))
                << '\n';
            return Ok;
        }
        if (homog->parsed()) {
            const Config cfg = detail::load(config, err);
            const double tol = cfg.disc.tol_quad;
            const BranchFunction1D w = solveMain(effectiveRhs(cfg.data, cfg.geometry, 1, tol),
                                                 effectiveRhs(cfg.data, cfg.geometry, 2, tol), cfg.geometry,
                                                 4 * cfg.disc.nx, tol);
            auto os = detail::openOut(outPath);
            os << "branch,x,omega2,domega2\n";
            const int n = cfg.disc.nx;
            for (int br = 1; br <= 2; ++br)
                for (int k = 0; k <= n; ++k) {
                    const double x = cfg.geometry.xLo(br) + static_cast<double>(k) / n;
                    os << br << ',' << fmt17(x) << ',' << fmt17(w.value(br, x)) << ',' << fmt17(w.derivative(br, x))
                       << '\n';
                }
            out << "omega2(0) = " << fmt17(w.value(1, 0.0)) << '\n';
            return Ok;
        }
        if (junc->parsed()) {
            Discretization disc;
            BranchFunction1D w2;
            if (!config.empty()) {
                const Config cfg = detail::load(config, err);
                disc = cfg.disc;
                jh1 = cfg.geometry.h1();
                jh2 = cfg.geometry.h2();
                const double tol = disc.tol_quad;
                w2 = solveMain(effectiveRhs(cfg.data, cfg.geometry, 1, tol),
                               effectiveRhs(cfg.data, cfg.geometry, 2, tol), cfg.geometry, 4 * disc.nx, tol);
            } else {
                if (jh2 > jh1) throw ConfigError("h2 must be <= h1");
                disc.R = jR;
                disc.neta = jneta;
                // unit flux through the wide branch, balanced on the narrow one
                w2 = BranchFunction1D::affine(0.0, 1.0, 0.0, jh1 / jh2);
            }
            auto dom = std::make_shared<const StripDomain>(jh1, jh2, disc.R, disc.neta);
            JunctionInputs in;
            in.omega2 = &w2;
            const StripProblem p = junctionProblem(1, in, jh1, jh2);
            const JunctionLayer N1 = solveStrip(p, dom, stripOptions(disc));
            const Z0Result z0 = solveZ0(*dom, disc.solver, disc.tol_lin_solve);
            const double green = computeD0(p, *dom, z0, disc.lift_delta);
            out << "d1+ (plateau) = " << fmt17(N1.dPlus()) << '\n';
            out << "d1+ (green)   = " << fmt17(green) << '\n';
            out << "amplitude at junction = " << fmt17(N1.amplitudeAtJunction()) << '\n';
            if (N1.isZero()) out << "layer identically zero\n";
            if (!outPath.empty()) {
                auto os = detail::openOut(outPath);
                const auto& g = dom->grid();
                os << "xi,eta,n1\n";
                for (int n = 0; n < g.nodeCount(); ++n) {
                    const auto [i, j] = g.coords(n);
                    os << fmt17(g.s(i)) << ',' << fmt17(g.eta(j)) << ',' << fmt17(N1.values()[n]) << '\n';
                }
            }
            return Ok;
        }
        if (asym->parsed()) {
            const Config cfg = detail::load(config, err);
            const int m = mFlag.value_or(cfg.m);
            const Components c = buildComponents(cfg.data, cfg.geometry, cfg.disc, m);
            auto cg = std::make_shared<const CascadeGrid>(CascadeGrid::layered(eps, cfg.geometry, cfg.disc));
            const GridFunction2D U = PartialSum(c, eps, m).sample(cg);
            auto os = detail::openOut(outPath);
            detail::writeField(os, U, "U");
            for (const auto& [k, d] : c.d_plus) out << "d" << k << "+ = " << fmt17(d) << '\n';
            if (!dumpCorrector.empty()) detail::dumpCorrectors(dumpCorrector, c, cfg.disc.nx);
            if (!dumpLayers.empty()) detail::dumpLayers(dumpLayers, c);
            return Ok;
        }
        if (sweepCmd->parsed() || valid->parsed()) {
            const Config cfg = detail::load(config, err);
            const int m = mFlag.value_or(cfg.m);
            SweepOptions opt;
            opt.jobs = detail::resolveJobs(jobs);
            opt.auto_refine = !noRefine;
            const ConvergenceReport r = sweep(cfg, m, opt);
            {
                auto os = detail::openOut(outPath);
                writeReportCsv(os, r);
            }
            if (plots) detail::writePlots(outPath, r);
            for (const auto& n : r.notes) err << "note: " << n << '\n';
            out << "h1_partial slope " << fmt17(r.h1_partial.slope) << ", report written to " << outPath << '\n';
            if (valid->parsed()) {
                const RateThresholds t;
                bool ok = true;
                auto check = [&](const char* name, const FitResult& f, double thr) {
                    const bool pass = f.meets(thr);
                    ok = ok && pass;
                    out << (pass ? "PASS " : "FAIL ") << name;
                    if (f.exact) out << " exact to the noise floor\n";
                    else out << " slope " << fmt17(f.slope) << " >= " << thr << '\n';
                };
                check("l2_u_w2", r.l2_u_w2, t.l2_u_w2);
                check("h1_u_w2", r.h1_u_w2, t.h1_u_w2);
                check("h1_first", r.h1_first, t.h1_first);
                check("h1_partial", r.h1_partial, t.h1_partial);
                check("avg_max_1", r.avg_max[0], t.avg_max);
                check("avg_max_2", r.avg_max[1], t.avg_max);
                check("residual_1", r.residual[0], t.residual);
                check("residual_2", r.residual[1], t.residual);
                const bool bound = r.eta_grad_u2 <= r.bounds.t9;
                ok = ok && bound;
                out << (bound ? "PASS " : "FAIL ") << "eta_grad_u2 " << fmt17(r.eta_grad_u2) << " <= t9 "
                    << fmt17(r.bounds.t9) << '\n';
                return ok ? Ok : ValidationFailure;
            }
            return Ok;
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return InputError;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return InputError;
    } catch (const EvalError& e) {
        err << "error: " << e.what() << '\n';
        return InputError;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return ValidationFailure;
    }
    return InputError;
}

}  // namespace cascade::cli
