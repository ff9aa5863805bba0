#pragma once

#include "cascade/config.hpp"
#include "cascade/error.hpp"
#include "cascade/grid.hpp"
#include "cascade/linear_solver.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

namespace cascade {

namespace detail {

/// Nodes on [a, b] whose spacing follows min(coarse, sa + g (x - a), sb + g (b - x)),
/// endpoints excluded.
inline std::vector<double> gradedGap(double a, double b, double sa, double sb, double coarse, double growth = 0.1) {
    std::vector<double> out;
    if (b - a <= 1e-14) return out;
    auto spacing = [&](double x) { return std::min({coarse, sa + growth * (x - a), sb + growth * (b - x)}); };
    const int M = 4000;
    std::vector<double> xs(M + 1), phi(M + 1, 0.0);
    for (int k = 0; k <= M; ++k) xs[k] = a + (b - a) * k / M;
    for (int k = 1; k <= M; ++k) {
        const double dx = xs[k] - xs[k - 1];
        phi[k] = phi[k - 1] + 0.5 * dx * (1.0 / spacing(xs[k - 1]) + 1.0 / spacing(xs[k]));
    }
    const int N = std::max(1, static_cast<int>(std::ceil(phi.back() - 1e-9)));
    for (int k = 1; k < N; ++k) {
        const double target = phi.back() * k / N;
        const auto it = std::lower_bound(phi.begin(), phi.end(), target);
        const int m = std::clamp(static_cast<int>(it - phi.begin()), 1, M);
        const double t = (target - phi[m - 1]) / (phi[m] - phi[m - 1]);
        out.push_back(xs[m - 1] + t * (xs[m] - xs[m - 1]));
    }
    return out;
}

}  // namespace detail

/// Reference grid over the cascade in fast coordinates (x, eta) for one eps.
struct CascadeGrid {
    double eps = 0.1;
    BranchedGrid grid;
    std::vector<double> areas;

    CascadeGrid(double e, BranchedGrid g) : eps(e), grid(std::move(g)), areas(grid.dualAreas()) {}

    /// Uniform x spacing 1 / nx, eta lattice with neta cells per unit.
    static CascadeGrid uniform(double eps, const CascadeGeometry& geom, int nx, int neta) {
        if (!(eps > 0.0)) throw ConfigError("eps must be positive");
        std::vector<double> x(2 * nx + 1);
        for (int k = -nx; k <= nx; ++k) x[k + nx] = static_cast<double>(k) / nx;
        x[nx] = 0.0;
        return {eps, BranchedGrid(std::move(x), EtaLattice::make(geom.h1(), geom.h2(), neta))};
    }

    /// Layer-resolving grid: near x = 0 the columns are eps times the junction-strip
    /// lattice (|xi| up to min(R, 2 delta / eps)), near x = +-1 the spacing is eps / neta
    /// over min(R eps, 2 delta), graded towards 1 / nx in between.
    static CascadeGrid layered(double eps, const CascadeGeometry& geom, const Discretization& d) {
        if (!(eps > 0.0)) throw ConfigError("eps must be positive");
        const double fine = eps / d.neta, coarse = 1.0 / d.nx;
        if (!d.refine_layers || fine >= coarse) return uniform(eps, geom, d.nx, d.neta);
        const int Kz = static_cast<int>(std::floor(std::min(d.R, 2.0 * d.delta / eps) * d.neta + 1e-9));
        const double xz = eps * Kz / d.neta;
        const int ne = static_cast<int>(std::ceil(std::min(d.R * eps, 2.0 * d.delta) / fine - 1e-9));
        const double xe = 1.0 - ne * fine;
        std::vector<double> right;  // x >= 0
        for (int k = 0; k <= Kz; ++k) right.push_back(eps * static_cast<double>(k) / d.neta);
        if (xe > xz) {
            for (double v : detail::gradedGap(xz, xe, fine, fine, coarse)) right.push_back(v);
            for (int k = ne; k >= 0; --k) right.push_back(1.0 - k * fine);
        } else {
            for (int k = ne; k >= 0; --k) {
                const double v = 1.0 - k * fine;
                if (v > right.back() + 0.5 * fine) right.push_back(v);
            }
        }
        right.back() = 1.0;
        std::vector<double> x;
        x.reserve(2 * right.size());
        for (std::size_t k = right.size(); k-- > 1;) x.push_back(-right[k]);
        for (double v : right) x.push_back(v);
        return {eps, BranchedGrid(std::move(x), EtaLattice::make(geom.h1(), geom.h2(), d.neta))};
    }
};

/// Nodal field on a reference grid with the eps-scaled norms of the thin domain.
class GridFunction2D {
public:
    GridFunction2D(std::shared_ptr<const CascadeGrid> g, std::vector<double> v) : g_(std::move(g)), v_(std::move(v)) {
        if (static_cast<int>(v_.size()) != g_->grid.nodeCount()) throw Error("grid function size mismatch");
    }
    explicit GridFunction2D(std::shared_ptr<const CascadeGrid> g)
        : g_(std::move(g)), v_(static_cast<std::size_t>(g_->grid.nodeCount()), 0.0) {}

    [[nodiscard]] const CascadeGrid& cascade() const { return *g_; }
    [[nodiscard]] const std::shared_ptr<const CascadeGrid>& cascadePtr() const { return g_; }
    [[nodiscard]] const BranchedGrid& grid() const { return g_->grid; }
    [[nodiscard]] const std::vector<double>& values() const { return v_; }
    [[nodiscard]] std::vector<double>& values() { return v_; }
    [[nodiscard]] double at(int i, int j) const { return v_[g_->grid.node(i, j)]; }

    /// eps * sum of trapezoid-weighted squares.
    [[nodiscard]] double normL2() const {
        double s = 0.0;
        for (std::size_t n = 0; n < v_.size(); ++n) s += g_->areas[n] * v_[n] * v_[n];
        return std::sqrt(g_->eps * s);
    }
    /// Gradient part (d_x)^2 + eps^-2 (d_eta)^2 with the finite-volume edge weights.
    [[nodiscard]] double seminormH1() const {
        return std::sqrt(g_->eps * g_->grid.energy(v_, 1.0 / (g_->eps * g_->eps)));
    }
    [[nodiscard]] double normH1() const {
        const double a = normL2(), b = seminormH1();
        return std::sqrt(a * a + b * b);
    }
    [[nodiscard]] double maxAbs() const {
        double m = 0.0;
        for (double v : v_) m = std::max(m, std::abs(v));
        return m;
    }

    friend GridFunction2D operator-(const GridFunction2D& a, const GridFunction2D& b) {
        if (a.g_ != b.g_ && a.v_.size() != b.v_.size()) throw Error("grid mismatch");
        GridFunction2D r(a.g_, a.v_);
        for (std::size_t n = 0; n < r.v_.size(); ++n) r.v_[n] -= b.v_[n];
        return r;
    }

private:
    std::shared_ptr<const CascadeGrid> g_;
    std::vector<double> v_;
};

/// Evaluate g(x, eta) at every node of the grid.
template <class F>
GridFunction2D sampleOnGrid(const std::shared_ptr<const CascadeGrid>& cg, F&& g) {
    GridFunction2D u(cg);
    const auto& gr = cg->grid;
    for (int n = 0; n < gr.nodeCount(); ++n) {
        const auto [i, j] = gr.coords(n);
        u.values()[n] = g(gr.s(i), gr.eta(j));
    }
    return u;
}

struct ReferenceOptions {
    LinearSolverKind solver = LinearSolverKind::Direct;
    double tol_lin_solve = 1e-10;
};

/// Five-point finite-volume solve of -u_xx - eps^-2 u_etaeta = f with u = 0 at x = +-1,
/// wall fluxes from phi and natural conditions at x = 0. Volume and wall loads are
/// integrated against the hat functions by Gauss quadrature.
inline GridFunction2D solveReference(const ProblemData& data, const std::shared_ptr<const CascadeGrid>& cg,
                                     const ReferenceOptions& opt = {}) {
    const auto& g = cg->grid;
    const int n = g.nodeCount();
    if (data.isZero()) return GridFunction2D(cg);
    std::vector<double> b(n, 0.0);
    if (!data.f.isZero()) g.addVolumeLoad(b, [&](double x, double eta) { return data.f(x, eta); });
    for (int br = 1; br <= 2; ++br) {
        const Expression& pp = data.phiPlus(br);
        const Expression& pm = data.phiMinus(br);
        if (!pp.isZero()) g.addWallLoad(b, br, true, [&](double x) { return -pp(x); });
        if (!pm.isZero()) g.addWallLoad(b, br, false, [&](double x) { return pm(x); });
    }
    std::vector<char> fixed(n, 0);
    for (int j = g.rowLo(0); j <= g.rowHi(0); ++j) fixed[g.node(0, j)] = 1;
    const int last = g.columns() - 1;
    for (int j = g.rowLo(last); j <= g.rowHi(last); ++j) fixed[g.node(last, j)] = 1;
    const auto A = g.stiffness(1.0 / (cg->eps * cg->eps));
    return {cg, solveWithZeroNodes(A, b, fixed, opt.solver, opt.tol_lin_solve)};
}

/// |a(u, u) - l(u)| in the scaled measure with a quadrature independent of the solver:
/// exact bilinear energy per cell, 2x2 Gauss for f u, two-point Gauss on the walls.
inline double energyResidual(const GridFunction2D& u, const ProblemData& data) {
    const auto& cg = u.cascade();
    const auto& g = cg.grid;
    const double kappa = 1.0 / (cg.eps * cg.eps);
    const double gp[2] = {0.5 - 0.5 / std::sqrt(3.0), 0.5 + 0.5 / std::sqrt(3.0)};
    const bool has_f = !data.f.isZero();
    double a = 0.0, l = 0.0;
    g.forEachCell([&](int i, int j) {
        const double ds = g.s(i + 1) - g.s(i), de = g.eta(j + 1) - g.eta(j);
        const double u00 = u.at(i, j), u10 = u.at(i + 1, j), u01 = u.at(i, j + 1), u11 = u.at(i + 1, j + 1);
        const double d0 = u10 - u00, d1 = u11 - u01, e0 = u01 - u00, e1 = u11 - u10;
        a += de / ds * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0 + kappa * ds / de * (e0 * e0 + e0 * e1 + e1 * e1) / 3.0;
        if (has_f) {
            for (double s : gp)
                for (double t : gp) {
                    const double uv = (1 - s) * (1 - t) * u00 + s * (1 - t) * u10 + (1 - s) * t * u01 + s * t * u11;
                    l += 0.25 * ds * de * data.f(g.s(i) + s * ds, g.eta(j) + t * de) * uv;
                }
        }
    });
    for (int br = 1; br <= 2; ++br) {
        const int ilo = br == 1 ? 0 : g.i0(), ihi = br == 1 ? g.i0() : g.columns() - 1;
        const int jt = br == 1 ? g.rows() - 1 : g.j1(), jb = br == 1 ? 0 : g.j0();
        for (int side = 0; side < 2; ++side) {
            const Expression& phi = side == 0 ? data.phiPlus(br) : data.phiMinus(br);
            if (phi.isZero()) continue;
            const double sign = side == 0 ? -1.0 : 1.0;
            const int j = side == 0 ? jt : jb;
            for (int i = ilo; i < ihi; ++i) {
                const double ds = g.s(i + 1) - g.s(i);
                for (double s : gp) {
                    const double uv = (1 - s) * u.at(i, j) + s * u.at(i + 1, j);
                    l += sign * 0.5 * ds * phi(g.s(i) + s * ds) * uv;
                }
            }
        }
    }
    return cg.eps * std::abs(a - l);
}

/// Piecewise-linear profile over the columns of one branch.
struct Profile1D {
    std::vector<double> x, v;

    [[nodiscard]] double normL2() const {
        double s = 0.0;
        for (std::size_t k = 0; k + 1 < x.size(); ++k) {
            const double h = x[k + 1] - x[k];
            s += h * (v[k] * v[k] + v[k] * v[k + 1] + v[k + 1] * v[k + 1]) / 3.0;
        }
        return std::sqrt(s);
    }
    [[nodiscard]] double normH1() const {
        double s = 0.0;
        for (std::size_t k = 0; k + 1 < x.size(); ++k) {
            const double h = x[k + 1] - x[k], d = v[k + 1] - v[k];
            s += d * d / h;
        }
        const double l2 = normL2();
        return std::sqrt(l2 * l2 + s);
    }
    [[nodiscard]] double maxAbs() const {
        double m = 0.0;
        for (double a : v) m = std::max(m, std::abs(a));
        return m;
    }
};

/// Cross-section average of u over branch i at every column of that branch.
inline Profile1D averageE(const GridFunction2D& u, int branch) {
    const auto& g = u.grid();
    Profile1D p;
    const int ilo = branch == 1 ? 0 : g.i0(), ihi = branch == 1 ? g.i0() : g.columns() - 1;
    const int ja = branch == 1 ? 0 : g.j0(), jb = branch == 1 ? g.rows() - 1 : g.j1();
    for (int i = ilo; i <= ihi; ++i) {
        p.x.push_back(g.s(i));
        p.v.push_back(g.columnMean(u.values(), i, ja, jb));
    }
    return p;
}

}  // namespace cascade
