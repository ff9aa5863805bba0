#pragma once

#include "cascade/config.hpp"
#include "cascade/correctors.hpp"
#include "cascade/cutoff.hpp"
#include "cascade/error.hpp"
#include "cascade/grid.hpp"
#include "cascade/homogenized.hpp"
#include "cascade/linear_solver.hpp"
#include "cascade/quadrature.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <vector>

namespace cascade {

/// Truncated junction strip (-R, 0) x Y1 united with (0, R) x Y2 in (xi, eta), on the
/// uniform xi lattice k / cells_per_unit and the shared eta lattice.
class StripDomain {
public:
    StripDomain(double h1, double h2, double R, int cells_per_unit)
        : h1_(h1), h2_(h2), cpu_(cells_per_unit) {
        if (!(h1 > 0.0) || !(h2 > 0.0) || h2 > h1) throw ConfigError("strip requires 0 < h2 <= h1");
        const int K = static_cast<int>(std::lround(R * cells_per_unit));
        if (K < 3 * cells_per_unit) throw ConfigError("strip half-length must exceed 3");
        std::vector<double> xi(2 * K + 1);
        for (int k = -K; k <= K; ++k) xi[k + K] = static_cast<double>(k) / cells_per_unit;
        xi[K] = 0.0;
        R_ = static_cast<double>(K) / cells_per_unit;
        grid_ = BranchedGrid(std::move(xi), EtaLattice::make(h1, h2, cells_per_unit));
        areas_ = grid_.dualAreas();
    }

    [[nodiscard]] double h1() const { return h1_; }
    [[nodiscard]] double h2() const { return h2_; }
    [[nodiscard]] double R() const { return R_; }
    [[nodiscard]] int cellsPerUnit() const { return cpu_; }
    [[nodiscard]] const BranchedGrid& grid() const { return grid_; }
    [[nodiscard]] const std::vector<double>& areas() const { return areas_; }
    [[nodiscard]] int nodeCount() const { return grid_.nodeCount(); }

    /// Solve the pure Neumann system for a compatible load; node 0 is pinned to zero.
    [[nodiscard]] std::vector<double> solveNeumann(const std::vector<double>& b, LinearSolverKind kind,
                                                   double tol) const {
        const int n = nodeCount();
        bool zero = true;
        for (double v : b) zero = zero && v == 0.0;
        if (zero) return std::vector<double>(n, 0.0);
        Eigen::VectorXd br(n - 1);
        for (int i = 1; i < n; ++i) br[i - 1] = b[i];
        Eigen::VectorXd x;
        if (kind == LinearSolverKind::Direct) {
            std::call_once(factor_once_, [&] {
                factor_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(pinned());
                if (factor_->info() != Eigen::Success) throw SolverError("strip factorization failed");
            });
            if (!factor_ || factor_->info() != Eigen::Success) throw SolverError("strip factorization failed");
            x = factor_->solve(br);
        } else {
            x = solveSpd(pinned(), br, kind, tol);
        }
        std::vector<double> u(n, 0.0);
        for (int i = 1; i < n; ++i) u[i] = x[i - 1];
        return u;
    }

    /// Average of column means over the columns with xi in [a, b].
    [[nodiscard]] double slabMean(const std::vector<double>& u, double a, double b) const {
        double s = 0.0;
        int c = 0;
        for (int i = 0; i < grid_.columns(); ++i) {
            const double xi = grid_.s(i);
            if (xi >= a - 1e-12 && xi <= b + 1e-12) {
                s += grid_.columnMean(u, i);
                ++c;
            }
        }
        return c ? s / c : 0.0;
    }

private:
    [[nodiscard]] Eigen::SparseMatrix<double> pinned() const {
        const Eigen::SparseMatrix<double> A = grid_.stiffness(1.0);
        return A.bottomRightCorner(A.rows() - 1, A.cols() - 1);
    }

    double h1_, h2_, R_ = 0.0;
    int cpu_;
    BranchedGrid grid_;
    std::vector<double> areas_;
    mutable std::once_flag factor_once_;
    mutable std::unique_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> factor_;
};

/// Data of a strip problem. Empty callables stand for zero data. B is the outward normal
/// derivative on the horizontal walls, G the xi-derivative on the vertical wall at xi = 0,
/// Psi the value jump N(0+) - N(0-) and Phi the derivative jump across Y2.
struct StripProblem {
    std::function<double(double, double)> F;
    std::function<double(double)> Bplus1, Bminus1, Bplus2, Bminus2;
    std::function<double(double)> G;
    std::function<double(double)> Psi;
    std::function<double(double)> Phi;

    /// Weight (1 + |xi|)^-1 of the weighted energy space.
    static double rho(double xi) { return 1.0 / (1.0 + std::abs(xi)); }
};

/// Solution of a strip problem: N on xi < 0, N - d+ on xi > 0.
class JunctionLayer {
public:
    JunctionLayer() = default;
    JunctionLayer(std::shared_ptr<const StripDomain> dom, std::vector<double> values, std::vector<double> right_limit,
                  double d_plus)
        : dom_(std::move(dom)), v_(std::move(values)), right_(std::move(right_limit)), d_(d_plus) {
        for (double v : v_) max_ = std::max(max_, std::abs(v));
        for (double v : right_) max_ = std::max(max_, std::abs(v));
        const auto& g = dom_->grid();
        auto colMax = [&](int i, bool right) {
            double m = 0.0;
            for (int j = g.rowLo(i); j <= g.rowHi(i); ++j) m = std::max(m, std::abs(nodal(i, j, right)));
            return m;
        };
        amp0_ = std::max(colMax(g.i0(), false), colMax(g.i0(), true));
        const int far = static_cast<int>(std::lround((dom_->R() - 1.0) * dom_->cellsPerUnit()));
        ampLeft_ = colMax(g.i0() - far, false);
        ampRight_ = colMax(g.i0() + far, true);
    }

    [[nodiscard]] double dPlus() const { return d_; }
    [[nodiscard]] const std::vector<double>& values() const { return v_; }
    [[nodiscard]] const std::vector<double>& rightLimit() const { return right_; }
    [[nodiscard]] const StripDomain& domain() const { return *dom_; }
    [[nodiscard]] bool empty() const { return !dom_; }
    [[nodiscard]] double amplitudeAtJunction() const { return amp0_; }
    [[nodiscard]] double amplitudeFarLeft() const { return ampLeft_; }
    [[nodiscard]] double amplitudeFarRight() const { return ampRight_; }

    [[nodiscard]] double maxAbs() const { return max_; }

    /// Nodal value; at the junction column `right` selects the limit from xi > 0.
    [[nodiscard]] double nodal(int i, int j, bool right = false) const {
        const auto& g = dom_->grid();
        if (right && i == g.i0()) return right_[j];
        return v_[g.node(i, j)];
    }

    /// Bilinear interpolation; xi <= 0 reads the wide side. Outside [-R, R] the boundary
    /// column is continued as a constant. d_xi = 1 returns the cell-wise xi-derivative.
    [[nodiscard]] double eval(double xi, double eta, int d_xi = 0) const {
        if (!dom_) return 0.0;
        const auto& g = dom_->grid();
        const int branch = xi <= 0.0 ? 1 : 2;
        const double R = dom_->R();
        const bool outside = xi < -R || xi > R;
        xi = std::clamp(xi, -R, R);
        int i = g.locateColumn(xi);
        if (branch == 1) i = std::min(i, g.i0() - 1);
        else i = std::max(i, g.i0());
        int j = g.locateRow(eta);
        j = std::clamp(j, g.cellRowLo(i), g.cellRowHi(i) - 1);
        const double s0 = g.s(i), s1 = g.s(i + 1), e0 = g.eta(j), e1 = g.eta(j + 1);
        const double t = (xi - s0) / (s1 - s0), u = std::clamp((eta - e0) / (e1 - e0), 0.0, 1.0);
        const bool r = branch == 2;
        const double a = nodal(i, j, r), b = nodal(i + 1, j, r), c = nodal(i, j + 1, r), d = nodal(i + 1, j + 1, r);
        if (d_xi == 1) {
            if (outside) return 0.0;
            return ((1 - u) * (b - a) + u * (d - c)) / (s1 - s0);
        }
        return (1 - t) * (1 - u) * a + t * (1 - u) * b + (1 - t) * u * c + t * u * d;
    }

    /// Exactly zero field (no nonzero nodal value).
    [[nodiscard]] bool isZero() const { return maxAbs() == 0.0 && d_ == 0.0; }

private:
    std::shared_ptr<const StripDomain> dom_;
    std::vector<double> v_;
    std::vector<double> right_;
    double d_ = 0.0;
    double amp0_ = 0.0, ampLeft_ = 0.0, ampRight_ = 0.0, max_ = 0.0;
};

namespace detail {

inline double integrateOr0(const std::function<double(double)>& f, double a, double b, double tol) {
    if (!f || a >= b) return 0.0;
    return integrate(f, a, b, tol).value;
}

struct StripLoads {
    std::vector<double> b;     // physical load vector
    std::vector<double> lift;  // chi(xi) Psi(eta) on the nodes of the narrow side
    std::vector<double> psi;   // Psi at lattice rows (zero outside j0..j1)
    bool has_psi = false;
};

inline StripLoads assembleStripLoads(const StripProblem& p, const StripDomain& dom, double lift_delta) {
    const auto& g = dom.grid();
    StripLoads L;
    L.b.assign(dom.nodeCount(), 0.0);
    if (p.F) {
        const auto& area = dom.areas();
        for (int n = 0; n < dom.nodeCount(); ++n) {
            const auto [i, j] = g.coords(n);
            L.b[n] += area[n] * p.F(g.s(i), g.eta(j));
        }
    }
    if (p.Bplus1) g.addWallLoad(L.b, 1, true, p.Bplus1);
    if (p.Bminus1) g.addWallLoad(L.b, 1, false, p.Bminus1);
    if (p.Bplus2) g.addWallLoad(L.b, 2, true, p.Bplus2);
    if (p.Bminus2) g.addWallLoad(L.b, 2, false, p.Bminus2);
    if (p.G) g.addVerticalWallLoad(L.b, p.G);
    if (p.Phi) g.addColumnLoad(L.b, g.i0(), g.j0(), g.j1(), [&](double e) { return -p.Phi(e); });
    L.psi.assign(g.rows(), 0.0);
    if (p.Psi) {
        for (int j = g.j0(); j <= g.j1(); ++j) {
            L.psi[j] = p.Psi(g.eta(j));
            L.has_psi = L.has_psi || L.psi[j] != 0.0;
        }
    }
    L.lift.assign(dom.nodeCount(), 0.0);
    if (L.has_psi) {
        const Cutoff chi(0.0, lift_delta);
        for (int i = g.i0(); i < g.columns(); ++i) {
            const double c = chi(g.s(i));
            if (c == 0.0) continue;
            for (int j = g.j0(); j <= g.j1(); ++j) L.lift[g.node(i, j)] = c * L.psi[j];
        }
    }
    return L;
}

inline std::vector<double> liftingLoad(const StripDomain& dom, const std::vector<double>& lift) {
    const Eigen::SparseMatrix<double> A2 = dom.grid().stiffness(1.0, +1);
    const Eigen::Map<const Eigen::VectorXd> l(lift.data(), static_cast<Eigen::Index>(lift.size()));
    const Eigen::VectorXd r = A2 * l;
    return {r.data(), r.data() + r.size()};
}

}  // namespace detail

/// Balance of the data: integral of Phi minus the integrals of F, B and G. The strip
/// problem admits a bounded solution only when this vanishes.
inline double checkSolvability(const StripProblem& p, const StripDomain& dom, double tol = 1e-12) {
    const double a1 = 0.5 * dom.h1(), a2 = 0.5 * dom.h2(), R = dom.R();
    double r = detail::integrateOr0(p.Phi, -a2, a2, tol);
    if (p.F) {
        auto inner = [&](double xi, double a) {
            return integrate([&](double e) { return p.F(xi, e); }, -a, a, tol).value;
        };
        r -= integrate([&](double xi) { return inner(xi, a1); }, -R, 0.0, tol).value;
        r -= integrate([&](double xi) { return inner(xi, a2); }, 0.0, R, tol).value;
    }
    r -= detail::integrateOr0(p.Bplus1, -R, 0.0, tol) + detail::integrateOr0(p.Bminus1, -R, 0.0, tol);
    r -= detail::integrateOr0(p.Bplus2, 0.0, R, tol) + detail::integrateOr0(p.Bminus2, 0.0, R, tol);
    r -= detail::integrateOr0(p.G, -a1, -a2, tol) + detail::integrateOr0(p.G, a2, a1, tol);
    return r;
}

struct Z0Result {
    std::vector<double> values;
    double ch1 = 0.0, ch2 = 0.0;            ///< eta-means over Y1, Y2 at xi = 0
    double slope_left = 0.0, slope_right = 0.0;
    double intercept_left = 0.0, intercept_right = 0.0;
    double max_asymmetry = 0.0;              ///< max |Z0(xi, eta) - Z0(xi, -eta)|
};

namespace detail {

/// Least-squares line through the column means over xi in [a, b].
inline std::pair<double, double> fitColumnLine(const StripDomain& dom, const std::vector<double>& u, double a, double b) {
    const auto& g = dom.grid();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int i = 0; i < g.columns(); ++i) {
        const double xi = g.s(i);
        if (xi < a - 1e-12 || xi > b + 1e-12) continue;
        const double y = g.columnMean(u, i);
        sx += xi;
        sy += y;
        sxx += xi * xi;
        sxy += xi * y;
        ++n;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {slope, (sy - slope * sx) / n};
}

}  // namespace detail

/// Linearly growing solution of the homogeneous strip problem: Neumann data 1/h1 at
/// xi = -R and 1/h2 at xi = +R. The additive constant is fixed by a zero intercept of the
/// left far-field line; ch1 and ch2 are reported, only ch2 - ch1 is invariant.
inline Z0Result solveZ0(const StripDomain& dom, LinearSolverKind kind = LinearSolverKind::Direct, double tol = 1e-10) {
    const auto& g = dom.grid();
    std::vector<double> b(dom.nodeCount(), 0.0);
    const int last = g.columns() - 1;
    g.addColumnLoad(b, 0, 0, g.rows() - 1, [&](double) { return -1.0 / dom.h1(); });
    g.addColumnLoad(b, last, g.j0(), g.j1(), [&](double) { return 1.0 / dom.h2(); });
    double sum = 0.0;
    for (double v : b) sum += v;
    for (double& v : b) v -= sum / static_cast<double>(b.size());
    Z0Result z;
    z.values = dom.solveNeumann(b, kind, tol);
    const double R = dom.R();
    const double c = detail::fitColumnLine(dom, z.values, -R + 1.0, -R + 4.0).second;
    for (double& v : z.values) v -= c;
    z.ch1 = g.columnMean(z.values, g.i0());
    z.ch2 = g.columnMean(z.values, g.i0(), g.j0(), g.j1());
    std::tie(z.slope_left, z.intercept_left) = detail::fitColumnLine(dom, z.values, -R + 1.0, -R + 4.0);
    std::tie(z.slope_right, z.intercept_right) = detail::fitColumnLine(dom, z.values, R - 4.0, R - 1.0);
    const int J = g.rows() - 1;
    for (int n = 0; n < dom.nodeCount(); ++n) {
        const auto [i, j] = g.coords(n);
        z.max_asymmetry = std::max(z.max_asymmetry, std::abs(z.values[n] - z.values[g.node(i, J - j)]));
    }
    return z;
}

struct StripOptions {
    LinearSolverKind solver = LinearSolverKind::Direct;
    double tol_lin_solve = 1e-10;
    double lift_delta = 1.0;
    double solvability_tol = 1e-9;
};

/// Solve a strip problem. The value jump is lifted by chi(xi) Psi(eta) on the narrow
/// side, the continuous remainder is solved with the derivative jump as an interface
/// load, the constant is fixed by a zero mean on the slab xi in [-R+1, -R+2], and the
/// plateau d+ is the mean over xi in [R-2, R-1].
inline JunctionLayer solveStrip(const StripProblem& p, std::shared_ptr<const StripDomain> dom,
                                const StripOptions& opt = {}) {
    const double res = checkSolvability(p, *dom);
    if (std::abs(res) > opt.solvability_tol) throw SolvabilityError("strip data violate the solvability condition", res);
    const auto& g = dom->grid();
    auto loads = detail::assembleStripLoads(p, *dom, opt.lift_delta);
    std::vector<double> b = loads.b;
    if (loads.has_psi) {
        const auto l = detail::liftingLoad(*dom, loads.lift);
        for (std::size_t n = 0; n < b.size(); ++n) b[n] -= l[n];
    }
    // Quadrature leaves a small discrete imbalance; return it through the interface.
    double sum = 0.0;
    for (double v : b) sum += v;
    if (sum != 0.0) {
        const double len = dom->h2();
        g.addColumnLoad(b, g.i0(), g.j0(), g.j1(), [&](double) { return -sum / len; });
    }
    std::vector<double> w = dom->solveNeumann(b, opt.solver, opt.tol_lin_solve);
    const double R = dom->R();
    const double shift = dom->slabMean(w, -R + 1.0, -R + 2.0);
    if (shift != 0.0)
        for (double& v : w) v -= shift;
    // N = W + lifting on the narrow side.
    std::vector<double> right(g.rows(), 0.0);
    for (int j = g.j0(); j <= g.j1(); ++j) right[j] = w[g.node(g.i0(), j)] + loads.psi[j];
    std::vector<double> N = w;
    for (int n = 0; n < dom->nodeCount(); ++n) {
        if (g.coords(n).first > g.i0()) N[n] += loads.lift[n];
    }
    double d = dom->slabMean(N, R - 2.0, R - 1.0);
    if (std::abs(d) < 1e-300) d = 0.0;
    for (int n = 0; n < dom->nodeCount(); ++n)
        if (g.coords(n).first > g.i0()) N[n] -= d;
    for (int j = g.j0(); j <= g.j1(); ++j) right[j] -= d;
    return {std::move(dom), std::move(N), std::move(right), d};
}

/// Green-formula value of the plateau constant: the data paired with Z0, plus the
/// pairing of the lifted jump with the flux of Z0 across the interface.
inline double computeD0(const StripProblem& p, const StripDomain& dom, const Z0Result& z0, double lift_delta = 1.0) {
    const auto loads = detail::assembleStripLoads(p, dom, lift_delta);
    double d = 0.0;
    for (int n = 0; n < dom.nodeCount(); ++n) d += z0.values[n] * loads.b[n];
    if (loads.has_psi) {
        const auto l = detail::liftingLoad(dom, loads.lift);
        for (int n = 0; n < dom.nodeCount(); ++n) d -= z0.values[n] * l[n];
    }
    return d;
}

/// Upstream data feeding the junction problem of order k.
struct JunctionInputs {
    const BranchFunction1D* omega2 = nullptr;  ///< k = 1
    const CorrectorField* u1 = nullptr;        ///< u_{2n-2} on the wide branch (k >= 2)
    const CorrectorField* u2 = nullptr;        ///< u_{2n-2} on the narrow branch (k >= 2)
    double d_prev = 0.0;                       ///< d+_{k-1}
};

/// Data of the junction problem of order k (zero volume and wall sources).
inline StripProblem junctionProblem(int k, const JunctionInputs& in, double h1, double h2) {
    StripProblem p;
    const double s = in.d_prev / (h1 + h2);
    if (k == 1) {
        if (!in.omega2) throw Error("order-1 junction problem needs omega2");
        const double w1 = in.omega2->derivative(1, 0.0), w2 = in.omega2->derivative(2, 0.0);
        if (w1 != 0.0) p.G = [w1](double) { return -w1; };
        if (w1 - w2 != 0.0) p.Phi = [w1, w2](double) { return w1 - w2; };
        return p;
    }
    if (!in.u1 || !in.u2) throw Error("junction problem needs the previous correctors");
    const CorrectorField& u1 = *in.u1;
    const CorrectorField& u2 = *in.u2;
    if (k % 2 == 0) {
        if (s != 0.0) {
            p.G = [g = h2 * s](double) { return g; };
            p.Phi = [f = s * (h1 - h2)](double) { return f; };
        }
        if (!u1.isZero() || !u2.isZero()) p.Psi = [&u1, &u2](double e) { return u1(0.0, e) - u2(0.0, e); };
        return p;
    }
    auto dx1 = std::make_shared<CorrectorField>(u1.dx());
    auto dx2 = std::make_shared<CorrectorField>(u2.dx());
    const double g0 = h2 * s, f0 = s * (h1 - h2);
    if (!dx1->isZero() || g0 != 0.0) p.G = [dx1, g0](double e) { return -(*dx1)(0.0, e) + g0; };
    if (!dx1->isZero() || !dx2->isZero() || f0 != 0.0)
        p.Phi = [dx1, dx2, f0](double e) { return (*dx1)(0.0, e) - (*dx2)(0.0, e) + f0; };
    return p;
}

/// Assemble and solve the junction problem of order k.
inline JunctionLayer buildNk(int k, const JunctionInputs& in, std::shared_ptr<const StripDomain> dom,
                             const StripOptions& opt = {}) {
    if (k < 1) throw Error("junction orders start at 1");
    const StripProblem p = junctionProblem(k, in, dom->h1(), dom->h2());
    return solveStrip(p, std::move(dom), opt);
}

}  // namespace cascade
