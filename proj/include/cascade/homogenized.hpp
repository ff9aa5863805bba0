#pragma once

#include "cascade/config.hpp"
#include "cascade/quadrature.hpp"
#include "cascade/xfunction.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace cascade {

/// Scalar function on I1 = [-1, 0] and I2 = [0, 1], each branch the sum of a tabulated
/// part (quintic Hermite through values, first and second derivatives) and an affine
/// part a + b x. The two branches may disagree at x = 0; jump() = f2(0) - f1(0).
class BranchFunction1D {
public:
    struct Table {
        double x0 = 0.0, dx = 0.0;
        std::vector<double> y, yp, ypp;
        [[nodiscard]] bool empty() const { return y.empty(); }
    };

    BranchFunction1D() = default;

    static BranchFunction1D affine(double a1, double b1, double a2, double b2) {
        BranchFunction1D f;
        f.a_ = {a1, a2};
        f.b_ = {b1, b2};
        return f;
    }

    void setTable(int branch, Table t) { tab_[branch - 1] = std::move(t); }
    void setAffine(int branch, double a, double b) {
        a_[branch - 1] = a;
        b_[branch - 1] = b;
    }

    [[nodiscard]] double value(int branch, double x) const { return eval(branch, x, 0); }
    [[nodiscard]] double derivative(int branch, double x) const { return eval(branch, x, 1); }
    [[nodiscard]] double second(int branch, double x) const { return eval(branch, x, 2); }

    /// Value on the branch containing x; x = 0 reads the wide branch.
    [[nodiscard]] double operator()(double x) const { return value(x > 0.0 ? 2 : 1, x); }
    [[nodiscard]] double derivative(double x) const { return derivative(x > 0.0 ? 2 : 1, x); }
    [[nodiscard]] double second(double x) const { return second(x > 0.0 ? 2 : 1, x); }

    [[nodiscard]] double jump() const { return value(2, 0.0) - value(1, 0.0); }
    [[nodiscard]] bool isLinear() const { return tab_[0].empty() && tab_[1].empty(); }
    [[nodiscard]] const Table& table(int branch) const { return tab_[branch - 1]; }

private:
    [[nodiscard]] double eval(int branch, double x, int order) const {
        const int k = branch - 1;
        double r = order == 0 ? a_[k] + b_[k] * x : order == 1 ? b_[k] : 0.0;
        const Table& t = tab_[k];
        if (t.empty()) return r;
        const int n = static_cast<int>(t.y.size()) - 1;
        int j = static_cast<int>(std::floor((x - t.x0) / t.dx));
        j = std::clamp(j, 0, n - 1);
        const double h = t.dx, s = (x - t.x0) / h - j;
        const double y0 = t.y[j], p0 = h * t.yp[j], q0 = h * h * t.ypp[j];
        const double y1 = t.y[j + 1], p1 = h * t.yp[j + 1], q1 = h * h * t.ypp[j + 1];
        const double dY = y1 - (y0 + p0 + 0.5 * q0);
        const double dP = p1 - (p0 + q0);
        const double dQ = q1 - q0;
        const double c3 = 10.0 * dY - 4.0 * dP + 0.5 * dQ;
        const double c4 = -15.0 * dY + 7.0 * dP - dQ;
        const double c5 = 6.0 * dY - 3.0 * dP + 0.5 * dQ;
        if (order == 0) return r + y0 + s * (p0 + s * (0.5 * q0 + s * (c3 + s * (c4 + s * c5))));
        if (order == 1) return r + (p0 + s * (q0 + s * (3.0 * c3 + s * (4.0 * c4 + s * 5.0 * c5)))) / h;
        return r + (q0 + s * (6.0 * c3 + s * (12.0 * c4 + s * 20.0 * c5))) / (h * h);
    }

    std::array<Table, 2> tab_;
    std::array<double, 2> a_{0.0, 0.0}, b_{0.0, 0.0};
};

/// Cross-section balance of the data on branch i:
/// integral of f over the cross-section minus phi_plus plus phi_minus.
inline XFunction effectiveRhs(const ProblemData& data, const CascadeGeometry& geom, int branch, double tol = 1e-12) {
    const double h = geom.thickness(branch);
    XFunction F(tol);
    if (!data.f.dependsOn(Var::Eta)) {
        F.add(h, data.f);
    } else {
        F.addMoment(1.0, Polynomial::constant(1.0), data.f, -0.5 * h, 0.5 * h);
    }
    F.add(-1.0, data.phiPlus(branch));
    F.add(1.0, data.phiMinus(branch));
    return F;
}

namespace detail {

/// Particular solution P of -h P'' = F on [x0, x0 + 1] with P(x0) = P'(x0) = 0, tabulated
/// on `cells` uniform cells. Cell integrals are exact up to the quadrature tolerance,
/// so P, P' carry no truncation error at the nodes.
template <class F>
BranchFunction1D::Table particularTable(const F& rhs, double h, double x0, int cells, double tol) {
    BranchFunction1D::Table t;
    t.x0 = x0;
    t.dx = 1.0 / cells;
    t.y.assign(cells + 1, 0.0);
    t.yp.assign(cells + 1, 0.0);
    t.ypp.assign(cells + 1, 0.0);
    const double ctol = std::max(tol / cells, 1e-16);
    for (int j = 0; j <= cells; ++j) t.ypp[j] = -rhs(x0 + j * t.dx) / h;
    for (int j = 0; j < cells; ++j) {
        const double a = x0 + j * t.dx, b = x0 + (j + 1) * t.dx;
        const double i0 = integrate([&](double s) { return rhs(s); }, a, b, ctol).value;
        const double i1 = integrate([&](double s) { return (b - s) * rhs(s); }, a, b, ctol).value;
        t.yp[j + 1] = t.yp[j] - i0 / h;
        t.y[j + 1] = t.y[j] + t.dx * t.yp[j] - i1 / h;
    }
    return t;
}

}  // namespace detail

/// Solve -h_i w'' = F_i on I_i with w(-1) = w(1) = 0, continuity at 0 and
/// h1 w'(0-) = h2 w'(0+). `cells_per_unit` sets the tabulation density.
template <class F1, class F2>
BranchFunction1D solveMain(const F1& rhs1, const F2& rhs2, const CascadeGeometry& geom, int cells_per_unit,
                           double tol = 1e-12) {
    const double h1 = geom.h1(), h2 = geom.h2();
    auto t1 = detail::particularTable(rhs1, h1, -1.0, cells_per_unit, tol);
    auto t2 = detail::particularTable(rhs2, h2, 0.0, cells_per_unit, tol);
    const double P1 = t1.y.back(), dP1 = t1.yp.back();
    const double P2 = t2.y.back(), dP2 = t2.yp.front();
    // Unknowns a1, b1, a2, b2 of the affine parts.
    Eigen::Matrix4d M;
    Eigen::Vector4d r;
    M << 1, -1, 0, 0,  // w1(-1) = 0
        0, 0, 1, 1,    // w2(1) = 0
        1, 0, -1, 0,   // w1(0) = w2(0)
        0, h1, 0, -h2;  // h1 w1'(0) = h2 w2'(0)
    r << 0.0, -P2, -P1, h2 * dP2 - h1 * dP1;
    Eigen::FullPivLU<Eigen::Matrix4d> lu(M);
    if (!lu.isInvertible()) throw SolverError("homogenized transmission system is singular");
    const Eigen::Vector4d c = lu.solve(r);
    BranchFunction1D w;
    w.setTable(1, std::move(t1));
    w.setTable(2, std::move(t2));
    w.setAffine(1, c[0], c[1]);
    w.setAffine(2, c[2], c[3]);
    return w;
}

/// Overload taking the symbolic balances; exactly zero data gives the exact zero function.
inline BranchFunction1D solveMain(const XFunction& F1, const XFunction& F2, const CascadeGeometry& geom,
                                  int cells_per_unit, double tol = 1e-12) {
    if (F1.isZero() && F2.isZero()) return {};
    return solveMain<XFunction, XFunction>(F1, F2, geom, cells_per_unit, tol);
}

/// Linear branch functions with jump d at x = 0, flux balance and Dirichlet ends.
inline BranchFunction1D solveLinearBranch(int k, double d_prev, const CascadeGeometry& geom) {
    if (k < 3) throw Error("linear branches start at order 3");
    const double h1 = geom.h1(), h2 = geom.h2(), s = d_prev / (h1 + h2);
    // w1 = -h2 s (x + 1), w2 = h1 s (1 - x)
    return BranchFunction1D::affine(-h2 * s, -h2 * s, h1 * s, -h1 * s);
}

}  // namespace cascade
