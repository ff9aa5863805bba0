#pragma once

#include "cascade/error.hpp"
#include "cascade/expr.hpp"

#include <array>
#include <cfloat>
#include <cmath>
#include <cstddef>
#include <queue>
#include <utility>
#include <vector>

namespace cascade {

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    std::size_t evaluations = 0;
};

namespace detail {

// Gauss-Kronrod 7/15 abscissae on [-1, 1] (non-negative half) and weights.
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(F& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    const double fc = f(c);
    double rk = fc * kWgk[7];
    double rg = fc * kWg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = h * kXgk[j];
        const double s = f(c - dx) + f(c + dx);
        rk += kWgk[j] * s;
        if (j % 2 == 1) rg += kWg[j / 2] * s;
    }
    return {a, b, rk * h, std::abs((rk - rg) * h)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod 7/15 quadrature with interval bisection.
///
/// Stops once the summed error estimate drops below `tol` (absolute). The
/// target is floored at a few ulps of the integral so that tolerances below
/// round-off do not spin until the budget is gone.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, double tol, std::size_t max_evals = 1'000'000) {
    if (a == b) return {};
    if (b < a) {
        auto r = integrate(f, b, a, tol, max_evals);
        r.value = -r.value;
        return r;
    }
    std::priority_queue<detail::Panel> heap;
    auto first = detail::gk15(f, a, b);
    std::size_t evals = 15;
    double total = first.value, err = first.error;
    heap.push(first);
    auto target = [&] { return std::max(tol, 64.0 * DBL_EPSILON * std::abs(total)); };
    while (err > target()) {
        if (evals + 30 > max_evals) {
            throw QuadratureError("quadrature did not converge within node budget", total, err);
        }
        const auto worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) break;  // interval at machine resolution
        heap.pop();
        const auto left = detail::gk15(f, worst.a, mid);
        const auto right = detail::gk15(f, mid, worst.b);
        evals += 30;
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum from the panels to drop the cancellation accumulated in the running totals.
    total = 0.0;
    err = 0.0;
    while (!heap.empty()) {
        total += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    return {total, err, evals};
}

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton on the three-term recurrence).
inline std::pair<std::vector<double>, std::vector<double>> gaussLegendre(int n) {
    std::vector<double> x(n), w(n);
    for (int i = 0; i < n; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5)), dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int k = 1; k <= n; ++k) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return {x, w};
}

/// Integrate an expression in one variable with the other held at `fixed`.
inline double integrate1d(const Expression& e, Var var, double a, double b, double tol, double fixed = 0.0) {
    if (e.isConstant()) return e.constantValue() * (b - a);
    if (var == Var::X) return integrate([&](double t) { return e(t, fixed); }, a, b, tol).value;
    return integrate([&](double t) { return e(fixed, t); }, a, b, tol).value;
}

}  // namespace cascade
