#pragma once

#include "cascade/config.hpp"
#include "cascade/correctors.hpp"
#include "cascade/error.hpp"
#include "cascade/homogenized.hpp"
#include "cascade/quadrature.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace cascade {

enum class Side { Left, Right };

/// Separable layer on the half strip (0, inf) x (-h/2, h/2) with Neumann walls:
///
///   sum_{p>=1} a_p e^{-2 p pi xi / h} cos(2 p pi eta / h)
///     + sum_{p>=0} b_p e^{-(2p+1) pi xi / h} sin((2p+1) pi eta / h)
struct FourierLayer {
    Side side = Side::Left;
    double h = 1.0;
    std::vector<double> a;  ///< a[0] is unused and kept at zero
    std::vector<double> b;
    double a0 = 0.0;        ///< mean of the trace, diagnostic only

    [[nodiscard]] int modes() const { return static_cast<int>(b.size()) - 1; }
    [[nodiscard]] bool isZero() const {
        for (std::size_t p = 1; p < a.size(); ++p)
            if (a[p] != 0.0) return false;
        for (double v : b)
            if (v != 0.0) return false;
        return true;
    }

    /// Derivative orders (nx, ne) in xi and eta; both at most 2.
    [[nodiscard]] double eval(double xi, double eta, int nx = 0, int ne = 0) const {
        constexpr double kMaxExponent = 700.0;
        const double pi = std::numbers::pi;
        double r = 0.0;
        auto mode = [&](double coef, double k, bool cosine) {
            if (coef == 0.0) return;
            const double ex = k * xi;
            if (ex > kMaxExponent) return;
            double v = coef * std::exp(-ex) * std::pow(-k, nx);
            const double arg = k * eta;
            double t;
            switch (ne) {
                case 0: t = cosine ? std::cos(arg) : std::sin(arg); break;
                case 1: t = cosine ? -k * std::sin(arg) : k * std::cos(arg); break;
                default: t = cosine ? -k * k * std::cos(arg) : -k * k * std::sin(arg); break;
            }
            r += v * t;
        };
        for (std::size_t p = 1; p < a.size(); ++p) mode(a[p], 2.0 * p * pi / h, true);
        for (std::size_t p = 0; p < b.size(); ++p) mode(b[p], (2.0 * p + 1.0) * pi / h, false);
        return r;
    }
};

/// Cosine/sine projection coefficients of a trace on (-h/2, h/2), by composite
/// Gauss-Legendre with a cross-check against a second rule.
inline FourierLayer fourierCoeffs(const std::function<double(double)>& trace, double h, int P, double tol = 1e-12) {
    if (P < 1) throw ConfigError("at least one Fourier mode is required");
    const double pi = std::numbers::pi;
    auto project = [&](int panels, int order) {
        const auto [gx, gw] = gaussLegendre(order);
        std::vector<double> a(P + 1, 0.0), b(P + 1, 0.0);
        double mean = 0.0, scale = 0.0;
        const double w = h / panels;
        for (int k = 0; k < panels; ++k) {
            const double c = -0.5 * h + (k + 0.5) * w;
            for (int q = 0; q < order; ++q) {
                const double eta = c + 0.5 * w * gx[q], wt = 0.5 * w * gw[q];
                const double v = trace(eta);
                scale = std::max(scale, std::abs(v));
                mean += wt * v;
                for (int p = 0; p <= P; ++p) {
                    if (p > 0) a[p] += wt * v * std::cos(2.0 * p * pi * eta / h);
                    b[p] += wt * v * std::sin((2.0 * p + 1.0) * pi * eta / h);
                }
            }
        }
        for (auto& v : a) v *= 2.0 / h;
        for (auto& v : b) v *= 2.0 / h;
        return std::make_tuple(a, b, mean / h, scale);
    };
    const int panels = std::max(64, 4 * P);
    auto [a, b, a0, scale] = project(panels, 10);
    auto [a2, b2, a02, scale2] = project(panels / 2 + 1, 12);
    double diff = std::abs(a0 - a02);
    for (int p = 0; p <= P; ++p) diff = std::max({diff, std::abs(a[p] - a2[p]), std::abs(b[p] - b2[p])});
    if (diff > 1e3 * tol * std::max(1.0, scale)) {
        throw QuadratureError("Fourier projection did not converge", a0, diff);
    }
    (void)scale2;
    FourierLayer L;
    L.h = h;
    L.a = std::move(a);
    L.a[0] = 0.0;
    L.b = std::move(b);
    L.a0 = a0;
    return L;
}

/// End layer of order k: trace -u_k(-+1, eta) - omega_{k+2}(-+1) on the left/right end.
inline FourierLayer buildPi(int k, const CorrectorField& uK, const BranchFunction1D& omegaKp2, Side side,
                            const CascadeGeometry& geom, int P, double tol = 1e-12) {
    if (k % 2 != 0 || k < 2) throw Error("end layers exist for even orders only");
    const int branch = side == Side::Left ? 1 : 2;
    if (uK.branch() != branch) throw Error("corrector branch does not match the layer side");
    const double x = side == Side::Left ? -1.0 : 1.0, h = geom.thickness(branch);
    const double w = omegaKp2.value(branch, x);
    FourierLayer L;
    if (uK.isZero() && w == 0.0) {
        L.a.assign(P + 1, 0.0);
        L.b.assign(P + 1, 0.0);
        L.h = h;
    } else {
        L = fourierCoeffs([&](double eta) { return -uK(x, eta) - w; }, h, P, tol);
    }
    L.side = side;
    if (std::abs(L.a0) >= 10.0 * tol) {
        throw Error("homogenized boundary condition violated: trace mean " + std::to_string(L.a0));
    }
    return L;
}

}  // namespace cascade
