#pragma once

#include "cascade/boundary_layers.hpp"
#include "cascade/config.hpp"
#include "cascade/correctors.hpp"
#include "cascade/cutoff.hpp"
#include "cascade/homogenized.hpp"
#include "cascade/junction.hpp"
#include "cascade/reference.hpp"

#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <vector>

namespace cascade {

/// Every coefficient of the expansion up to order m, built once per data set in the
/// interleaved order: omega2, u2, N1, omega3, N2, omega4, Pi2, then u4, N3, omega5, ...
struct Components {
    CascadeGeometry geom{1.0, 0.5};
    ProblemData data;
    Discretization disc;
    int m = 1;
    std::array<XFunction, 2> F;                     ///< cross-section balances per branch
    std::map<int, BranchFunction1D> omega;          ///< omega_k, k = 2 .. 2m + 2
    std::map<int, std::array<CorrectorField, 2>> u;  ///< u_k per branch, k = 2, 4, .., 2m
    std::map<int, JunctionLayer> N;                 ///< N_k, k = 1 .. 2m
    std::map<int, double> d_plus;                   ///< d+_k
    std::map<int, std::array<FourierLayer, 2>> pi;  ///< end layers (left, right), k = 2, .., 2m
    std::shared_ptr<const StripDomain> strip;

    [[nodiscard]] const CorrectorField& corrector(int k, int branch) const { return u.at(k)[branch - 1]; }
    [[nodiscard]] const FourierLayer& layer(int k, Side side) const { return pi.at(k)[side == Side::Left ? 0 : 1]; }
};

inline StripOptions stripOptions(const Discretization& d) {
    StripOptions o;
    o.solver = d.solver;
    o.tol_lin_solve = d.tol_lin_solve;
    o.lift_delta = d.lift_delta;
    return o;
}

inline Components buildComponents(const ProblemData& data, const CascadeGeometry& geom, const Discretization& disc,
                                  int m, std::shared_ptr<const StripDomain> strip = nullptr) {
    if (m < 1 || m > 3) throw ConfigError("expansion order m must be 1, 2 or 3");
    Components c;
    c.geom = geom;
    c.data = data;
    c.disc = disc;
    c.m = m;
    const double tol = disc.tol_quad;
    c.strip = strip ? std::move(strip) : std::make_shared<StripDomain>(geom.h1(), geom.h2(), disc.R, disc.neta);
    const StripOptions sopt = stripOptions(disc);

    c.F[0] = effectiveRhs(data, geom, 1, tol);
    c.F[1] = effectiveRhs(data, geom, 2, tol);
    c.omega[2] = solveMain(c.F[0], c.F[1], geom, 4 * disc.nx, tol);
    c.u.emplace(2, std::array<CorrectorField, 2>{correctorU2(data, geom, 1, tol), correctorU2(data, geom, 2, tol)});

    auto junction = [&](int k) {
        JunctionInputs in;
        in.omega2 = &c.omega.at(2);
        if (k >= 2) {
            const int uk = k % 2 == 0 ? k : k - 1;
            in.u1 = &c.corrector(uk, 1);
            in.u2 = &c.corrector(uk, 2);
            in.d_prev = c.d_plus.at(k - 1);
        }
        c.N[k] = buildNk(k, in, c.strip, sopt);
        c.d_plus[k] = c.N[k].dPlus();
        c.omega[k + 2] = solveLinearBranch(k + 2, c.d_plus[k], geom);
    };
    auto layers = [&](int k) {
        c.pi.emplace(k, std::array<FourierLayer, 2>{
                            buildPi(k, c.corrector(k, 1), c.omega.at(k + 2), Side::Left, geom, disc.P, tol),
                            buildPi(k, c.corrector(k, 2), c.omega.at(k + 2), Side::Right, geom, disc.P, tol)});
    };
    junction(1);
    junction(2);
    layers(2);
    for (int n = 2; n <= m; ++n) {
        const int k = 2 * n;
        c.u.emplace(k, std::array<CorrectorField, 2>{higherCorrector(c.corrector(k - 2, 1)),
                                                     higherCorrector(c.corrector(k - 2, 2))});
        junction(k - 1);
        junction(k);
        layers(k);
    }
    return c;
}

/// Partial sum of order m at a fixed eps:
///   omega2 + sum_k eps^{2k-1} (omega_{2k+1} + chi0 N_{2k-1})
///          + sum_k eps^{2k} (u_{2k} + omega_{2k+2} + chi0 N_{2k} + chi- Pi_{2k}^(1) + chi+ Pi_{2k}^(2)).
/// With `first_order_only` the sum stops after omega2 + eps (omega3 + chi0 N1).
class PartialSum {
public:
    PartialSum(const Components& c, double eps, int m = -1, bool first_order_only = false)
        : c_(&c), eps_(eps), m_(m < 0 ? c.m : m), first_(first_order_only), chi0_(Cutoff::junction(c.disc.delta)),
          chiL_(Cutoff::leftEnd(c.disc.delta)), chiR_(Cutoff::rightEnd(c.disc.delta)) {
        if (m_ > c.m) throw Error("partial sum order exceeds the built components");
        for (int k = 2; k <= 2 * m_; k += 2)
            for (int b = 0; b < 2; ++b) {
                dxx_[k][b].emplace(c.u.at(k)[b].dx().dx());
                dee_[k][b].emplace(c.u.at(k)[b].dEta().dEta());
            }
    }

    [[nodiscard]] double eps() const { return eps_; }
    [[nodiscard]] int order() const { return m_; }

    [[nodiscard]] double operator()(double x, double eta) const {
        const int br = x > 0.0 ? 2 : 1;
        std::vector<double> col{eta};
        return column(x, br, col)[0];
    }

    /// U at the nodes of a reference grid.
    [[nodiscard]] GridFunction2D sample(const std::shared_ptr<const CascadeGrid>& cg) const {
        GridFunction2D out(cg);
        const auto& g = cg->grid;
        for (int i = 0; i < g.columns(); ++i) {
            std::vector<double> etas;
            for (int j = g.rowLo(i); j <= g.rowHi(i); ++j) etas.push_back(g.eta(j));
            const auto vals = column(g.s(i), i <= g.i0() ? 1 : 2, etas);
            for (int j = g.rowLo(i); j <= g.rowHi(i); ++j) out.values()[g.node(i, j)] = vals[j - g.rowLo(i)];
        }
        return out;
    }

    /// Delta U + f with Delta = d_xx + eps^-2 d_etaeta in fast coordinates. Regular parts
    /// and end layers are differentiated analytically; junction layers are harmonic, so only
    /// their commutators with chi0 remain, with d_xi taken from the strip grid.
    [[nodiscard]] std::vector<double> residualColumn(double x, int br, const std::vector<double>& etas) const {
        const Components& c = *c_;
        const double e2 = eps_ * eps_;
        std::vector<double> r(etas.size(), 0.0);
        const double w2 = c.omega.at(2).second(br, x);
        for (std::size_t j = 0; j < etas.size(); ++j) r[j] = w2 + c.data.f(x, etas[j]);
        if (first_) return r;
        double ek = 1.0;
        for (int k = 2; k <= 2 * m_; k += 2) {
            ek *= e2;  // eps^k
            const auto a = dxx_.at(k)[br - 1]->sampleColumn(x, etas);
            const auto b = dee_.at(k)[br - 1]->sampleColumn(x, etas);
            for (std::size_t j = 0; j < etas.size(); ++j) r[j] += ek * a[j] + ek / e2 * b[j];
        }
        const double c0d1 = chi0_.d1(x), c0d2 = chi0_.d2(x);
        if (c0d1 != 0.0 || c0d2 != 0.0) {
            double ek2 = 1.0;
            for (int k = 1; k <= 2 * m_; ++k) {
                ek2 *= eps_;
                const JunctionLayer& N = c.N.at(k);
                if (N.isZero()) continue;
                for (std::size_t j = 0; j < etas.size(); ++j) {
                    const double xi = x / eps_;
                    r[j] += ek2 * (c0d2 * N.eval(xi, etas[j]) + 2.0 * c0d1 / eps_ * N.eval(xi, etas[j], 1));
                }
            }
        }
        const Cutoff& chi = br == 1 ? chiL_ : chiR_;
        const double cv = chi(x), cd1 = chi.d1(x), cd2 = chi.d2(x);
        if (cv != 0.0 || cd1 != 0.0) {
            const Side side = br == 1 ? Side::Left : Side::Right;
            const double xi = br == 1 ? (1.0 + x) / eps_ : (1.0 - x) / eps_;
            const double dxi = br == 1 ? 1.0 / eps_ : -1.0 / eps_;
            double ek3 = 1.0;
            for (int k = 2; k <= 2 * m_; k += 2) {
                ek3 *= e2;
                const FourierLayer& P = c.layer(k, side);
                if (P.isZero()) continue;
                for (std::size_t j = 0; j < etas.size(); ++j) {
                    const double lap = (P.eval(xi, etas[j], 2, 0) + P.eval(xi, etas[j], 0, 2)) / e2;
                    r[j] += ek3 * (cd2 * P.eval(xi, etas[j]) + 2.0 * cd1 * dxi * P.eval(xi, etas[j], 1, 0) + cv * lap);
                }
            }
        }
        return r;
    }

    [[nodiscard]] std::vector<double> column(double x, int br, const std::vector<double>& etas) const {
        const Components& c = *c_;
        std::vector<double> v(etas.size(), c.omega.at(2).value(br, x));
        const double chi0 = chi0_(x), xi = x / eps_;
        // odd orders
        double ek = 1.0;
        for (int k = 1; k <= 2 * m_; k += 2) {
            ek = std::pow(eps_, k);
            const double w = c.omega.at(k + 2).value(br, x);
            const JunctionLayer& N = c.N.at(k);
            for (std::size_t j = 0; j < etas.size(); ++j) {
                v[j] += ek * w;
                if (chi0 != 0.0 && !N.isZero()) v[j] += ek * chi0 * N.eval(xi, etas[j]);
            }
            if (first_) return v;
        }
        const Cutoff& chi = br == 1 ? chiL_ : chiR_;
        const double cv = chi(x);
        const Side side = br == 1 ? Side::Left : Side::Right;
        const double xe = br == 1 ? (1.0 + x) / eps_ : (1.0 - x) / eps_;
        for (int k = 2; k <= 2 * m_; k += 2) {
            ek = std::pow(eps_, k);
            const double w = c.omega.at(k + 2).value(br, x);
            const auto uk = c.corrector(k, br).sampleColumn(x, etas);
            const JunctionLayer& N = c.N.at(k);
            const FourierLayer& P = c.layer(k, side);
            for (std::size_t j = 0; j < etas.size(); ++j) {
                double t = uk[j] + w;
                if (chi0 != 0.0 && !N.isZero()) t += chi0 * N.eval(xi, etas[j]);
                if (cv != 0.0 && !P.isZero()) t += cv * P.eval(xe, etas[j]);
                v[j] += ek * t;
            }
        }
        return v;
    }

private:
    const Components* c_;
    double eps_;
    int m_;
    bool first_;
    Cutoff chi0_, chiL_, chiR_;
    std::map<int, std::array<std::optional<CorrectorField>, 2>> dxx_, dee_;
};

}  // namespace cascade
