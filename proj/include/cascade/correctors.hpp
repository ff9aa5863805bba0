#pragma once

#include "cascade/config.hpp"
#include "cascade/error.hpp"
#include "cascade/homogenized.hpp"
#include "cascade/polynomial.hpp"
#include "cascade/quadrature.hpp"
#include "cascade/xfunction.hpp"

#include <cmath>
#include <vector>

namespace cascade {

/// Fast-variable corrector u_k on one branch, Iᵢ x (-h/2, h/2):
///
///   u(x, eta) = sum_a p_a(eta) X_a(x) + sum_b c_b V_{k_b}[G_b](x, eta)
///
/// where V_k[G](x, eta) = integral_{-h/2}^{eta} (eta - t)^{k-1} / (k-1)! G(x, t) dt is the
/// k-fold repeated integral from the bottom wall (V_0[G] = G). Both d/dx and d/deta stay
/// symbolic: d/deta lowers k, d/dx acts on G and X.
class CorrectorField {
public:
    struct PolyTerm {
        Polynomial p;
        XFunction X;
    };
    struct VolterraTerm {
        double coef;
        int k;
        Expression G;
    };

    CorrectorField(int branch, int order, double h, double tol = 1e-12)
        : branch_(branch), order_(order), h_(h), tol_(tol) {}

    [[nodiscard]] int branch() const { return branch_; }
    [[nodiscard]] int order() const { return order_; }
    [[nodiscard]] double thickness() const { return h_; }
    [[nodiscard]] double tolerance() const { return tol_; }
    [[nodiscard]] const std::vector<PolyTerm>& polyTerms() const { return poly_; }
    [[nodiscard]] const std::vector<VolterraTerm>& volterraTerms() const { return volterra_; }
    [[nodiscard]] bool isZero() const { return poly_.empty() && volterra_.empty(); }

    void addPoly(const Polynomial& p, const XFunction& X) {
        if (!p.isZero() && !X.isZero()) poly_.push_back({p, X});
    }
    void addVolterra(double coef, int k, const Expression& G) {
        if (coef != 0.0 && !G.isZero()) volterra_.push_back({coef, k, G});
    }

    [[nodiscard]] double volterra(const VolterraTerm& v, double x, double eta) const {
        if (v.k == 0) return v.G(x, eta);
        const double lo = -0.5 * h_;
        if (eta == lo) return 0.0;
        double fact = 1.0;
        for (int i = 2; i < v.k; ++i) fact *= i;
        const int pw = v.k - 1;
        return integrate([&](double t) { return std::pow(eta - t, pw) / fact * v.G(x, t); }, lo, eta, tol_).value;
    }

    [[nodiscard]] double operator()(double x, double eta) const {
        double r = 0.0;
        for (const auto& t : poly_) r += t.p(eta) * t.X(x);
        for (const auto& v : volterra_) r += v.coef * volterra(v, x, eta);
        return r;
    }

    /// Values on one column; the x-only factors are evaluated once.
    [[nodiscard]] std::vector<double> sampleColumn(double x, const std::vector<double>& etas) const {
        std::vector<double> out(etas.size(), 0.0);
        for (const auto& t : poly_) {
            const double X = t.X(x);
            for (std::size_t j = 0; j < etas.size(); ++j) out[j] += t.p(etas[j]) * X;
        }
        for (const auto& v : volterra_)
            for (std::size_t j = 0; j < etas.size(); ++j) out[j] += v.coef * volterra(v, x, etas[j]);
        return out;
    }

    [[nodiscard]] CorrectorField dx() const {
        CorrectorField d(branch_, order_, h_, tol_);
        for (const auto& t : poly_) d.addPoly(t.p, t.X.derivative());
        for (const auto& v : volterra_) d.addVolterra(v.coef, v.k, differentiate(v.G, Var::X));
        return d;
    }

    [[nodiscard]] CorrectorField dEta() const {
        CorrectorField d(branch_, order_, h_, tol_);
        for (const auto& t : poly_) d.addPoly(t.p.derivative(), t.X);
        for (const auto& v : volterra_) {
            if (v.k == 0) d.addVolterra(v.coef, 0, differentiate(v.G, Var::Eta));
            else d.addVolterra(v.coef, v.k - 1, v.G);
        }
        return d;
    }

    /// Cross-section mean as a function of x.
    [[nodiscard]] XFunction mean() const {
        XFunction m(tol_);
        const double a = -0.5 * h_, b = 0.5 * h_;
        for (const auto& t : poly_) m.add(t.p.integral(a, b) / h_, t.X);
        for (const auto& v : volterra_) {
            // integral of V_k over the section = integral of G(t) (h/2 - t)^k / k! dt
            double fact = 1.0;
            for (int i = 2; i <= v.k; ++i) fact *= i;
            const double sgn = v.k % 2 == 0 ? 1.0 : -1.0;
            const Polynomial w = (sgn / fact) * Polynomial::shiftedPower(b, v.k);
            m.addMoment(v.coef / h_, w, v.G, a, b);
        }
        return m;
    }

    /// Subtract the cross-section mean so that <u(x, .)> = 0.
    void normalizeMean() {
        const XFunction m = mean();
        addPoly(Polynomial::constant(1.0), m.scaled(-1.0));
    }

private:
    int branch_, order_;
    double h_, tol_;
    std::vector<PolyTerm> poly_;
    std::vector<VolterraTerm> volterra_;
};

/// Second-order corrector in closed form: -d_etaeta u2 = f - F/h with Neumann data
/// -d_eta u2 = phi_plus, phi_minus on the walls and zero cross-section mean.
inline CorrectorField correctorU2(const ProblemData& data, const CascadeGeometry& geom, int branch,
                                  double tol = 1e-12) {
    const double h = geom.thickness(branch);
    CorrectorField u(branch, 2, h, tol);
    // (eta + h/2)^2 / 2 and (eta + h/2)
    const Polynomial Q = 0.5 * Polynomial::shiftedPower(-0.5 * h, 2);
    const Polynomial L = Polynomial::shiftedPower(-0.5 * h, 1);
    const Expression& pp = data.phiPlus(branch);
    const Expression& pm = data.phiMinus(branch);
    if (data.f.dependsOn(Var::Eta)) {
        u.addVolterra(-1.0, 2, data.f);
        u.addPoly(Q, effectiveRhs(data, geom, branch, tol).scaled(1.0 / h));
    } else {
        // f(x) cancels against its own cross-section integral.
        XFunction X(tol);
        X.add(-1.0 / h, pp).add(1.0 / h, pm);
        u.addPoly(Q, X);
    }
    XFunction m(tol);
    m.add(-1.0, pm);
    u.addPoly(L, m);
    u.normalizeMean();
    return u;
}

/// Next even corrector: -d_etaeta u_{2n} = d_xx u_{2n-2}, zero Neumann data, zero mean.
/// Built as minus the double antiderivative from the bottom wall plus a constant in eta.
inline CorrectorField higherCorrector(const CorrectorField& prev, int max_order = 6) {
    const int order = prev.order() + 2;
    if (order > max_order) throw Error("corrector order beyond the supported maximum");
    const double h = prev.thickness(), tol = prev.tolerance();
    const CorrectorField S = prev.dx().dx();
    // Solvability: the source must have zero cross-section mean.
    const XFunction ms = S.mean();
    const double xlo = prev.branch() == 1 ? -1.0 : 0.0;
    for (int s = 0; s <= 10; ++s) {
        const double x = xlo + 0.1 * s;
        const double r = h * ms(x);
        if (std::abs(r) > std::max(1e-9, 1e3 * tol)) {
            throw SolvabilityError("corrector source violates the zero-mean solvability condition", r);
        }
    }
    CorrectorField u(prev.branch(), order, h, tol);
    for (const auto& t : S.polyTerms()) {
        const Polynomial J2 = t.p.antiderivative(-0.5 * h).antiderivative(-0.5 * h);
        u.addPoly((-1.0) * J2, t.X);
    }
    for (const auto& v : S.volterraTerms()) u.addVolterra(-v.coef, v.k + 2, v.G);
    u.normalizeMean();
    return u;
}

}  // namespace cascade
