#pragma once

#include "cascade/expr.hpp"
#include "cascade/polynomial.hpp"
#include "cascade/quadrature.hpp"

#include <vector>

namespace cascade {

/// A scalar function of x assembled from symbolic pieces:
///
///   F(x) = sum_a c_a * e_a(x)  +  sum_b c_b * integral_{lo_b}^{hi_b} w_b(t) G_b(x, t) dt
///
/// Cross-section moments stay unevaluated so that d/dx is exact: it is pushed
/// under the integral sign onto the symbolic integrand.
class XFunction {
public:
    struct Term {
        double coef;
        Expression expr;  // function of x only
    };
    struct Moment {
        double coef;
        Polynomial weight;  // in the integration variable
        Expression integrand;  // G(x, eta)
        double lo, hi;
    };

    XFunction() = default;
    explicit XFunction(double tol) : tol_(tol) {}

    static XFunction fromExpression(const Expression& e, double tol = 1e-12) {
        XFunction f(tol);
        f.add(1.0, e);
        return f;
    }

    XFunction& add(double coef, const Expression& e) {
        if (coef != 0.0 && !e.isZero()) terms_.push_back({coef, e});
        return *this;
    }
    XFunction& addMoment(double coef, const Polynomial& w, const Expression& g, double lo, double hi) {
        if (coef != 0.0 && !w.isZero() && !g.isZero()) moments_.push_back({coef, w, g, lo, hi});
        return *this;
    }
    XFunction& add(double coef, const XFunction& other) {
        for (const auto& t : other.terms_) add(coef * t.coef, t.expr);
        for (const auto& m : other.moments_) addMoment(coef * m.coef, m.weight, m.integrand, m.lo, m.hi);
        return *this;
    }

    [[nodiscard]] double operator()(double x) const {
        double r = 0.0;
        for (const auto& t : terms_) r += t.coef * t.expr(x, 0.0);
        for (const auto& m : moments_) {
            const double v = integrate([&](double t) { return m.weight(t) * m.integrand(x, t); },
                                       m.lo, m.hi, tol_).value;
            r += m.coef * v;
        }
        return r;
    }

    [[nodiscard]] XFunction derivative() const {
        XFunction d(tol_);
        for (const auto& t : terms_) d.add(t.coef, differentiate(t.expr, Var::X));
        for (const auto& m : moments_) d.addMoment(m.coef, m.weight, differentiate(m.integrand, Var::X), m.lo, m.hi);
        return d;
    }

    [[nodiscard]] XFunction scaled(double s) const {
        XFunction r(tol_);
        r.add(s, *this);
        return r;
    }

    /// Structurally zero: no surviving terms after constant folding.
    [[nodiscard]] bool isZero() const { return terms_.empty() && moments_.empty(); }
    [[nodiscard]] double tolerance() const { return tol_; }
    [[nodiscard]] const std::vector<Term>& terms() const { return terms_; }
    [[nodiscard]] const std::vector<Moment>& moments() const { return moments_; }

private:
    std::vector<Term> terms_;
    std::vector<Moment> moments_;
    double tol_ = 1e-12;
};

}  // namespace cascade
