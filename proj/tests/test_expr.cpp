#include "cascade/expr.hpp"
#include "cascade/polynomial.hpp"
#include "cascade/quadrature.hpp"
#include "cascade/xfunction.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <thread>

using namespace cascade;

namespace {
const double kPi = std::numbers::pi;
}

TEST(Parse, ZeroLiteral) {
    const Expression e = parse("0");
    EXPECT_TRUE(e.isZero());
    EXPECT_EQ(e(0.3, -0.2), 0.0);
}

TEST(Parse, PolynomialPlusSine) {
    const Expression e = parse("x^2 + sin(pi*eta)");
    EXPECT_DOUBLE_EQ(e(1.0, 0.0), 1.0);
    EXPECT_NEAR(e(0.5, 0.5), 1.25, 1e-15);
}

TEST(Parse, GuardedDivisionFailsAtEvaluation) {
    const Expression e = parse("1/(1-x)");
    EXPECT_NO_THROW(e(0.0));
    EXPECT_THROW(e(1.0), EvalError);
}

TEST(Parse, SqrtOfNegativeIsAnError) {
    EXPECT_THROW(parse("sqrt(x)")(-1.0), EvalError);
    EXPECT_THROW(parse("log(x)")(0.0), EvalError);
}

TEST(Parse, PowerIsRightAssociative) {
    EXPECT_DOUBLE_EQ(parse("2^3^2")(0, 0), 512.0);
    EXPECT_DOUBLE_EQ(parse("-2^2")(0, 0), -4.0);
    EXPECT_DOUBLE_EQ(parse("2*3+4/2-1")(0, 0), 7.0);
    EXPECT_DOUBLE_EQ(parse("(1+2)*3")(0, 0), 9.0);
    EXPECT_DOUBLE_EQ(parse("1.5e1 - .5")(0, 0), 14.5);
}

TEST(Parse, SyntaxErrorsCarryPosition) {
    try {
        parse("x + * 2");
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.position(), 4u);
    }
    EXPECT_THROW(parse("sin(x"), ParseError);
    EXPECT_THROW(parse("y + 1"), ParseError);
    EXPECT_THROW(parse("tan(x)"), ParseError);
    EXPECT_THROW(parse(""), ParseError);
    EXPECT_THROW(parse("x 2"), ParseError);
}

TEST(Parse, RoundTripThroughPrint) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-0.9, 0.9);
    for (const char* text : {"x^2 + sin(pi*eta)", "exp(-x)*cos(2*pi*eta)/(2+x)", "sqrt(1+x*x)-eta^3",
                             "-(x-eta)^2*log(2+x)", "2^x^2", "1/(3-x)/(2-eta)"}) {
        const Expression e = parse(text);
        const Expression r = parse(e.str());
        for (int k = 0; k < 20; ++k) {
            const double x = u(rng), eta = u(rng);
            EXPECT_EQ(e(x, eta), r(x, eta)) << text << " printed as " << e.str();
        }
    }
}

TEST(Parse, ConstantFolding) {
    EXPECT_TRUE(parse("2*pi - 2*pi").isConstant());
    EXPECT_NEAR(parse("2*pi").constantValue(), 2.0 * kPi, 1e-15);
}

TEST(Differentiate, PowerRule) {
    const Expression d = differentiate(parse("x^2"), Var::X);
    for (double x : {-1.0, 0.0, 0.7}) EXPECT_DOUBLE_EQ(d(x, 0.3), 2.0 * x);
}

TEST(Differentiate, ChainRule) {
    const Expression d = differentiate(parse("sin(pi*eta)"), Var::Eta);
    for (double e : {-0.4, 0.0, 0.25}) EXPECT_NEAR(d(0.0, e), kPi * std::cos(kPi * e), 1e-14);
}

TEST(Differentiate, IndependentVariable) { EXPECT_TRUE(differentiate(parse("sin(pi*eta)"), Var::X).isZero()); }

TEST(Differentiate, AgainstFiniteDifferences) {
    const Expression e = parse("exp(x)*cos(2*pi*eta)/(2+x) + sqrt(1+x^2) + (2+x)^eta + log(3+x)");
    const Expression dx = differentiate(e, Var::X), de = differentiate(e, Var::Eta);
    const double h = 1e-6;
    for (double x : {-0.5, 0.1, 0.8})
        for (double eta : {-0.3, 0.2}) {
            EXPECT_NEAR(dx(x, eta), (e(x + h, eta) - e(x - h, eta)) / (2 * h), 1e-8);
            EXPECT_NEAR(de(x, eta), (e(x, eta + h) - e(x, eta - h)) / (2 * h), 1e-8);
        }
}

TEST(Substitute, ReplacesVariable) {
    const Expression e = substitute(parse("x*eta + eta^2"), Var::Eta, Expression::constant(0.5));
    EXPECT_FALSE(e.dependsOn(Var::Eta));
    EXPECT_DOUBLE_EQ(e(2.0, 9.0), 1.25);
}

TEST(Evaluate, PureAndThreadSafe) {
    const Expression e = parse("exp(x)*cos(2*pi*eta)/(2+x)");
    const double ref = e(0.3, 0.1);
    std::vector<std::thread> ts;
    std::vector<double> out(8);
    for (int t = 0; t < 8; ++t)
        ts.emplace_back([&, t] {
            double v = 0;
            for (int k = 0; k < 1000; ++k) v = e(0.3, 0.1);
            out[t] = v;
        });
    for (auto& t : ts) t.join();
    for (double v : out) EXPECT_EQ(v, ref);
}

TEST(Integrate, FullPeriodOfSine) {
    EXPECT_NEAR(integrate1d(parse("sin(eta)"), Var::Eta, 0.0, 2.0 * kPi, 1e-12), 0.0, 1e-12);
}

TEST(Integrate, EtaSquared) {
    EXPECT_NEAR(integrate1d(parse("eta^2"), Var::Eta, -0.5, 0.5, 1e-12), 1.0 / 12.0, 1e-14);
}

TEST(Integrate, UnitConstant) { EXPECT_DOUBLE_EQ(integrate1d(parse("1"), Var::X, 0.0, 1.0, 1e-12), 1.0); }

TEST(Integrate, PolynomialsUpToDegreeTenAreExact) {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> c(-2.0, 2.0);
    for (int deg = 0; deg <= 10; ++deg) {
        std::vector<double> coef(deg + 1);
        std::string text = "0";
        for (int k = 0; k <= deg; ++k) {
            const std::string lit = std::to_string(c(rng));
            coef[k] = std::stod(lit);
            text += " + (" + lit + ")*x^" + std::to_string(k);
        }
        const Expression e = parse(text);
        const double a = -0.7, b = 1.3;
        double exact = 0.0;
        for (int k = 0; k <= deg; ++k) exact += coef[k] * (std::pow(b, k + 1) - std::pow(a, k + 1)) / (k + 1);
        EXPECT_NEAR(integrate1d(e, Var::X, a, b, 1e-13), exact, 1e-12) << "degree " << deg;
    }
}

TEST(Integrate, FundamentalTheorem) {
    for (const char* text : {"exp(x)*sin(3*x)", "1/(2+x)^2", "sqrt(1+x^2)*cos(x)", "x^7 - 3*x^2"}) {
        const Expression e = parse(text);
        const Expression d = differentiate(e, Var::X);
        const double a = -0.9, b = 0.95;
        EXPECT_NEAR(integrate1d(d, Var::X, a, b, 1e-11), e(b) - e(a), 1e-10) << text;
    }
}

TEST(Integrate, BudgetExhaustionCarriesEstimate) {
    try {
        integrate([](double x) { return x > 0.0 ? 1.0 / std::sqrt(x) : 0.0; }, 0.0, 1.0, 1e-15, 2000);
        FAIL() << "expected QuadratureError";
    } catch (const QuadratureError& e) {
        EXPECT_GT(e.bestEstimate(), 1.5);
        EXPECT_GT(e.errorEstimate(), 0.0);
    }
}

TEST(Integrate, Deterministic) {
    const Expression e = parse("exp(x)*cos(5*x)");
    EXPECT_EQ(integrate1d(e, Var::X, 0, 1, 1e-12), integrate1d(e, Var::X, 0, 1, 1e-12));
}

TEST(GaussLegendre, ExactForDegree2nMinus1) {
    const auto [x, w] = gaussLegendre(6);
    double s = 0.0;
    for (int k = 0; k < 6; ++k) s += w[k] * std::pow(x[k], 10);
    EXPECT_NEAR(s, 2.0 / 11.0, 1e-15);
}

TEST(Polynomial, AntiderivativeAndIntegral) {
    const Polynomial p({1.0, 2.0, 3.0});  // 1 + 2t + 3t^2
    EXPECT_NEAR(p.integral(0.0, 1.0), 3.0, 1e-15);
    EXPECT_NEAR(p.derivative()(2.0), 14.0, 1e-15);
    EXPECT_NEAR(p.antiderivative(1.0)(1.0), 0.0, 1e-15);
}

TEST(XFunction, FromExpressionAndDerivative) {
    const XFunction f = XFunction::fromExpression(parse("sin(x)"));
    EXPECT_NEAR(f(0.4), std::sin(0.4), 1e-15);
    EXPECT_NEAR(f.derivative()(0.4), std::cos(0.4), 1e-15);
    EXPECT_TRUE(XFunction::fromExpression(parse("0")).isZero());
}
