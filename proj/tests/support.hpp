#pragma once

#include "cascade/config.hpp"

#include <random>
#include <string>

namespace cascade::testing {

inline ProblemData makeData(const std::string& f, const std::string& pp1 = "0", const std::string& pm1 = "0",
                            const std::string& pp2 = "0", const std::string& pm2 = "0") {
    return {parse(f), parse(pp1), parse(pm1), parse(pp2), parse(pm2)};
}

/// Smooth data with random coefficients; the same seed gives the same data.
inline ProblemData randomData(unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> c(-2.0, 2.0);
    auto n = [&] { return "(" + std::to_string(c(rng)) + ")"; };
    return makeData(n() + "*cos(" + n() + "*x)*(1+" + n() + "*eta) + " + n() + "*eta^2*exp(x/2)",
                    n() + "*x + " + n(), n() + "*sin(x)", n() + "*x^2", n() + "+" + n() + "*x");
}

inline ProblemData rateSuiteData() { return makeData("cos(pi*x/2)*(1+eta)", "x+1"); }

}  // namespace cascade::testing
