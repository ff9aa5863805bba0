#pragma once

#include "cascade/error.hpp"
#include "cascade/expr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace cascade {

/// Two thin branches: (-1,0) x (-h1/2, h1/2) joined to (0,1) x (-h2/2, h2/2), in fast
/// coordinates eta = y / eps. The library also accepts the straight channel h2 == h1;
/// configuration files insist on h2 < h1.
class CascadeGeometry {
public:
    CascadeGeometry(double h1, double h2) : h1_(h1), h2_(h2) {
        if (!(h1 > 0.0) || !(h2 > 0.0)) throw ConfigError("thicknesses must be positive");
        if (h2 > h1) throw ConfigError("h2 must be < h1");
    }

    [[nodiscard]] double h1() const { return h1_; }
    [[nodiscard]] double h2() const { return h2_; }
    [[nodiscard]] double thickness(int branch) const { return branch == 1 ? h1_ : h2_; }
    [[nodiscard]] double halfWidth(int branch) const { return 0.5 * thickness(branch); }
    [[nodiscard]] double xLo(int branch) const { return branch == 1 ? -1.0 : 0.0; }
    [[nodiscard]] double xHi(int branch) const { return branch == 1 ? 0.0 : 1.0; }
    [[nodiscard]] bool straight() const { return h1_ == h2_; }

private:
    double h1_, h2_;
};

struct ProblemData {
    Expression f;
    Expression phi_plus_1, phi_minus_1, phi_plus_2, phi_minus_2;

    [[nodiscard]] const Expression& phiPlus(int branch) const { return branch == 1 ? phi_plus_1 : phi_plus_2; }
    [[nodiscard]] const Expression& phiMinus(int branch) const { return branch == 1 ? phi_minus_1 : phi_minus_2; }
    [[nodiscard]] bool isZero() const {
        return f.isZero() && phi_plus_1.isZero() && phi_minus_1.isZero() && phi_plus_2.isZero() &&
               phi_minus_2.isZero();
    }
};

enum class LinearSolverKind { Direct, ConjugateGradient };

struct Discretization {
    int nx = 256;           ///< coarse cells per unit length in x
    int neta = 64;          ///< cells per unit length in eta; also the junction-strip lattice
    double R = 12.0;        ///< junction strip truncation half-length (xi units)
    int P = 64;             ///< Fourier modes per boundary layer
    double delta = 0.15;    ///< cut-off radius
    double lift_delta = 1.0;  ///< xi-scale of the jump lifting inside the strip
    double c_delta = 1.0;   ///< free constant in the N2 energy bound
    double tol_quad = 1e-12;
    double tol_lin_solve = 1e-10;
    LinearSolverKind solver = LinearSolverKind::Direct;
    bool refine_layers = true;  ///< resolve junction/end layers on the reference grid

    [[nodiscard]] double etaSpacing() const { return 1.0 / neta; }
};

struct Config {
    CascadeGeometry geometry{1.0, 0.5};
    ProblemData data;
    Discretization disc;
    std::vector<double> epsilons{0.2, 0.1, 0.05, 0.025};
    int m = 1;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::string stripComment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

inline double toNumber(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size()) throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    return d;
}

inline std::string toString(const std::string& key, const std::string& v) {
    if (v.size() < 2 || v.front() != '"' || v.back() != '"')
        throw ConfigError("key '" + key + "': expected a quoted string");
    return v.substr(1, v.size() - 2);
}

inline std::vector<double> toList(const std::string& key, const std::string& v) {
    if (v.size() < 2 || v.front() != '[' || v.back() != ']') throw ConfigError("key '" + key + "': expected [a, b, ...]");
    std::vector<double> out;
    std::stringstream ss(v.substr(1, v.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(toNumber(key, item));
    }
    return out;
}

inline Expression toExpression(const std::string& key, const std::string& v) {
    try {
        return parse(toString(key, v));
    } catch (const ParseError& e) {
        throw ConfigError("key '" + key + "': malformed expression: " + e.what());
    }
}

}  // namespace detail

/// Parse configuration text (see docs/config.md for the schema).
inline Config parseConfig(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string line = detail::trim(detail::stripComment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            static const std::vector<std::string> known{"geometry", "data", "discretization", "sweep"};
            if (std::find(known.begin(), known.end(), section) == known.end())
                throw ConfigError("line " + std::to_string(lineno) + ": unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        if (section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": key outside of a section");
        const std::string key = section + "." + detail::trim(line.substr(0, eq));
        if (kv.count(key)) throw ConfigError("duplicate key '" + key + "'");
        kv[key] = detail::trim(line.substr(eq + 1));
    }

    auto take = [&](const std::string& key) -> const std::string* {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    auto require = [&](const std::string& key) -> const std::string& {
        const auto* v = take(key);
        if (!v) throw ConfigError("missing key '" + key + "'");
        return *v;
    };

    Config cfg;
    const double h1 = detail::toNumber("geometry.h1", require("geometry.h1"));
    const double h2 = detail::toNumber("geometry.h2", require("geometry.h2"));
    if (!(h1 > 0.0) || !(h2 > 0.0)) throw ConfigError("thicknesses must be positive");
    if (!(h2 < h1)) throw ConfigError("h2 must be < h1");
    cfg.geometry = CascadeGeometry(h1, h2);

    cfg.data.f = detail::toExpression("data.f", require("data.f"));
    auto optExpr = [&](const std::string& key, Expression& dst) {
        if (const auto* v = take(key)) dst = detail::toExpression(key, *v);
    };
    optExpr("data.phi_plus_1", cfg.data.phi_plus_1);
    optExpr("data.phi_minus_1", cfg.data.phi_minus_1);
    optExpr("data.phi_plus_2", cfg.data.phi_plus_2);
    optExpr("data.phi_minus_2", cfg.data.phi_minus_2);
    for (const auto* k : {"data.phi_plus_1", "data.phi_minus_1", "data.phi_plus_2", "data.phi_minus_2"}) {
        const Expression& e = k == std::string("data.phi_plus_1") ? cfg.data.phi_plus_1
                            : k == std::string("data.phi_minus_1") ? cfg.data.phi_minus_1
                            : k == std::string("data.phi_plus_2") ? cfg.data.phi_plus_2 : cfg.data.phi_minus_2;
        if (e.dependsOn(Var::Eta)) throw ConfigError(std::string("key '") + k + "': boundary data may depend on x only");
    }

    auto& d = cfg.disc;
    auto optInt = [&](const std::string& key, int& dst) {
        if (const auto* v = take(key)) {
            const double n = detail::toNumber(key, *v);
            if (n != std::floor(n) || n < 1) throw ConfigError("key '" + key + "': expected a positive integer");
            dst = static_cast<int>(n);
        }
    };
    auto optReal = [&](const std::string& key, double& dst) {
        if (const auto* v = take(key)) dst = detail::toNumber(key, *v);
    };
    optInt("discretization.nx", d.nx);
    optInt("discretization.neta", d.neta);
    optInt("discretization.P", d.P);
    optReal("discretization.R", d.R);
    optReal("discretization.delta", d.delta);
    optReal("discretization.lift_delta", d.lift_delta);
    optReal("discretization.c_delta", d.c_delta);
    optReal("discretization.tol_quad", d.tol_quad);
    optReal("discretization.tol_lin_solve", d.tol_lin_solve);
    if (const auto* v = take("discretization.solver")) {
        const std::string s = detail::toString("discretization.solver", *v);
        if (s == "direct") d.solver = LinearSolverKind::Direct;
        else if (s == "cg") d.solver = LinearSolverKind::ConjugateGradient;
        else throw ConfigError("key 'discretization.solver': expected \"direct\" or \"cg\"");
    }
    if (const auto* v = take("discretization.refine_layers")) {
        if (*v == "true") d.refine_layers = true;
        else if (*v == "false") d.refine_layers = false;
        else throw ConfigError("key 'discretization.refine_layers': expected true or false");
    }
    if (!(d.delta > 0.0 && d.delta < 0.25)) throw ConfigError("delta must lie in (0, 1/4)");
    if (!(d.R > 3.0)) throw ConfigError("R must exceed 3");
    if (!(d.lift_delta > 0.0 && 2.0 * d.lift_delta < d.R - 2.0)) throw ConfigError("lift_delta must lie in (0, (R-2)/2)");
    if (!(d.tol_quad > 0.0) || !(d.tol_lin_solve > 0.0)) throw ConfigError("tolerances must be positive");

    if (const auto* v = take("sweep.eps")) {
        cfg.epsilons = detail::toList("sweep.eps", *v);
        if (cfg.epsilons.empty()) throw ConfigError("sweep.eps must not be empty");
    }
    for (double e : cfg.epsilons)
        if (!(e > 0.0)) throw ConfigError("non-positive eps in sweep.eps");
    std::sort(cfg.epsilons.begin(), cfg.epsilons.end(), std::greater<>());
    if (const auto* v = take("sweep.m")) {
        const double m = detail::toNumber("sweep.m", *v);
        if (m != std::floor(m) || m < 1 || m > 3) throw ConfigError("sweep.m must be 1, 2 or 3");
        cfg.m = static_cast<int>(m);
    }

    static const std::vector<std::string> allowed{
        "geometry.h1", "geometry.h2", "data.f", "data.phi_plus_1", "data.phi_minus_1", "data.phi_plus_2",
        "data.phi_minus_2", "discretization.nx", "discretization.neta", "discretization.P", "discretization.R",
        "discretization.delta", "discretization.lift_delta", "discretization.c_delta", "discretization.tol_quad",
        "discretization.tol_lin_solve", "discretization.solver", "discretization.refine_layers", "sweep.eps",
        "sweep.m"};
    for (const auto& [k, v] : kv)
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) throw ConfigError("unknown key '" + k + "'");

    // the slowest strip mode decays like exp(-pi xi / h1)
    const double decay_budget = std::max(h1, h2) / std::numbers::pi * std::log(1.0 / d.tol_lin_solve);
    if (d.R < decay_budget) {
        cfg.warnings.push_back("R = " + std::to_string(d.R) + " is below the recommended decay budget " +
                               std::to_string(decay_budget));
    }
    return cfg;
}

inline Config loadConfig(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config not found: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parseConfig(ss.str());
}

}  // namespace cascade
