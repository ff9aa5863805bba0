#pragma once

#include <cmath>

namespace cascade {

/// C2 quintic smoothstep: 0 for t <= 0, 1 for t >= 1, t^3 (10 - 15 t + 6 t^2) in between.
struct Smoothstep {
    static double value(double t) {
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return 1.0;
        return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
    }
    static double d1(double t) {
        if (t <= 0.0 || t >= 1.0) return 0.0;
        return 30.0 * t * t * (1.0 - t) * (1.0 - t);
    }
    static double d2(double t) {
        if (t <= 0.0 || t >= 1.0) return 0.0;
        return 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t);
    }
};

/// Radial cut-off around `center`: 1 for |x - center| <= delta, 0 for |x - center| >= 2 delta.
class Cutoff {
public:
    Cutoff(double center, double delta) : c_(center), d_(delta) {}

    [[nodiscard]] double operator()(double x) const { return 1.0 - Smoothstep::value(arg(x)); }
    [[nodiscard]] double d1(double x) const { return -Smoothstep::d1(arg(x)) * sign(x) / d_; }
    [[nodiscard]] double d2(double x) const { return -Smoothstep::d2(arg(x)) / (d_ * d_); }
    [[nodiscard]] double center() const { return c_; }
    [[nodiscard]] double delta() const { return d_; }

    /// chi0 around the junction, chi- around x = -1, chi+ around x = +1.
    static Cutoff junction(double delta) { return {0.0, delta}; }
    static Cutoff leftEnd(double delta) { return {-1.0, delta}; }
    static Cutoff rightEnd(double delta) { return {1.0, delta}; }

private:
    [[nodiscard]] double arg(double x) const { return (std::abs(x - c_) - d_) / d_; }
    [[nodiscard]] double sign(double x) const { return x >= c_ ? 1.0 : -1.0; }
    double c_, d_;
};

}  // namespace cascade
