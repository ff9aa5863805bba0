#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace cascade {

/// Dense polynomial in one variable, power basis, coefficient i multiplies t^i.
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(std::vector<double> c) : c_(std::move(c)) { trim(); }

    static Polynomial constant(double v) { return Polynomial({v}); }
    /// (t - a)^k
    static Polynomial shiftedPower(double a, int k) {
        Polynomial p = constant(1.0);
        const Polynomial lin({-a, 1.0});
        for (int i = 0; i < k; ++i) p = p * lin;
        return p;
    }

    [[nodiscard]] double operator()(double t) const {
        double r = 0.0;
        for (std::size_t i = c_.size(); i-- > 0;) r = r * t + c_[i];
        return r;
    }

    [[nodiscard]] bool isZero() const { return c_.empty(); }
    [[nodiscard]] int degree() const { return static_cast<int>(c_.size()) - 1; }
    [[nodiscard]] const std::vector<double>& coefficients() const { return c_; }

    [[nodiscard]] Polynomial derivative() const {
        if (c_.size() <= 1) return {};
        std::vector<double> d(c_.size() - 1);
        for (std::size_t i = 1; i < c_.size(); ++i) d[i - 1] = static_cast<double>(i) * c_[i];
        return Polynomial(std::move(d));
    }

    /// Antiderivative vanishing at `a`.
    [[nodiscard]] Polynomial antiderivative(double a) const {
        if (c_.empty()) return {};
        std::vector<double> d(c_.size() + 1, 0.0);
        for (std::size_t i = 0; i < c_.size(); ++i) d[i + 1] = c_[i] / static_cast<double>(i + 1);
        Polynomial p(std::move(d));
        return p - constant(p(a));
    }

    [[nodiscard]] double integral(double a, double b) const {
        const Polynomial p = antiderivative(0.0);
        return p(b) - p(a);
    }

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
        std::vector<double> r(std::max(a.c_.size(), b.c_.size()), 0.0);
        for (std::size_t i = 0; i < a.c_.size(); ++i) r[i] += a.c_[i];
        for (std::size_t i = 0; i < b.c_.size(); ++i) r[i] += b.c_[i];
        return Polynomial(std::move(r));
    }
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-1.0) * b; }
    friend Polynomial operator*(double s, const Polynomial& p) {
        std::vector<double> r = p.c_;
        for (auto& v : r) v *= s;
        return Polynomial(std::move(r));
    }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
        if (a.c_.empty() || b.c_.empty()) return {};
        std::vector<double> r(a.c_.size() + b.c_.size() - 1, 0.0);
        for (std::size_t i = 0; i < a.c_.size(); ++i)
            for (std::size_t j = 0; j < b.c_.size(); ++j) r[i + j] += a.c_[i] * b.c_[j];
        return Polynomial(std::move(r));
    }

private:
    void trim() {
        while (!c_.empty() && c_.back() == 0.0) c_.pop_back();
    }
    std::vector<double> c_;
};

}  // namespace cascade
