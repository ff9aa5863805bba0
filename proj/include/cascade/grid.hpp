#pragma once

#include "cascade/error.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace cascade {

/// Cross-section nodes shared by every two-branch grid: piecewise uniform over the
/// breakpoints -h1/2, -h2/2, h2/2, h1/2 so that the narrow cross-section is resolved
/// by grid lines. Rows j0..j1 span the narrow branch.
/// Three-point Gauss-Legendre nodes and weights on [0, 1].
inline constexpr double kGauss3[3] = {0.1127016653792583, 0.5, 0.8872983346207417};
inline constexpr double kGauss3W[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

struct EtaLattice {
    std::vector<double> eta;
    int j0 = 0, j1 = 0;

    static EtaLattice make(double h1, double h2, int cells_per_unit) {
        if (cells_per_unit < 1) throw ConfigError("eta lattice needs at least one cell per unit");
        if (!(h2 > 0.0) || h2 > h1) throw ConfigError("eta lattice requires 0 < h2 <= h1");
        EtaLattice lat;
        auto segment = [&](double a, double b, bool include_first) {
            const int n = std::max(1, static_cast<int>(std::lround((b - a) * cells_per_unit)));
            for (int k = include_first ? 0 : 1; k <= n; ++k) lat.eta.push_back(a + (b - a) * k / n);
        };
        const double a1 = 0.5 * h1, a2 = 0.5 * h2;
        if (h1 > h2) {
            segment(-a1, -a2, true);
            lat.j0 = static_cast<int>(lat.eta.size()) - 1;
            segment(-a2, a2, false);
            lat.j1 = static_cast<int>(lat.eta.size()) - 1;
            segment(a2, a1, false);
        } else {
            segment(-a2, a2, true);
            lat.j0 = 0;
            lat.j1 = static_cast<int>(lat.eta.size()) - 1;
        }
        // Pin the breakpoints exactly and mirror so that the lattice is symmetric bit for bit.
        const int J = static_cast<int>(lat.eta.size()) - 1;
        for (int j = 0; j <= J / 2; ++j) lat.eta[J - j] = -lat.eta[j];
        if (J % 2 == 0) lat.eta[J / 2] = 0.0;
        lat.eta[lat.j0] = -a2;
        lat.eta[lat.j1] = a2;
        lat.eta.front() = -a1;
        lat.eta.back() = a1;
        return lat;
    }

    [[nodiscard]] int rows() const { return static_cast<int>(eta.size()); }
};

/// Tensor grid over two branches in (s, eta), s being x or the stretched xi. Columns with
/// s <= 0 carry the full lattice, columns with s > 0 only rows j0..j1. The column at s = 0
/// belongs to the wide branch; its rows outside j0..j1 border the vertical wall.
class BranchedGrid {
public:
    BranchedGrid() = default;
    BranchedGrid(std::vector<double> s, EtaLattice lattice) : s_(std::move(s)), lat_(std::move(lattice)) {
        if (s_.size() < 3) throw Error("grid needs at least three columns");
        for (std::size_t i = 1; i < s_.size(); ++i)
            if (!(s_[i] > s_[i - 1])) throw Error("grid columns must increase strictly");
        auto it = std::find(s_.begin(), s_.end(), 0.0);
        if (it == s_.begin() || it == s_.end() || it + 1 == s_.end()) throw Error("grid must contain s = 0 as an interior column");
        i0_ = static_cast<int>(it - s_.begin());
        const int C = columns(), R = lat_.rows();
        first_.assign(C + 1, 0);
        for (int i = 0; i < C; ++i) first_[i + 1] = first_[i] + (rowHi(i) - rowLo(i) + 1);
        coords_.reserve(first_[C]);
        for (int i = 0; i < C; ++i)
            for (int j = rowLo(i); j <= rowHi(i); ++j) coords_.emplace_back(i, j);
        (void)R;
    }

    [[nodiscard]] int columns() const { return static_cast<int>(s_.size()); }
    [[nodiscard]] int rows() const { return lat_.rows(); }
    [[nodiscard]] int i0() const { return i0_; }
    [[nodiscard]] int j0() const { return lat_.j0; }
    [[nodiscard]] int j1() const { return lat_.j1; }
    [[nodiscard]] double s(int i) const { return s_[i]; }
    [[nodiscard]] double eta(int j) const { return lat_.eta[j]; }
    [[nodiscard]] const std::vector<double>& sNodes() const { return s_; }
    [[nodiscard]] const EtaLattice& lattice() const { return lat_; }

    [[nodiscard]] int rowLo(int i) const { return i <= i0_ ? 0 : lat_.j0; }
    [[nodiscard]] int rowHi(int i) const { return i <= i0_ ? lat_.rows() - 1 : lat_.j1; }
    /// Row range of the cells between columns i and i + 1.
    [[nodiscard]] int cellRowLo(int i) const { return i < i0_ ? 0 : lat_.j0; }
    [[nodiscard]] int cellRowHi(int i) const { return i < i0_ ? lat_.rows() - 1 : lat_.j1; }

    [[nodiscard]] int nodeCount() const { return first_.back(); }
    [[nodiscard]] int node(int i, int j) const {
        if (i < 0 || i >= columns() || j < rowLo(i) || j > rowHi(i)) return -1;
        return first_[i] + (j - rowLo(i));
    }
    [[nodiscard]] std::pair<int, int> coords(int n) const { return coords_[n]; }

    /// Column interval containing s (clamped to the grid).
    [[nodiscard]] int locateColumn(double s) const {
        if (s <= s_.front()) return 0;
        if (s >= s_.back()) return columns() - 2;
        auto it = std::upper_bound(s_.begin(), s_.end(), s);
        return static_cast<int>(it - s_.begin()) - 1;
    }
    [[nodiscard]] int locateRow(double e) const {
        const auto& eta = lat_.eta;
        if (e <= eta.front()) return 0;
        if (e >= eta.back()) return rows() - 2;
        auto it = std::upper_bound(eta.begin(), eta.end(), e);
        return static_cast<int>(it - eta.begin()) - 1;
    }

    /// Visit every cell as (i, j) with corners (i..i+1, j..j+1).
    template <class F>
    void forEachCell(F&& f) const {
        for (int i = 0; i + 1 < columns(); ++i)
            for (int j = cellRowLo(i); j < cellRowHi(i); ++j) f(i, j);
    }

    /// Trapezoidal dual-cell areas (ds * deta / 4 per incident cell corner).
    [[nodiscard]] std::vector<double> dualAreas() const {
        std::vector<double> w(nodeCount(), 0.0);
        forEachCell([&](int i, int j) {
            const double a = 0.25 * (s_[i + 1] - s_[i]) * (lat_.eta[j + 1] - lat_.eta[j]);
            w[node(i, j)] += a;
            w[node(i + 1, j)] += a;
            w[node(i, j + 1)] += a;
            w[node(i + 1, j + 1)] += a;
        });
        return w;
    }

    /// Five-point finite-volume stiffness for -d_ss - kappa d_etaeta, assembled cell by cell
    /// so that every Neumann boundary gets the natural half-cell treatment. Cells with
    /// `side` < 0 only left of s = 0, > 0 only right, 0 all.
    [[nodiscard]] Eigen::SparseMatrix<double> stiffness(double kappa, int side = 0) const {
        std::vector<Eigen::Triplet<double>> t;
        t.reserve(static_cast<std::size_t>(nodeCount()) * 9);
        auto edge = [&](int a, int b, double w) {
            t.emplace_back(a, a, w);
            t.emplace_back(b, b, w);
            t.emplace_back(a, b, -w);
            t.emplace_back(b, a, -w);
        };
        forEachCell([&](int i, int j) {
            if (side < 0 && i >= i0_) return;
            if (side > 0 && i < i0_) return;
            const double ds = s_[i + 1] - s_[i], de = lat_.eta[j + 1] - lat_.eta[j];
            const double ws = 0.5 * de / ds, we = 0.5 * kappa * ds / de;
            edge(node(i, j), node(i + 1, j), ws);
            edge(node(i, j + 1), node(i + 1, j + 1), ws);
            edge(node(i, j), node(i, j + 1), we);
            edge(node(i + 1, j), node(i + 1, j + 1), we);
        });
        Eigen::SparseMatrix<double> A(nodeCount(), nodeCount());
        A.setFromTriplets(t.begin(), t.end());
        return A;
    }

    /// Discrete energy sum over cells of the same edge weights as `stiffness`.
    [[nodiscard]] double energy(const std::vector<double>& u, double kappa) const {
        double e = 0.0;
        forEachCell([&](int i, int j) {
            const double ds = s_[i + 1] - s_[i], de = lat_.eta[j + 1] - lat_.eta[j];
            const double ws = 0.5 * de / ds, we = 0.5 * kappa * ds / de;
            const double a = u[node(i, j)], b = u[node(i + 1, j)], c = u[node(i, j + 1)], d = u[node(i + 1, j + 1)];
            e += ws * ((b - a) * (b - a) + (d - c) * (d - c)) + we * ((c - a) * (c - a) + (d - b) * (d - b));
        });
        return e;
    }

    /// Add the load of g(s) along the horizontal wall of the given branch side, integrated
    /// against the piecewise-linear hats by three-point Gauss per edge.
    /// `top` selects eta = +h/2; branch 1 covers s <= 0, branch 2 covers s >= 0.
    void addWallLoad(std::vector<double>& b, int branch, bool top, const std::function<double(double)>& g) const {
        const int ilo = branch == 1 ? 0 : i0_, ihi = branch == 1 ? i0_ : columns() - 1;
        const int j = branch == 1 ? (top ? rows() - 1 : 0) : (top ? lat_.j1 : lat_.j0);
        for (int i = ilo; i < ihi; ++i) {
            const double ds = s_[i + 1] - s_[i];
            double l = 0.0, r = 0.0;
            for (int q = 0; q < 3; ++q) {
                const double t = kGauss3[q], w = kGauss3W[q] * ds * g(s_[i] + t * ds);
                l += (1.0 - t) * w;
                r += t * w;
            }
            b[node(i, j)] += l;
            b[node(i + 1, j)] += r;
        }
    }

    /// Add the volume load of f(s, eta) integrated against the bilinear hats by 3x3 Gauss
    /// per cell.
    void addVolumeLoad(std::vector<double>& b, const std::function<double(double, double)>& f) const {
        forEachCell([&](int i, int j) {
            const double ds = s_[i + 1] - s_[i], de = lat_.eta[j + 1] - lat_.eta[j];
            double c00 = 0.0, c10 = 0.0, c01 = 0.0, c11 = 0.0;
            for (int p = 0; p < 3; ++p)
                for (int q = 0; q < 3; ++q) {
                    const double t = kGauss3[p], u = kGauss3[q];
                    const double w = kGauss3W[p] * kGauss3W[q] * ds * de * f(s_[i] + t * ds, lat_.eta[j] + u * de);
                    c00 += (1 - t) * (1 - u) * w;
                    c10 += t * (1 - u) * w;
                    c01 += (1 - t) * u * w;
                    c11 += t * u * w;
                }
            b[node(i, j)] += c00;
            b[node(i + 1, j)] += c10;
            b[node(i, j + 1)] += c01;
            b[node(i + 1, j + 1)] += c11;
        });
    }

    /// Trapezoid load of g(eta) along the vertical wall at s = 0 (rows outside j0..j1).
    void addVerticalWallLoad(std::vector<double>& b, const std::function<double(double)>& g) const {
        auto seg = [&](int ja, int jb) {
            for (int j = ja; j < jb; ++j) {
                const double half = 0.5 * (lat_.eta[j + 1] - lat_.eta[j]);
                b[node(i0_, j)] += half * g(lat_.eta[j]);
                b[node(i0_, j + 1)] += half * g(lat_.eta[j + 1]);
            }
        };
        seg(0, lat_.j0);
        seg(lat_.j1, rows() - 1);
    }

    /// Trapezoid load of g(eta) along the column i, restricted to rows ja..jb.
    void addColumnLoad(std::vector<double>& b, int i, int ja, int jb, const std::function<double(double)>& g) const {
        for (int j = ja; j < jb; ++j) {
            const double half = 0.5 * (lat_.eta[j + 1] - lat_.eta[j]);
            b[node(i, j)] += half * g(lat_.eta[j]);
            b[node(i, j + 1)] += half * g(lat_.eta[j + 1]);
        }
    }

    /// Trapezoid weights of column i over its own rows.
    [[nodiscard]] std::vector<double> columnWeights(int i, int ja, int jb) const {
        std::vector<double> w(rows(), 0.0);
        for (int j = ja; j < jb; ++j) {
            const double half = 0.5 * (lat_.eta[j + 1] - lat_.eta[j]);
            w[j] += half;
            w[j + 1] += half;
        }
        return w;
    }

    /// eta-mean of nodal values over column i (full column rows).
    [[nodiscard]] double columnMean(const std::vector<double>& u, int i) const {
        return columnMean(u, i, rowLo(i), rowHi(i));
    }
    [[nodiscard]] double columnMean(const std::vector<double>& u, int i, int ja, int jb) const {
        const auto w = columnWeights(i, ja, jb);
        double s = 0.0, len = lat_.eta[jb] - lat_.eta[ja];
        for (int j = ja; j <= jb; ++j) s += w[j] * u[node(i, j)];
        return s / len;
    }

    /// Net FV flux from column i to i + 1 (positive when u increases to the right).
    [[nodiscard]] double crossingFlux(const std::vector<double>& u, int i) const {
        double f = 0.0;
        const double ds = s_[i + 1] - s_[i];
        for (int j = cellRowLo(i); j < cellRowHi(i); ++j) {
            const double ws = 0.5 * (lat_.eta[j + 1] - lat_.eta[j]) / ds;
            f += ws * (u[node(i + 1, j)] - u[node(i, j)]) + ws * (u[node(i + 1, j + 1)] - u[node(i, j + 1)]);
        }
        return f;
    }

private:
    std::vector<double> s_;
    EtaLattice lat_;
    int i0_ = 0;
    std::vector<int> first_;
    std::vector<std::pair<int, int>> coords_;
};

}  // namespace cascade
