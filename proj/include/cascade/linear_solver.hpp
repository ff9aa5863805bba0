#pragma once

#include "cascade/config.hpp"
#include "cascade/error.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <vector>

namespace cascade {

/// Symmetric positive definite sparse solve. The direct path is the default; the
/// diagonally preconditioned CG path stops at `tol` relative residual.
inline Eigen::VectorXd solveSpd(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b,
                                LinearSolverKind kind, double tol) {
    if (b.size() == 0) return {};
    if (b.lpNorm<Eigen::Infinity>() == 0.0) return Eigen::VectorXd::Zero(b.size());
    if (kind == LinearSolverKind::Direct) {
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
        if (ldlt.info() != Eigen::Success) throw SolverError("sparse factorization failed");
        Eigen::VectorXd x = ldlt.solve(b);
        if (ldlt.info() != Eigen::Success) throw SolverError("sparse back-substitution failed");
        return x;
    }
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper,
                             Eigen::DiagonalPreconditioner<double>> cg;
    cg.setTolerance(tol);
    cg.setMaxIterations(std::max<Eigen::Index>(1000, 20 * A.rows()));
    cg.compute(A);
    Eigen::VectorXd x = cg.solve(b);
    if (cg.info() != Eigen::Success) throw SolverError("conjugate gradient did not converge");
    return x;
}

/// Solve A u = b with the nodes flagged in `fixed` held at zero.
inline std::vector<double> solveWithZeroNodes(const Eigen::SparseMatrix<double>& A, const std::vector<double>& b,
                                              const std::vector<char>& fixed, LinearSolverKind kind, double tol) {
    const int n = static_cast<int>(b.size());
    std::vector<int> map(n, -1);
    int m = 0;
    for (int i = 0; i < n; ++i)
        if (!fixed[i]) map[i] = m++;
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(A.nonZeros());
    for (int k = 0; k < A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) {
            const int r = map[it.row()], c = map[it.col()];
            if (r >= 0 && c >= 0) t.emplace_back(r, c, it.value());
        }
    Eigen::SparseMatrix<double> Ar(m, m);
    Ar.setFromTriplets(t.begin(), t.end());
    Eigen::VectorXd br(m);
    for (int i = 0; i < n; ++i)
        if (map[i] >= 0) br[map[i]] = b[i];
    const Eigen::VectorXd xr = solveSpd(Ar, br, kind, tol);
    std::vector<double> x(n, 0.0);
    for (int i = 0; i < n; ++i)
        if (map[i] >= 0) x[i] = xr[map[i]];
    return x;
}

}  // namespace cascade
