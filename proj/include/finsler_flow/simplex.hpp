#pragma once

#include "finsler_flow/dense.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace finsler_flow {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

const char* to_string(LpStatus s);

template <typename Scalar>
struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    Scalar objective{};
    VectorX<Scalar> x;
    Scalar infeasibility{}; // phase-one optimum
    int pivots = 0;
};

/// Dense two-phase tableau simplex for
///     minimize c'x  subject to  A x = b,  x >= 0.
/// Bland's rule throughout, so it terminates on degenerate problems.
/// `feasibility_tol` bounds the phase-one optimum accepted as feasible.
template <typename Scalar>
LpResult<Scalar> solve_lp(const MatrixX<Scalar>& a, const VectorX<Scalar>& b, const VectorX<Scalar>& c,
                          Scalar feasibility_tol = Scalar(1e-9), int max_pivots = 10000)
{
    using std::abs;
    const Eigen::Index m = a.rows();
    const Eigen::Index n = a.cols();
    const Scalar eps = Scalar(1e-12) * std::max<Scalar>(Scalar(1), a.cwiseAbs().maxCoeff());

    LpResult<Scalar> res;
    res.x = VectorX<Scalar>::Zero(n);

    // Columns: [x (n) | artificial (m) | rhs]; last row holds the objective.
    MatrixX<Scalar> t = MatrixX<Scalar>::Zero(m + 1, n + m + 1);
    std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) {
        const Scalar sign = b[i] < Scalar(0) ? Scalar(-1) : Scalar(1);
        t.row(i).head(n) = sign * a.row(i);
        t(i, n + i) = Scalar(1);
        t(i, n + m) = sign * b[i];
        basis[static_cast<std::size_t>(i)] = n + i;
    }

    auto pivot = [&](Eigen::Index row, Eigen::Index col) {
        t.row(row) /= t(row, col);
        for (Eigen::Index r = 0; r < t.rows(); ++r)
            if (r != row && t(r, col) != Scalar(0))
                t.row(r) -= t(r, col) * t.row(row);
        basis[static_cast<std::size_t>(row)] = col;
        ++res.pivots;
    };

    // Simplex iterations over columns [0, ncols): 0 optimal, 1 unbounded, 2 pivot limit.
    auto iterate = [&](Eigen::Index ncols, Eigen::Index nrows) -> int {
        for (;;) {
            if (res.pivots >= max_pivots)
                return 2;
            Eigen::Index enter = -1;
            for (Eigen::Index j = 0; j < ncols; ++j)
                if (t(t.rows() - 1, j) < -eps) {
                    enter = j;
                    break;
                }
            if (enter < 0)
                return 0;
            Eigen::Index leave = -1;
            Scalar best = std::numeric_limits<Scalar>::infinity();
            for (Eigen::Index i = 0; i < nrows; ++i) {
                if (t(i, enter) > eps) {
                    const Scalar ratio = t(i, t.cols() - 1) / t(i, enter);
                    if (ratio < best - eps ||
                        (abs(ratio - best) <= eps && leave >= 0 &&
                         basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
                        best = ratio;
                        leave = i;
                    }
                }
            }
            if (leave < 0)
                return 1;
            pivot(leave, enter);
        }
    };

    // Phase one: minimize the sum of artificials (reduced costs = -column sums).
    t.row(m).setZero();
    for (Eigen::Index i = 0; i < m; ++i) {
        t.row(m).head(n) -= t.row(i).head(n);
        t(m, n + m) -= t(i, n + m);
    }
    if (iterate(n + m, m) == 2) {
        res.status = LpStatus::IterationLimit;
        return res;
    }
    res.infeasibility = -t(m, n + m);
    if (res.infeasibility > feasibility_tol) {
        res.status = LpStatus::Infeasible;
        return res;
    }

    // Drive artificials out of the basis; rows where that is impossible are redundant.
    std::vector<bool> keep(static_cast<std::size_t>(m), true);
    for (Eigen::Index i = 0; i < m; ++i) {
        if (basis[static_cast<std::size_t>(i)] < n)
            continue;
        Eigen::Index col = -1;
        for (Eigen::Index j = 0; j < n; ++j)
            if (abs(t(i, j)) > eps) {
                col = j;
                break;
            }
        if (col >= 0)
            pivot(i, col);
        else
            keep[static_cast<std::size_t>(i)] = false;
    }
    {
        Eigen::Index rows = 0;
        for (Eigen::Index i = 0; i < m; ++i)
            if (keep[static_cast<std::size_t>(i)]) {
                t.row(rows) = t.row(i);
                basis[static_cast<std::size_t>(rows)] = basis[static_cast<std::size_t>(i)];
                ++rows;
            }
        MatrixX<Scalar> reduced(rows + 1, n + 1);
        reduced.topLeftCorner(rows, n) = t.topLeftCorner(rows, n);
        reduced.topRightCorner(rows, 1) = t.block(0, n + m, rows, 1);
        reduced.row(rows).setZero();
        t = std::move(reduced);
        basis.resize(static_cast<std::size_t>(rows));
    }

    // Phase two.
    const Eigen::Index rows = t.rows() - 1;
    t.row(rows).head(n) = c.transpose();
    t(rows, n) = Scalar(0);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Scalar cb = c[basis[static_cast<std::size_t>(i)]];
        if (cb != Scalar(0))
            t.row(rows) -= cb * t.row(i);
    }
    const int rc = iterate(n, rows);
    if (rc == 1) {
        res.status = LpStatus::Unbounded;
        return res;
    }
    if (rc == 2) {
        res.status = LpStatus::IterationLimit;
        return res;
    }
    for (Eigen::Index i = 0; i < rows; ++i)
        res.x[basis[static_cast<std::size_t>(i)]] = t(i, n);
    res.objective = c.dot(res.x);
    res.status = LpStatus::Optimal;
    return res;
}

} // namespace finsler_flow
