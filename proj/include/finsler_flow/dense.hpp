#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace finsler_flow {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vector = VectorX<double>;
using Matrix = MatrixX<double>;

/// Componentwise order relations on R^n.
///   x <= y  : every coordinate,
///   x <  y  : x <= y and x != y,
///   x << y  : strict in every coordinate.
template <typename DerivedA, typename DerivedB>
bool order_le(const Eigen::MatrixBase<DerivedA>& x, const Eigen::MatrixBase<DerivedB>& y)
{
    return (x.array() <= y.array()).all();
}

template <typename DerivedA, typename DerivedB>
bool order_lt(const Eigen::MatrixBase<DerivedA>& x, const Eigen::MatrixBase<DerivedB>& y)
{
    return order_le(x, y) && (x.array() != y.array()).any();
}

template <typename DerivedA, typename DerivedB>
bool order_ll(const Eigen::MatrixBase<DerivedA>& x, const Eigen::MatrixBase<DerivedB>& y)
{
    return (x.array() < y.array()).all();
}

/// x ∨ y
template <typename DerivedA, typename DerivedB>
auto join(const Eigen::MatrixBase<DerivedA>& x, const Eigen::MatrixBase<DerivedB>& y)
{
    return x.cwiseMax(y).eval();
}

/// x ∧ y
template <typename DerivedA, typename DerivedB>
auto meet(const Eigen::MatrixBase<DerivedA>& x, const Eigen::MatrixBase<DerivedB>& y)
{
    return x.cwiseMin(y).eval();
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& x)
{
    return x.allFinite();
}

} // namespace finsler_flow
