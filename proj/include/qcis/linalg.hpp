#pragma once

// Exact dense linear algebra over a field scalar (Rational, GaussianRational)
// on Eigen matrices: reduced row echelon form, nullspace bases, linear solves
// and determinants. Pivoting picks any nonzero entry; with exact arithmetic
// there is no magnitude to prefer.

#include "qcis/scalars.hpp"

#include <Eigen/Core>

#include <optional>
#include <vector>

namespace Eigen {

template <>
struct NumTraits<qcis::Rational> {
    using Real = qcis::Rational;
    using NonInteger = qcis::Rational;
    using Literal = qcis::Rational;
    using Nested = qcis::Rational;
    enum {
        IsComplex = 0,
        IsInteger = 0,
        IsSigned = 1,
        RequireInitialization = 1,
        ReadCost = 8,
        AddCost = 20,
        MulCost = 40,
    };
    static int digits10() { return 0; }
    static qcis::Rational epsilon() { return {}; }
    static qcis::Rational dummy_precision() { return {}; }
};

template <>
struct NumTraits<qcis::GaussianRational> {
    using Real = qcis::Rational;
    using NonInteger = qcis::GaussianRational;
    using Literal = qcis::GaussianRational;
    using Nested = qcis::GaussianRational;
    enum {
        IsComplex = 1,
        IsInteger = 0,
        IsSigned = 1,
        RequireInitialization = 1,
        ReadCost = 8,
        AddCost = 20,
        MulCost = 40,
    };
    static int digits10() { return 0; }
    static qcis::GaussianRational epsilon() { return {}; }
    static qcis::GaussianRational dummy_precision() { return {}; }
};

} // namespace Eigen

namespace qcis {

template <class K>
using MatrixX = Eigen::Matrix<K, Eigen::Dynamic, Eigen::Dynamic>;
template <class K>
using VectorX = Eigen::Matrix<K, Eigen::Dynamic, 1>;

/// In-place reduced row echelon form; returns the pivot columns.
template <class K>
std::vector<int> rref_in_place(MatrixX<K>& a)
{
    const int rows = static_cast<int>(a.rows());
    const int cols = static_cast<int>(a.cols());
    std::vector<int> pivots;
    int r = 0;
    for (int c = 0; c < cols && r < rows; ++c) {
        int p = -1;
        for (int i = r; i < rows; ++i)
            if (!scalar_is_zero(a(i, c))) {
                p = i;
                break;
            }
        if (p < 0)
            continue;
        if (p != r)
            a.row(p).swap(a.row(r));
        K inv = K(1) / a(r, c);
        for (int j = c; j < cols; ++j)
            a(r, j) = a(r, j) * inv;
        for (int i = 0; i < rows; ++i) {
            if (i == r || scalar_is_zero(a(i, c)))
                continue;
            K f = a(i, c);
            for (int j = c; j < cols; ++j)
                a(i, j) = a(i, j) - f * a(r, j);
        }
        pivots.push_back(c);
        ++r;
    }
    return pivots;
}

template <class K>
int rank(MatrixX<K> a)
{
    return static_cast<int>(rref_in_place(a).size());
}

/// Basis of the right nullspace (columns of the returned matrix).
template <class K>
MatrixX<K> nullspace(MatrixX<K> a)
{
    const int cols = static_cast<int>(a.cols());
    std::vector<int> pivots = rref_in_place(a);
    std::vector<bool> is_pivot(static_cast<std::size_t>(cols), false);
    for (int c : pivots)
        is_pivot[static_cast<std::size_t>(c)] = true;
    const int nullity = cols - static_cast<int>(pivots.size());
    MatrixX<K> basis = MatrixX<K>::Zero(cols, nullity);
    int col = 0;
    for (int free = 0; free < cols; ++free) {
        if (is_pivot[static_cast<std::size_t>(free)])
            continue;
        basis(free, col) = K(1);
        for (std::size_t r = 0; r < pivots.size(); ++r)
            basis(pivots[r], col) = -a(static_cast<int>(r), free);
        ++col;
    }
    return basis;
}

template <class K>
struct AffineSolution {
    VectorX<K> particular;   ///< one solution with all free variables set to zero
    MatrixX<K> kernel_basis; ///< columns span the solution space of Ax = 0
};

/// Solves A x = b exactly. Empty optional when the system is infeasible.
template <class K>
std::optional<AffineSolution<K>> solve_affine(const MatrixX<K>& a, const VectorX<K>& b)
{
    const int rows = static_cast<int>(a.rows());
    const int cols = static_cast<int>(a.cols());
    MatrixX<K> aug(rows, cols + 1);
    aug.leftCols(cols) = a;
    aug.col(cols) = b;
    std::vector<int> pivots = rref_in_place(aug);
    if (!pivots.empty() && pivots.back() == cols)
        return std::nullopt; // a pivot in the augmented column: inconsistent
    AffineSolution<K> sol;
    sol.particular = VectorX<K>::Zero(cols);
    for (std::size_t r = 0; r < pivots.size(); ++r)
        sol.particular(pivots[r]) = aug(static_cast<int>(r), cols);
    sol.kernel_basis = nullspace(MatrixX<K>(a));
    return sol;
}

/// Exact determinant by fraction-free-ish Gaussian elimination with division.
template <class K>
K determinant(MatrixX<K> a)
{
    const int n = static_cast<int>(a.rows());
    K det = K(1);
    for (int c = 0; c < n; ++c) {
        int p = -1;
        for (int i = c; i < n; ++i)
            if (!scalar_is_zero(a(i, c))) {
                p = i;
                break;
            }
        if (p < 0)
            return K{};
        if (p != c) {
            a.row(p).swap(a.row(c));
            det = -det;
        }
        det *= a(c, c);
        K inv = K(1) / a(c, c);
        for (int i = c + 1; i < n; ++i) {
            if (scalar_is_zero(a(i, c)))
                continue;
            K f = a(i, c) * inv;
            for (int j = c; j < n; ++j)
                a(i, j) = a(i, j) - f * a(c, j);
        }
    }
    return det;
}

/// True when v lies in the column span of basis (exact).
template <class K>
bool in_column_span(const MatrixX<K>& basis, const VectorX<K>& v)
{
    if (basis.cols() == 0) {
        for (int i = 0; i < v.size(); ++i)
            if (!scalar_is_zero(v(i)))
                return false;
        return true;
    }
    return solve_affine(basis, v).has_value();
}

} // namespace qcis
