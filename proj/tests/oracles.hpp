#pragma once

// Brute-force reference computations used only by the tests. Each one goes
// through plain dense Eigen and never through the solver's code paths.

#include "rails/rails.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <random>

namespace oracle {

using rails::Dense;
using rails::Index;
using rails::Vector;

inline Dense residual(const Dense& a, const Dense& m, const Dense& b, const Dense& c)
{
    return a * c * m.transpose() + m * c * a.transpose() + b * b.transpose();
}

inline double sym_norm2(const Dense& r)
{
    Eigen::SelfAdjointEigenSolver<Dense> eig(0.5 * (r + r.transpose()), Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

inline double relative_residual(const Dense& a, const Dense& m, const Dense& b, const Dense& c)
{
    return sym_norm2(residual(a, m, b, c)) / sym_norm2(b * b.transpose());
}

// Column space via full-pivoting QR.
inline Dense range_basis(const Dense& w, double tol = 1e-10)
{
    Eigen::ColPivHouseholderQR<Dense> qr(w);
    qr.setThreshold(tol);
    const Index r = qr.rank();
    Dense q = qr.householderQ() * Dense::Identity(w.rows(), r);
    return q;
}

// Largest sine of the principal angles between two subspaces with orthonormal
// bases. For unequal dimensions the angles are those of the smaller space
// against the larger one, so containment gives zero.
inline double max_principal_sine(const Dense& q1, const Dense& q2)
{
    const Dense& small = q1.cols() <= q2.cols() ? q1 : q2;
    const Dense& large = q1.cols() <= q2.cols() ? q2 : q1;
    if (small.cols() == 0) return 0.0;
    const Dense p = small - large * (large.transpose() * small);
    return Eigen::JacobiSVD<Dense>(p).singularValues()(0);
}

// Orthonormal basis of span{B, AB, ..., A^{k-1}B} by block Arnoldi.
inline Dense krylov_basis(const Dense& a, const Dense& b, Index k)
{
    Dense q = range_basis(b);
    Dense last = q;
    for (Index i = 1; i < k; ++i) {
        Dense w = a * last;
        for (int pass = 0; pass < 2; ++pass) w -= q * (q.transpose() * w);
        last = range_basis(w);
        Dense next(q.rows(), q.cols() + last.cols());
        next << q, last;
        q = std::move(next);
    }
    return q;
}

inline Dense random_matrix(Index r, Index c, unsigned seed)
{
    std::mt19937 gen(seed);
    std::normal_distribution<double> d;
    Dense m(r, c);
    for (Index j = 0; j < c; ++j)
        for (Index i = 0; i < r; ++i) m(i, j) = d(gen);
    return m;
}

inline Dense random_spd(Index n, unsigned seed)
{
    Dense g = random_matrix(n, n, seed);
    return g * g.transpose() + static_cast<double>(n) * Dense::Identity(n, n);
}

// Stable dense matrix: random with spectrum shifted into the left half-plane.
inline Dense random_stable(Index n, unsigned seed)
{
    Dense g = random_matrix(n, n, seed) / std::sqrt(static_cast<double>(n));
    Eigen::EigenSolver<Dense> es(g, false);
    const double shift = es.eigenvalues().real().maxCoeff() + 1.0;
    return g - shift * Dense::Identity(n, n);
}

inline Dense explicit_schur(const Dense& a, Index na)
{
    const Index nd = a.rows() - na;
    const Dense a11 = a.topLeftCorner(na, na), a12 = a.topRightCorner(na, nd);
    const Dense a21 = a.bottomLeftCorner(nd, na), a22 = a.bottomRightCorner(nd, nd);
    return a22 - a21 * a11.partialPivLu().solve(a12);
}

} // namespace oracle
