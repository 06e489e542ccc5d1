#pragma once

#include "rails/matrix_core.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <sstream>
#include <vector>

namespace rails {

/// Small projected equation  A T Mᵀ + M T Aᵀ + B Bᵀ = 0.
struct ProjectedSystem {
    Dense a;
    Dense m;
    Dense b;
};

inline constexpr Index default_dense_cap = 2000;

/// Kronecker product a ⊗ b.
inline Dense kron(const Dense& a, const Dense& b)
{
    Dense k(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j) k.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return k;
}

namespace detail {

struct SchurBlock {
    Index start;
    Index size;
};

inline std::vector<SchurBlock> schur_blocks(const Dense& s)
{
    std::vector<SchurBlock> blocks;
    const Index n = s.rows();
    for (Index i = 0; i < n;) {
        Index size = (i + 1 < n && s(i + 1, i) != 0.0) ? 2 : 1;
        blocks.push_back({i, size});
        i += size;
    }
    return blocks;
}

// S_ii Y + Y S_jjᵀ = R for 1x1/2x2 diagonal blocks: (I ⊗ S_ii + S_jj ⊗ I) vec(Y) = vec(R).
inline Dense solve_small_sylvester(const Dense& sii, const Dense& sjj, const Dense& r)
{
    const Index p = sii.rows();
    const Index q = sjj.rows();
    Dense k = kron(Dense::Identity(q, q), sii) + kron(sjj, Dense::Identity(p, p));
    Vector rhs = Eigen::Map<const Vector>(r.data(), p * q);
    Vector y = k.fullPivLu().solve(rhs);
    return Eigen::Map<const Dense>(y.data(), p, q);
}

} // namespace detail

/// Solves F T + T Fᵀ + Q = 0 for Hurwitz F by Bartels-Stewart: real Schur
/// form of F, then block back-substitution over the quasi-triangular factor.
/// The returned T is exactly symmetric.
inline Dense solve_standard_dense(const Dense& f, const Dense& q)
{
    const Index n = f.rows();
    require(f.cols() == n, ErrorKind::dimension_mismatch, "solve_standard_dense: F must be square");
    require(q.rows() == n && q.cols() == n, ErrorKind::dimension_mismatch, "solve_standard_dense: Q must match F");
    if (n == 0) return Dense(0, 0);
    require(f.allFinite() && q.allFinite(), ErrorKind::invalid_argument, "solve_standard_dense: non-finite input");

    Eigen::RealSchur<Dense> schur(f);
    require(schur.info() == Eigen::Success, ErrorKind::unstable, "real Schur iteration did not converge");
    const Dense& s = schur.matrixT();
    const Dense& u = schur.matrixU();
    const auto blocks = detail::schur_blocks(s);

    for (const auto& blk : blocks) {
        double re = blk.size == 1 ? s(blk.start, blk.start) : 0.5 * (s(blk.start, blk.start) + s(blk.start + 1, blk.start + 1));
        if (!(re < 0.0)) {
            std::ostringstream msg;
            msg << "eigenvalue with real part " << re << " >= 0; the Lyapunov operator is not stable";
            throw Error(ErrorKind::unstable, msg.str());
        }
    }

    const Dense qhat = u.transpose() * q * u;
    Dense x = Dense::Zero(n, n);
    for (auto jb = blocks.rbegin(); jb != blocks.rend(); ++jb) {
        const Index j0 = jb->start, bj = jb->size;
        const Index tail = n - (j0 + bj);
        Dense rhs = -qhat.middleCols(j0, bj);
        if (tail > 0) rhs.noalias() -= x.rightCols(tail) * s.block(j0, j0 + bj, bj, tail).transpose();

        const Dense sjj = s.block(j0, j0, bj, bj);
        Dense y = Dense::Zero(n, bj);
        for (auto ib = blocks.rbegin(); ib != blocks.rend(); ++ib) {
            const Index i0 = ib->start, bi = ib->size;
            const Index below = n - (i0 + bi);
            Dense r = rhs.middleRows(i0, bi);
            if (below > 0) r.noalias() -= s.block(i0, i0 + bi, bi, below) * y.bottomRows(below);
            y.middleRows(i0, bi) = detail::solve_small_sylvester(s.block(i0, i0, bi, bi), sjj, r);
        }
        x.middleCols(j0, bj) = y;
    }

    Dense t = u * x * u.transpose();
    return 0.5 * (t + t.transpose());
}

/// Dense solve of the projected generalized equation through M⁻¹: with
/// F = M⁻¹A and G = M⁻¹B it becomes F T + T Fᵀ + G Gᵀ = 0.
inline Dense solve_projected(const ProjectedSystem& sys, Index max_dimension = default_dense_cap)
{
    const Index d = sys.a.rows();
    require(sys.a.cols() == d && sys.m.rows() == d && sys.m.cols() == d, ErrorKind::dimension_mismatch,
            "solve_projected: projected A and M must be square of equal size");
    require(sys.b.rows() == d, ErrorKind::dimension_mismatch, "solve_projected: projected B row count mismatch");
    require(d <= max_dimension, ErrorKind::dimension_cap,
            "projected dimension " + std::to_string(d) + " exceeds cap " + std::to_string(max_dimension));
    if (d == 0) return Dense(0, 0);

    Eigen::PartialPivLU<Dense> lu(sys.m);
    const Vector pivots = lu.matrixLU().diagonal().cwiseAbs();
    // The condition estimate alone can miss an exactly zero pivot.
    const double rcond = pivots.minCoeff() > 1e-14 * pivots.maxCoeff() ? lu.rcond() : 0.0;
    if (!(rcond >= 1e-12)) {
        std::ostringstream msg;
        msg << "projected mass matrix has reciprocal condition estimate " << rcond;
        throw Error(ErrorKind::singular, msg.str());
    }
    const Dense f = lu.solve(sys.a);
    const Dense g = lu.solve(sys.b);
    return solve_standard_dense(f, g * g.transpose());
}

} // namespace rails
