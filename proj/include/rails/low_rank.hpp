#pragma once

#include "rails/matrix_core.hpp"

namespace rails {

/// C ≈ V T Vᵀ with orthonormal V (n×d) and symmetric T (d×d).
struct LowRankSolution {
    Dense v;
    Dense t;

    static LowRankSolution empty(Index n) { return {Dense(n, 0), Dense(0, 0)}; }

    Index dimension() const noexcept { return v.rows(); }
    Index rank() const noexcept { return v.cols(); }

    /// Explicit n×n covariance; only sensible at oracle scale.
    Dense dense() const
    {
        if (rank() == 0) return Dense::Zero(dimension(), dimension());
        return v * t * v.transpose();
    }

    double orthonormality_error() const
    {
        return (v.transpose() * v - Dense::Identity(rank(), rank())).norm();
    }
};

inline void check_consistent(const LowRankSolution& sol)
{
    require(sol.t.rows() == sol.rank() && sol.t.cols() == sol.rank(), ErrorKind::dimension_mismatch,
            "low-rank solution: core T must be d×d with d = columns of V");
}

} // namespace rails
