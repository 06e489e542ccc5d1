#pragma once

#include "rails/matrix_core.hpp"

namespace rails {

struct Orthonormalized {
    Dense q;
    Index kept = 0;
};

namespace detail {

inline Orthonormalized orthonormalize_impl(const Dense& w, const Dense* against, double drop_tol)
{
    require(drop_tol > 0.0, ErrorKind::invalid_argument, "orthonormalize: drop_tol must be positive");
    if (against)
        require(against->rows() == w.rows(), ErrorKind::dimension_mismatch,
                "orthonormalize: basis has " + std::to_string(against->rows()) + " rows, input has " +
                    std::to_string(w.rows()));

    Dense q(w.rows(), w.cols());
    Index kept = 0;
    for (Index j = 0; j < w.cols(); ++j) {
        Vector v = w.col(j);
        const double original = v.norm();
        if (original == 0.0 || !std::isfinite(original)) continue;
        for (int pass = 0; pass < 2; ++pass) {
            if (against && against->cols() > 0) v -= *against * (against->transpose() * v);
            for (Index i = 0; i < kept; ++i) v -= q.col(i) * q.col(i).dot(v);
        }
        const double remaining = v.norm();
        if (remaining < drop_tol * original) continue;
        q.col(kept++) = v / remaining;
    }
    q.conservativeResize(Eigen::NoChange, kept);
    return {std::move(q), kept};
}

} // namespace detail

/// Two-pass modified Gram-Schmidt. Columns whose norm after projection drops
/// below drop_tol times their original norm are discarded.
inline Orthonormalized orthonormalize(const Dense& w, double drop_tol = 1e-8)
{
    return detail::orthonormalize_impl(w, nullptr, drop_tol);
}

/// As above, additionally orthogonal to the orthonormal columns of `against`.
inline Orthonormalized orthonormalize(const Dense& w, const Dense& against, double drop_tol = 1e-8)
{
    return detail::orthonormalize_impl(w, &against, drop_tol);
}

} // namespace rails
