#pragma once

#include "rails/low_rank.hpp"
#include "rails/random.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>

namespace rails {

struct EofSet {
    /// Leading eigenvalues of C̃, descending, clamped at zero.
    Vector eigenvalues;
    /// eigenvalues / (sum over all modes of the solution).
    Vector weighted_eigenvalues;
    /// Orthonormal EOFs, one per column.
    Dense eofs;
    double total_variance = 0.0;
};

namespace detail {

struct SortedEigen {
    Vector values;  // descending
    Dense vectors;
};

inline SortedEigen sorted_eigen(const Dense& t)
{
    Eigen::SelfAdjointEigenSolver<Dense> eig(0.5 * (t + t.transpose()));
    const Index d = t.rows();
    SortedEigen out{Vector(d), Dense(d, d)};
    for (Index i = 0; i < d; ++i) {
        out.values(i) = eig.eigenvalues()(d - 1 - i);
        out.vectors.col(i) = eig.eigenvectors().col(d - 1 - i);
    }
    return out;
}

} // namespace detail

/// The first k EOFs of C̃ = V T Vᵀ. Eigenvalues of C̃ are those of T and the
/// EOFs are V times the eigenvectors of T.
inline EofSet eofs(const LowRankSolution& sol, Index k)
{
    check_consistent(sol);
    require(k >= 0 && k <= sol.rank(), ErrorKind::invalid_argument,
            "eofs: requested " + std::to_string(k) + " modes from a rank-" + std::to_string(sol.rank()) + " solution");
    EofSet out;
    if (sol.rank() == 0) {
        out.eigenvalues = Vector(0);
        out.weighted_eigenvalues = Vector(0);
        out.eofs = Dense(sol.dimension(), 0);
        return out;
    }
    auto se = detail::sorted_eigen(sol.t);
    Vector all = se.values.cwiseMax(0.0);
    out.total_variance = all.sum();
    out.eigenvalues = all.head(k);
    out.weighted_eigenvalues = out.total_variance > 0.0 ? Vector(out.eigenvalues / out.total_variance) : Vector::Zero(k);
    out.eofs = sol.v * se.vectors.leftCols(k);
    return out;
}

/// Log-density of the stationary Gaussian N(x_star, C̃), restricted to
/// Range(V) for rank-deficient C̃. Returns -inf off the support.
inline double gaussian_logpdf(const Vector& x, const Vector& x_star, const LowRankSolution& sol)
{
    check_consistent(sol);
    require(x.size() == sol.dimension() && x_star.size() == sol.dimension(), ErrorKind::dimension_mismatch,
            "gaussian_logpdf: vector dimension mismatch");
    auto se = detail::sorted_eigen(sol.t);
    const Index r = sol.rank();
    for (Index i = 0; i < r; ++i)
        if (!(se.values(i) > 0.0))
            throw Error(ErrorKind::invalid_covariance,
                        "core eigenvalue " + std::to_string(se.values(i)) + " is not positive");

    const Vector delta = x - x_star;
    const Vector y = sol.v.transpose() * delta;
    const double off = (delta - sol.v * y).norm();
    if (off > 1e-8 * delta.norm()) return -std::numeric_limits<double>::infinity();

    const Vector z = se.vectors.transpose() * y;
    double quad = 0.0, logdet = 0.0;
    for (Index i = 0; i < r; ++i) {
        quad += z(i) * z(i) / se.values(i);
        logdet += std::log(se.values(i));
    }
    return -0.5 * (static_cast<double>(r) * std::log(2.0 * std::numbers::pi) + logdet + quad);
}

/// x_star + V T^{1/2} Z, one sample per column.
inline Dense sample_stationary(const LowRankSolution& sol, const Vector& x_star, Index count, std::uint64_t seed)
{
    check_consistent(sol);
    require(x_star.size() == sol.dimension(), ErrorKind::dimension_mismatch, "sample_stationary: x_star dimension mismatch");
    require(count >= 0, ErrorKind::invalid_argument, "sample_stationary: negative count");
    Dense samples = x_star.replicate(1, count);
    if (sol.rank() == 0) return samples;
    auto se = detail::sorted_eigen(sol.t);
    const Dense factor = sol.v * se.vectors * se.values.cwiseMax(0.0).cwiseSqrt().asDiagonal();
    samples.noalias() += factor * random_gaussian(sol.rank(), count, seed);
    return samples;
}

/// eofs.csv: header row of eigenvalues, then one row per grid point.
inline void write_eofs_csv(std::ostream& out, const EofSet& set)
{
    out.precision(17);
    for (Index j = 0; j < set.eofs.cols(); ++j) out << (j ? "," : "") << set.eigenvalues(j);
    out << '\n';
    for (Index i = 0; i < set.eofs.rows(); ++i) {
        for (Index j = 0; j < set.eofs.cols(); ++j) out << (j ? "," : "") << set.eofs(i, j);
        out << '\n';
    }
}

inline void write_eigenvalues_csv(std::ostream& out, const EofSet& set)
{
    out.precision(17);
    out << "index,eigenvalue,weighted\n";
    for (Index i = 0; i < set.eigenvalues.size(); ++i)
        out << i + 1 << ',' << set.eigenvalues(i) << ',' << set.weighted_eigenvalues(i) << '\n';
}

} // namespace rails
