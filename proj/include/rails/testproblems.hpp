#pragma once

#include "rails/matrix_core.hpp"
#include "rails/random.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace rails::testproblems {

struct TestProblem {
    SparseMatrix a;
    SparseMatrix m;
    /// Rows that may carry stochastic forcing.
    std::vector<Index> sites;
    std::vector<Index> algebraic_rows;
    /// Diagonal shift actually used (gen_dae only).
    double shift = 0.0;

    Index n() const noexcept { return a.rows(); }
};

/// A = scale (n+1)² tridiag(1, -2, 1), M = I, every row a forcing site.
inline TestProblem gen_diffusion(Index n, double scale = 1.0)
{
    require(n >= 2, ErrorKind::invalid_argument, "gen_diffusion: n must be at least 2");
    require(scale > 0.0, ErrorKind::invalid_argument, "gen_diffusion: scale must be positive");
    const double h = scale * static_cast<double>((n + 1) * (n + 1));
    std::vector<Triplet> t;
    for (Index i = 0; i < n; ++i) {
        t.push_back({i, i, -2.0 * h});
        if (i > 0) t.push_back({i, i - 1, h});
        if (i + 1 < n) t.push_back({i, i + 1, h});
    }
    TestProblem p;
    p.a = SparseMatrix(n, n, t);
    p.m = SparseMatrix::identity(n);
    for (Index i = 0; i < n; ++i) p.sites.push_back(i);
    return p;
}

namespace detail {

// Largest eigenvalue of the symmetric part; dense up to 500, Gershgorin bound beyond.
inline double symmetric_part_bound(const Dense& s)
{
    const Dense sym = 0.5 * (s + s.transpose());
    if (s.rows() <= 500) return Eigen::SelfAdjointEigenSolver<Dense>(sym, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    double bound = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < sym.rows(); ++i) bound = std::max(bound, sym(i, i) + sym.row(i).cwiseAbs().sum() - std::abs(sym(i, i)));
    return bound;
}

} // namespace detail

/// DAE triple with algebraic rows first: A11 = -I, sparse random couplings
/// A12, A21 of size `coupling`, A22 = D - shift·I with D a random sparse
/// zero-diagonal matrix, M = blockdiag(0, I). The shift is doubled (at most 10
/// times) until S = A22 + A21 A12 has negative definite symmetric part, which
/// makes every Galerkin projection of S stable as well. Forcing sites are the
/// first ceil(n_diff / 4) differential rows.
inline TestProblem gen_dae(Index n_diff, Index n_alg, double coupling, double shift, std::uint64_t seed)
{
    require(n_diff >= 1, ErrorKind::invalid_argument, "gen_dae: n_diff must be at least 1");
    require(n_alg >= 1, ErrorKind::invalid_argument, "gen_dae: n_alg must be at least 1");
    require(shift > 0.0, ErrorKind::invalid_argument, "gen_dae: shift must be positive");

    Rng rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_int_distribution<Index> pick_diff(0, n_diff - 1);

    const Index n = n_diff + n_alg;
    Dense a12 = Dense::Zero(n_alg, n_diff), a21 = Dense::Zero(n_diff, n_alg);
    if (coupling != 0.0) {
        for (Index i = 0; i < n_alg; ++i)
            for (int r = 0; r < 2; ++r) {
                Index j = pick_diff(rng);
                a12(i, j) += coupling * unit(rng);
            }
        for (Index j = 0; j < n_alg; ++j)
            for (int r = 0; r < 2; ++r) {
                Index i = pick_diff(rng);
                a21(i, j) += coupling * unit(rng);
            }
    }

    Dense d = Dense::Zero(n_diff, n_diff);
    for (Index i = 0; i + 1 < n_diff; ++i) {
        d(i, i + 1) = unit(rng);
        d(i + 1, i) = unit(rng);
    }
    if (n_diff > 2)
        for (Index i = 0; i < n_diff; ++i) {
            Index j = pick_diff(rng);
            if (j != i) d(i, j) += 0.5 * unit(rng);
        }

    const Dense coupled = a21 * a12;
    double used = shift;
    int doublings = 0;
    while (detail::symmetric_part_bound(d + coupled - used * Dense::Identity(n_diff, n_diff)) >= 0.0) {
        if (++doublings > 10) throw Error(ErrorKind::unstable, "gen_dae: could not stabilize after 10 shift doublings");
        used *= 2.0;
    }

    std::vector<Triplet> t;
    for (Index i = 0; i < n_alg; ++i) t.push_back({i, i, -1.0});
    for (Index i = 0; i < n_alg; ++i)
        for (Index j = 0; j < n_diff; ++j)
            if (a12(i, j) != 0.0) t.push_back({i, n_alg + j, a12(i, j)});
    for (Index i = 0; i < n_diff; ++i)
        for (Index j = 0; j < n_alg; ++j)
            if (a21(i, j) != 0.0) t.push_back({n_alg + i, j, a21(i, j)});
    for (Index i = 0; i < n_diff; ++i) {
        for (Index j = 0; j < n_diff; ++j)
            if (i != j && d(i, j) != 0.0) t.push_back({n_alg + i, n_alg + j, d(i, j)});
        t.push_back({n_alg + i, n_alg + i, -used});
    }

    std::vector<Triplet> mt;
    for (Index i = n_alg; i < n; ++i) mt.push_back({i, i, 1.0});

    TestProblem p;
    p.a = SparseMatrix(n, n, t);
    p.m = SparseMatrix(n, n, mt);
    p.shift = used;
    for (Index i = 0; i < n_alg; ++i) p.algebraic_rows.push_back(i);
    const Index surface = (n_diff + 3) / 4;
    for (Index i = 0; i < surface; ++i) p.sites.push_back(n_alg + i);
    return p;
}

enum class ForcingPattern { uncorrelated_columns, row_sum_vector, diagonal_surface };

inline const char* to_string(ForcingPattern p)
{
    switch (p) {
    case ForcingPattern::uncorrelated_columns: return "uncorrelated";
    case ForcingPattern::row_sum_vector: return "row-sum";
    case ForcingPattern::diagonal_surface: return "diagonal";
    }
    return "unknown";
}

inline std::optional<ForcingPattern> parse_pattern(const std::string& s)
{
    if (s == "uncorrelated") return ForcingPattern::uncorrelated_columns;
    if (s == "row-sum") return ForcingPattern::row_sum_vector;
    if (s == "diagonal") return ForcingPattern::diagonal_surface;
    return std::nullopt;
}

struct ForcingMatrix {
    Dense b;
    ForcingPattern pattern = ForcingPattern::uncorrelated_columns;
    double magnitude = 0.0;
};

/// Uncorrelated: one column sigma·w_i·e_i per site. Row-sum: the single
/// column B·1 of the uncorrelated matrix. Diagonal: diag(B·1) restricted to
/// its nonzero rows. `weights` (one per site) default to 1.
inline ForcingMatrix gen_forcing(const std::vector<Index>& sites, Index n, ForcingPattern pattern, double sigma,
                                 const std::vector<double>& weights = {})
{
    require(!sites.empty(), ErrorKind::invalid_argument, "gen_forcing: empty site set");
    require(sigma > 0.0, ErrorKind::invalid_argument, "gen_forcing: sigma must be positive");
    require(weights.empty() || weights.size() == sites.size(), ErrorKind::invalid_argument,
            "gen_forcing: one weight per site required");
    std::set<Index> seen;
    for (Index s : sites) {
        require(s >= 0 && s < n, ErrorKind::invalid_argument, "gen_forcing: site out of range");
        require(seen.insert(s).second, ErrorKind::invalid_argument, "gen_forcing: duplicate site");
    }

    const Index k = static_cast<Index>(sites.size());
    Dense uncorrelated = Dense::Zero(n, k);
    for (Index c = 0; c < k; ++c)
        uncorrelated(sites[static_cast<std::size_t>(c)], c) = sigma * (weights.empty() ? 1.0 : weights[static_cast<std::size_t>(c)]);

    ForcingMatrix f;
    f.pattern = pattern;
    f.magnitude = sigma;
    switch (pattern) {
    case ForcingPattern::uncorrelated_columns: f.b = std::move(uncorrelated); break;
    case ForcingPattern::row_sum_vector: f.b = uncorrelated.rowwise().sum(); break;
    case ForcingPattern::diagonal_surface: {
        const Vector sums = uncorrelated.rowwise().sum();
        std::vector<Index> nonzero;
        for (Index i = 0; i < n; ++i)
            if (sums(i) != 0.0) nonzero.push_back(i);
        f.b = Dense::Zero(n, static_cast<Index>(nonzero.size()));
        for (std::size_t c = 0; c < nonzero.size(); ++c) f.b(nonzero[c], static_cast<Index>(c)) = sums(nonzero[c]);
        break;
    }
    }
    return f;
}

} // namespace rails::testproblems
