#pragma once

#include "rails/matrix_core.hpp"
#include "rails/random.hpp"

#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>

namespace rails {

/// A symmetric linear map known only through its action on vectors.
struct SymmetricOperator {
    Index dimension = 0;
    std::function<Vector(const Vector&)> apply;
};

struct LanczosOptions {
    Index max_steps = 20;
    /// Ritz pair i is converged when ||op v - lambda v|| <= tol * |lambda_1|.
    double tol = 1e-8;
    std::uint64_t seed = 0;
};

struct Eigenpair {
    double value = 0.0;
    Vector vector;
    /// Ritz residual bound ||op v - value v||.
    double residual = 0.0;
};

struct LanczosResult {
    /// Sorted by decreasing |value|.
    std::vector<Eigenpair> pairs;
    bool converged = false;
    Index steps = 0;
};

/// Top-|lambda| eigenpairs of a symmetric operator by Lanczos with full
/// reorthogonalization. Non-convergence is reported, not thrown; the best
/// Ritz estimates are returned either way. If `start` is given it replaces
/// the seeded random start vector (a zero start falls back to random).
inline LanczosResult lanczos_topk(const SymmetricOperator& op, Index k, const LanczosOptions& opts,
                                  const std::optional<Vector>& start = std::nullopt)
{
    const Index n = op.dimension;
    require(k >= 1, ErrorKind::invalid_argument, "lanczos_topk: k must be at least 1");
    require(n >= k, ErrorKind::invalid_argument, "lanczos_topk: operator dimension smaller than k");
    require(opts.max_steps >= k, ErrorKind::invalid_argument, "lanczos_topk: max_steps must be at least k");

    const Index steps_cap = std::min(opts.max_steps, n);
    Rng rng(opts.seed);

    Dense basis(n, steps_cap);
    std::vector<double> alpha;
    std::vector<double> beta;  // beta[j] couples basis j and j+1
    double scale = 0.0;

    auto fresh_direction = [&](Index used) -> Vector {
        for (int attempt = 0; attempt < 8; ++attempt) {
            Vector v = random_gaussian(n, 1, rng);
            for (int pass = 0; pass < 2; ++pass)
                if (used > 0) v -= basis.leftCols(used) * (basis.leftCols(used).transpose() * v);
            double nv = v.norm();
            if (nv > 1e-8 * std::sqrt(static_cast<double>(n))) return v / nv;
        }
        return Vector::Zero(n);
    };

    Vector q;
    if (start && start->norm() > 0.0 && start->allFinite())
        q = *start / start->norm();
    else
        q = fresh_direction(0);

    LanczosResult result;
    Eigen::SelfAdjointEigenSolver<Dense> tri;
    std::vector<Index> order;

    for (Index j = 0; j < steps_cap; ++j) {
        basis.col(j) = q;
        Vector w = op.apply(q);
        double a = q.dot(w);
        w -= a * q;
        if (j > 0) w -= beta[static_cast<std::size_t>(j - 1)] * basis.col(j - 1);
        for (int pass = 0; pass < 2; ++pass) w -= basis.leftCols(j + 1) * (basis.leftCols(j + 1).transpose() * w);
        double b = w.norm();
        alpha.push_back(a);
        scale = std::max({scale, std::abs(a), b});

        const Index m = j + 1;
        Vector diag = Eigen::Map<const Vector>(alpha.data(), m);
        Vector sub(std::max<Index>(m - 1, 0));
        for (Index i = 0; i + 1 < m; ++i) sub(i) = beta[static_cast<std::size_t>(i)];
        tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
        const Vector& theta = tri.eigenvalues();
        const Dense& s = tri.eigenvectors();

        order.resize(static_cast<std::size_t>(m));
        std::iota(order.begin(), order.end(), Index{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](Index x, Index y) { return std::abs(theta(x)) > std::abs(theta(y)); });

        const bool invariant = b <= 1e-12 * scale;
        const double coupling = invariant ? 0.0 : b;
        const Index wanted = std::min(k, m);
        bool all_converged = m >= k;
        const double lead = std::abs(theta(order[0]));
        for (Index i = 0; i < wanted; ++i) {
            double r = coupling * std::abs(s(m - 1, order[static_cast<std::size_t>(i)]));
            if (r > opts.tol * lead) all_converged = false;
        }

        auto finish = [&](bool converged) {
            result.steps = m;
            result.converged = converged;
            for (Index i = 0; i < wanted; ++i) {
                Index c = order[static_cast<std::size_t>(i)];
                Eigenpair p;
                p.value = theta(c);
                p.vector = basis.leftCols(m) * s.col(c);
                p.vector.normalize();
                p.residual = coupling * std::abs(s(m - 1, c));
                result.pairs.push_back(std::move(p));
            }
        };

        if (all_converged || (invariant && m >= k)) {
            finish(true);
            return result;
        }
        if (m == steps_cap) {
            finish(m == n);
            return result;
        }
        if (invariant) {
            beta.push_back(0.0);
            q = fresh_direction(m);
            if (q.norm() == 0.0) {
                finish(true);
                return result;
            }
        } else {
            beta.push_back(b);
            q = w / b;
        }
    }
    return result;
}

} // namespace rails
