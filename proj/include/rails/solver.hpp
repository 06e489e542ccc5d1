#pragma once

// Residual-eigenvector projection solver for
//
//   A C Mᵀ + M C Aᵀ + B Bᵀ = 0,   C ≈ V T Vᵀ.
//
// Each iteration solves the Galerkin-projected equation densely, estimates
// the top eigenpairs of the residual R = A C̃ Mᵀ + M C̃ Aᵀ + B Bᵀ with
// Lanczos, and expands V with those eigenvectors (or their images under A⁻¹
// for the inverse variant). Restarts truncate V to the dominant eigenvectors
// of T; on convergence the solver restarts once and must converge again.

#include "rails/dense_lyap.hpp"
#include "rails/lanczos.hpp"
#include "rails/low_rank.hpp"
#include "rails/operators.hpp"
#include "rails/orthonormalize.hpp"
#include "rails/random.hpp"
#include "rails/schur_dae.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace rails {

struct LyapunovProblem {
    std::shared_ptr<LinearOperator> a;
    /// nullptr means M = I.
    std::shared_ptr<const LinearOperator> m;
    Dense b;

    Index dimension() const { return a ? a->dimension() : 0; }

    Dense apply_a(const Dense& x, bool transpose, OpCounters* counters) const { return a->apply(x, transpose, counters); }
    Dense apply_m(const Dense& x, bool transpose) const { return m ? m->apply(x, transpose, nullptr) : x; }
};

inline LyapunovProblem make_problem(SparseMatrix a, std::optional<SparseMatrix> m, Dense b)
{
    LyapunovProblem p;
    p.a = std::make_shared<SparseOperator>(std::move(a));
    if (m) p.m = std::make_shared<SparseOperator>(std::move(*m));
    p.b = std::move(b);
    return p;
}

enum class Variant { standard, inverse };
enum class InitialSpace { random, given, columns_of_b, inverse_applied_to_b };
enum class Termination { converged, max_iterations, stagnation };

inline const char* to_string(Termination t)
{
    switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iterations: return "max_iterations";
    case Termination::stagnation: return "stagnation";
    }
    return "unknown";
}

inline const char* to_string(Variant v) { return v == Variant::standard ? "standard" : "inverse"; }

inline const char* to_string(InitialSpace s)
{
    switch (s) {
    case InitialSpace::random: return "random";
    case InitialSpace::given: return "given";
    case InitialSpace::columns_of_b: return "columns_of_b";
    case InitialSpace::inverse_applied_to_b: return "inverse_applied_to_b";
    }
    return "unknown";
}

struct IterationInfo {
    Index iteration = 0;
    double rho = 0.0;
    const Dense* v = nullptr;
    const Dense* t = nullptr;
};

struct SolverOptions {
    Index expand_m = 3;
    Index max_iters = 1000;
    double tol = 1e-2;
    Index restart_period = 50;
    double restart_tol = 1e-8;
    /// Interpret restart_tol relative to the largest eigenvalue of T.
    bool restart_tol_relative = false;
    /// Multiplier applied to restart_tol on stagnation; 1 disables.
    double restart_tol_growth = 1.0;
    Variant variant = Variant::standard;
    InitialSpace initial_space = InitialSpace::random;
    /// Columns of the random initial space; 0 means expand_m.
    Index random_columns = 0;
    Dense initial_basis;
    std::uint64_t seed = 0;

    Index lanczos_max_steps = 20;
    double lanczos_tol = 1e-6;
    double drop_tol = 1e-8;
    Index dense_cap = default_dense_cap;

    std::function<void(const IterationInfo&)> on_iteration;
};

struct SolveReport {
    Index iterations = 0;
    std::size_t mvp_count = 0;
    std::size_t imvp_count = 0;
    std::vector<std::pair<Index, double>> residual_history;
    Index max_space_dim = 0;
    Index final_rank = 0;
    bool converged = false;
    Termination termination = Termination::max_iterations;
    double final_residual = 0.0;
    Index restarts = 0;
    /// Rank of the iterate that first met the tolerance, before the restart; -1 if never.
    Index rank_at_first_convergence = -1;
};

struct SolveResult {
    LowRankSolution solution;
    SolveReport report;
};

struct ResidualEstimate {
    /// Lanczos estimate of ||R||₂.
    double norm2 = 0.0;
    /// Ritz residual of the leading pair; |lambda_max(R)| <= norm2 + bound.
    double bound = 0.0;
    bool converged = false;
    std::vector<Eigenpair> pairs;
};

namespace detail {

// R x = AV T (MV)ᵀ x + MV T (AV)ᵀ x + B Bᵀ x with AV = A V and MV = M V.
inline SymmetricOperator residual_operator(const Dense& av, const Dense& mv, const Dense& t, const Dense& b)
{
    SymmetricOperator op;
    op.dimension = b.rows();
    op.apply = [&av, &mv, &t, &b](const Vector& x) -> Vector {
        Vector y = b * (b.transpose() * x);
        if (t.rows() > 0) {
            y.noalias() += av * (t * (mv.transpose() * x));
            y.noalias() += mv * (t * (av.transpose() * x));
        }
        return y;
    };
    return op;
}

// Lanczos is started from R z so every Krylov vector, and with it every
// returned eigenvector, lies in Range(R) ⊆ span{AV, MV, B}.
inline ResidualEstimate residual_lanczos(const Dense& av, const Dense& mv, const Dense& t, const Dense& b, Index m,
                                        LanczosOptions opts)
{
    const SymmetricOperator op = residual_operator(av, mv, t, b);
    const Index k = std::min(m, op.dimension);
    opts.max_steps = std::max(opts.max_steps, k);
    Rng rng(opts.seed ^ 0x9e3779b97f4a7c15ULL);
    Vector start = op.apply(random_gaussian(op.dimension, 1, rng).col(0));
    LanczosResult lr = lanczos_topk(op, k, opts, start);

    ResidualEstimate est;
    est.converged = lr.converged;
    if (!lr.pairs.empty()) {
        est.norm2 = std::abs(lr.pairs.front().value);
        est.bound = lr.pairs.front().residual;
    }
    est.pairs = std::move(lr.pairs);
    return est;
}

inline double forcing_norm2(const Dense& b, std::uint64_t seed)
{
    SymmetricOperator op;
    op.dimension = b.rows();
    op.apply = [&b](const Vector& x) -> Vector { return b * (b.transpose() * x); };
    LanczosOptions lo;
    lo.max_steps = std::min<Index>(b.rows(), std::max<Index>(b.cols() + 1, 40));
    lo.tol = 1e-13;
    lo.seed = seed;
    Vector start = op.apply(random_gaussian(b.rows(), 1, seed + 1).col(0));
    auto lr = lanczos_topk(op, 1, lo, start);
    return lr.pairs.empty() ? 0.0 : std::abs(lr.pairs.front().value);
}

inline void validate(const SolverOptions& o)
{
    require(o.expand_m >= 1, ErrorKind::invalid_argument, "expand_m must be at least 1");
    require(o.max_iters >= 1, ErrorKind::invalid_argument, "max_iters must be at least 1");
    require(o.tol > 0.0, ErrorKind::invalid_argument, "tol must be positive");
    require(o.restart_period >= 1, ErrorKind::invalid_argument, "restart_period must be at least 1");
    require(o.restart_tol >= 0.0, ErrorKind::invalid_argument, "restart_tol must be nonnegative");
    require(o.restart_tol_growth >= 1.0, ErrorKind::invalid_argument, "restart_tol_growth must be >= 1");
    require(o.lanczos_max_steps >= 1, ErrorKind::invalid_argument, "lanczos_max_steps must be at least 1");
    require(o.drop_tol > 0.0, ErrorKind::invalid_argument, "drop_tol must be positive");
}

} // namespace detail

/// Residual norm and top-m eigenvectors of R for a given approximation.
/// Costs one product with A per column of V (counted in `counters`).
inline ResidualEstimate residual_norm_and_vectors(const LyapunovProblem& problem, const LowRankSolution& sol, Index m,
                                                  const LanczosOptions& opts, OpCounters* counters = nullptr)
{
    check_consistent(sol);
    require(sol.dimension() == problem.dimension(), ErrorKind::dimension_mismatch,
            "residual: solution dimension does not match problem");
    require(m >= 1, ErrorKind::invalid_argument, "residual: m must be at least 1");
    const Dense av = sol.rank() > 0 ? problem.apply_a(sol.v, false, counters) : Dense(sol.dimension(), 0);
    const Dense mv = sol.rank() > 0 ? problem.apply_m(sol.v, false) : Dense(sol.dimension(), 0);
    return detail::residual_lanczos(av, mv, sol.t, problem.b, m, opts);
}

struct RestartResult {
    LowRankSolution solution;
    /// Retained eigenvectors of T; V' = V U.
    Dense u;
    Index discarded = 0;
};

/// Keeps the eigenpairs of T with eigenvalue > tau, in decreasing order.
inline RestartResult restart(const LowRankSolution& sol, double tau)
{
    check_consistent(sol);
    require(tau >= 0.0, ErrorKind::invalid_argument, "restart: tau must be nonnegative");
    const Index d = sol.rank();
    RestartResult out;
    if (d == 0) {
        out.solution = LowRankSolution::empty(sol.dimension());
        out.u = Dense(0, 0);
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Dense> eig(0.5 * (sol.t + sol.t.transpose()));
    const Vector& lambda = eig.eigenvalues();
    std::vector<Index> keep;
    for (Index i = d - 1; i >= 0; --i)
        if (lambda(i) > tau) keep.push_back(i);
    const Index r = static_cast<Index>(keep.size());
    out.u.resize(d, r);
    Vector kept(r);
    for (Index c = 0; c < r; ++c) {
        out.u.col(c) = eig.eigenvectors().col(keep[static_cast<std::size_t>(c)]);
        kept(c) = lambda(keep[static_cast<std::size_t>(c)]);
    }
    out.discarded = d - r;
    out.solution.v = sol.v * out.u;
    out.solution.t = kept.asDiagonal();
    return out;
}

namespace detail {

struct SpaceState {
    Dense v, av, mv;
    Dense a_t, m_t, b_t;

    Index dim() const { return v.cols(); }

    void reset(const LyapunovProblem& p, Dense basis, OpCounters& counters)
    {
        v = std::move(basis);
        av = p.apply_a(v, false, &counters);
        mv = p.apply_m(v, false);
        a_t = v.transpose() * av;
        m_t = v.transpose() * mv;
        b_t = v.transpose() * p.b;
    }

    // Appends orthonormal Q ⟂ V, computing only the new blocks of the projections.
    void extend(const LyapunovProblem& p, const Dense& q, OpCounters& counters)
    {
        const Index d = dim(), k = q.cols();
        const Dense aq = p.apply_a(q, false, &counters);
        const Dense mq = p.apply_m(q, false);
        Dense a_new(d + k, d + k), m_new(d + k, d + k);
        a_new.topLeftCorner(d, d) = a_t;
        a_new.topRightCorner(d, k) = v.transpose() * aq;
        a_new.bottomLeftCorner(k, d) = q.transpose() * av;
        a_new.bottomRightCorner(k, k) = q.transpose() * aq;
        m_new.topLeftCorner(d, d) = m_t;
        m_new.topRightCorner(d, k) = v.transpose() * mq;
        m_new.bottomLeftCorner(k, d) = q.transpose() * mv;
        m_new.bottomRightCorner(k, k) = q.transpose() * mq;
        Dense b_new(d + k, p.b.cols());
        b_new.topRows(d) = b_t;
        b_new.bottomRows(k) = q.transpose() * p.b;

        auto append = [d, k](Dense& left, const Dense& right) {
            Dense out(left.rows(), d + k);
            out.leftCols(d) = left;
            out.rightCols(k) = right;
            left = std::move(out);
        };
        append(v, q);
        append(av, aq);
        append(mv, mq);
        a_t = std::move(a_new);
        m_t = std::move(m_new);
        b_t = std::move(b_new);
    }

    // Congruence update by the retained eigenvectors U of T.
    void rotate(const Dense& u)
    {
        v = v * u;
        av = av * u;
        mv = mv * u;
        a_t = u.transpose() * a_t * u;
        m_t = u.transpose() * m_t * u;
        b_t = u.transpose() * b_t;
    }
};

} // namespace detail

/// Solves A C Mᵀ + M C Aᵀ + B Bᵀ = 0. Never throws for non-convergence; the
/// report says how the iteration ended. Structural problems (unstable
/// projected pencil, singular factorizations) propagate as rails::Error.
inline SolveResult solve(const LyapunovProblem& problem, const SolverOptions& opts)
{
    detail::validate(opts);
    require(problem.a != nullptr, ErrorKind::invalid_argument, "problem has no drift operator");
    const Index n = problem.dimension();
    require(n >= 1, ErrorKind::invalid_argument, "problem dimension must be positive");
    require(problem.b.rows() == n && problem.b.cols() >= 1, ErrorKind::dimension_mismatch,
            "B must have n rows and at least one column");
    require(!problem.m || problem.m->dimension() == n, ErrorKind::dimension_mismatch, "M dimension must match A");

    const bool inverse = opts.variant == Variant::inverse || opts.initial_space == InitialSpace::inverse_applied_to_b;
    if (inverse) problem.a->prepare_inverse();

    SolveResult out;
    SolveReport& rep = out.report;
    OpCounters counters;

    const double bb_norm = detail::forcing_norm2(problem.b, opts.seed);
    if (bb_norm == 0.0) {
        out.solution = LowRankSolution::empty(n);
        rep.converged = true;
        rep.termination = Termination::converged;
        rep.residual_history.emplace_back(0, 0.0);
        return out;
    }

    Dense initial;
    switch (opts.initial_space) {
    case InitialSpace::random: {
        Index r = opts.random_columns > 0 ? opts.random_columns : opts.expand_m;
        initial = random_gaussian(n, std::min(r, n), opts.seed);
        break;
    }
    case InitialSpace::given:
        require(opts.initial_basis.rows() == n && opts.initial_basis.cols() >= 1, ErrorKind::dimension_mismatch,
                "given initial basis must have n rows and at least one column");
        initial = opts.initial_basis;
        break;
    case InitialSpace::columns_of_b: initial = problem.b; break;
    case InitialSpace::inverse_applied_to_b: initial = problem.a->solve(problem.b, &counters); break;
    }

    detail::SpaceState space;
    space.reset(problem, orthonormalize(initial, opts.drop_tol).q, counters);

    double tau = opts.restart_tol;
    bool converged_once = false;
    LowRankSolution current = LowRankSolution::empty(n);

    LanczosOptions lanczos;
    lanczos.max_steps = opts.lanczos_max_steps;
    lanczos.tol = opts.lanczos_tol;

    for (Index j = 1; j <= opts.max_iters; ++j) {
        rep.iterations = j;
        rep.max_space_dim = std::max(rep.max_space_dim, space.dim());
        require(space.dim() <= opts.dense_cap, ErrorKind::dimension_cap,
                "search space dimension " + std::to_string(space.dim()) + " exceeds dense cap");

        Dense t = solve_projected({space.a_t, space.m_t, space.b_t}, opts.dense_cap);

        lanczos.seed = opts.seed + static_cast<std::uint64_t>(j);
        ResidualEstimate est = detail::residual_lanczos(space.av, space.mv, t, problem.b, opts.expand_m, lanczos);
        auto upper = [&] { return (est.norm2 + est.bound) / bb_norm; };
        // A small but unconverged estimate is not trusted: lengthen Lanczos until it is.
        for (LanczosOptions longer = lanczos; upper() <= opts.tol && !est.converged && longer.max_steps < n;) {
            longer.max_steps = std::min(n, 2 * longer.max_steps);
            est = detail::residual_lanczos(space.av, space.mv, t, problem.b, opts.expand_m, longer);
        }
        const double rho = est.norm2 / bb_norm;
        rep.residual_history.emplace_back(j, rho);
        rep.final_residual = rho;
        if (opts.on_iteration) opts.on_iteration(IterationInfo{j, rho, &space.v, &t});

        current = LowRankSolution{space.v, t};
        const bool converged = upper() <= opts.tol;

        if (converged && converged_once) {
            rep.converged = true;
            rep.termination = Termination::converged;
            break;
        }
        if (j == opts.max_iters) break;

        auto do_restart = [&] {
            double eff_tau = tau;
            if (opts.restart_tol_relative && t.rows() > 0)
                eff_tau = tau * std::max(0.0, Eigen::SelfAdjointEigenSolver<Dense>(t, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff());
            RestartResult rr = restart(current, eff_tau);
            space.rotate(rr.u);
            ++rep.restarts;
        };

        if (converged) {
            // Rank-minimizing restart, then re-check the truncated space before expanding.
            converged_once = true;
            rep.rank_at_first_convergence = current.rank();
            do_restart();
            continue;
        }
        if (j % opts.restart_period == 0) do_restart();

        Dense expansion(n, static_cast<Index>(est.pairs.size()));
        for (std::size_t p = 0; p < est.pairs.size(); ++p) expansion.col(static_cast<Index>(p)) = est.pairs[p].vector;
        if (opts.variant == Variant::inverse) expansion = problem.a->solve(expansion, &counters);

        Orthonormalized o = orthonormalize(expansion, space.v, opts.drop_tol);
        if (o.kept == 0) {
            if (opts.restart_tol_growth > 1.0 && tau > 0.0) {
                tau *= opts.restart_tol_growth;
                do_restart();
                continue;
            }
            rep.termination = Termination::stagnation;
            break;
        }
        space.extend(problem, o.q, counters);
    }

    rep.mvp_count = counters.mvp;
    rep.imvp_count = counters.imvp;
    rep.final_rank = current.rank();
    out.solution = std::move(current);
    return out;
}

inline SolveResult solve(SparseMatrix a, std::optional<SparseMatrix> m, Dense b, const SolverOptions& opts)
{
    return solve(make_problem(std::move(a), std::move(m), std::move(b)), opts);
}

struct DaeSolveResult {
    LowRankSolution solution;
    /// The solution on the differential rows before recovery.
    LowRankSolution reduced;
    SolveReport report;
    std::shared_ptr<const DaeSystem> system;
};

/// partition → solve on (S, M22, B2) → recover the full covariance in the
/// original ordering. With no algebraic rows this is exactly solve(A, M, B).
inline DaeSolveResult solve_dae(const SparseMatrix& a, const SparseMatrix& m, const Dense& b, const SolverOptions& opts,
                                const PartitionOptions& popts = {})
{
    auto sys = std::make_shared<const DaeSystem>(partition(a, m, b, popts));
    LyapunovProblem problem;
    if (sys->pass_through()) {
        problem = make_problem(a, m, b);
    } else {
        problem.a = std::make_shared<SchurOperator>(sys);
        problem.m = std::make_shared<SparseOperator>(sys->m22);
        problem.b = sys->b2;
    }
    SolveResult r = solve(problem, opts);
    DaeSolveResult out;
    out.solution = recover_full_covariance(*sys, r.solution);
    out.reduced = std::move(r.solution);
    out.report = std::move(r.report);
    out.report.final_rank = out.solution.rank();
    out.system = std::move(sys);
    return out;
}

} // namespace rails
