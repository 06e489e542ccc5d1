#pragma once

// Independent checks for the solver: a brute-force Kronecker solve of small
// generalized Lyapunov equations, and Euler-Maruyama simulation of the
// reduced linear SDAE  M22 dX = S X dt + B2 dW.

#include "rails/dense_lyap.hpp"
#include "rails/random.hpp"
#include "rails/schur_dae.hpp"

#include <Eigen/Eigenvalues>

#include <cstdint>
#include <sstream>

namespace rails {

inline constexpr Index kron_solve_cap = 60;
inline constexpr Index simulation_cap = 500;

/// Solves (M ⊗ A + A ⊗ M) vec(C) = -vec(B Bᵀ) by dense LU.
inline Dense kron_solve(const Dense& a, const Dense& m, const Dense& b)
{
    const Index n = a.rows();
    require(a.cols() == n && m.rows() == n && m.cols() == n && b.rows() == n, ErrorKind::dimension_mismatch,
            "kron_solve: inconsistent dimensions");
    require(n <= kron_solve_cap, ErrorKind::oracle_scale,
            "kron_solve handles n <= " + std::to_string(kron_solve_cap) + ", got n = " + std::to_string(n));
    if (n == 0) return Dense(0, 0);

    Eigen::PartialPivLU<Dense> m_lu(m);
    require(m_lu.rcond() > 1e-14, ErrorKind::singular, "kron_solve: M is singular; reduce the DAE first");

    // vec(C) is unique iff no two eigenvalues of M⁻¹A sum to zero.
    Eigen::EigenSolver<Dense> es(m_lu.solve(a), false);
    const auto& lam = es.eigenvalues();
    const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
    for (Index i = 0; i < n; ++i)
        for (Index j = i; j < n; ++j)
            if (std::abs(lam(i) + lam(j)) <= 1e-10 * scale) {
                std::ostringstream msg;
                msg << "eigenvalues " << lam(i) << " and " << lam(j) << " sum to zero";
                throw Error(ErrorKind::no_unique_solution, msg.str());
            }

    const Dense k = kron(m, a) + kron(a, m);
    const Dense q = b * b.transpose();
    Vector rhs = -Eigen::Map<const Vector>(q.data(), n * n);
    Vector x = k.partialPivLu().solve(rhs);
    Dense c = Eigen::Map<const Dense>(x.data(), n, n);
    return 0.5 * (c + c.transpose());
}

inline Dense kron_solve(const SparseMatrix& a, const SparseMatrix& m, const Dense& b)
{
    require(a.rows() <= kron_solve_cap, ErrorKind::oracle_scale,
            "kron_solve handles n <= " + std::to_string(kron_solve_cap) + ", got n = " + std::to_string(a.rows()));
    return kron_solve(a.to_dense(), m.to_dense(), b);
}

/// Unbiased covariance of the columns of `samples`. By default the sample
/// mean is subtracted (divisor N-1); with mean_removed the columns are taken
/// as already centred about a known mean (divisor N).
inline Dense empirical_covariance(const Dense& samples, bool mean_removed = false)
{
    const Index count = samples.cols();
    require(count >= 2, ErrorKind::invalid_argument, "empirical_covariance needs at least 2 samples");
    if (mean_removed) {
        Dense c = samples * samples.transpose() / static_cast<double>(count);
        return 0.5 * (c + c.transpose());
    }
    const Vector mean = samples.rowwise().mean();
    const Dense centred = samples.colwise() - mean;
    Dense c = centred * centred.transpose() / static_cast<double>(count - 1);
    return 0.5 * (c + c.transpose());
}

struct SimulationConfig {
    double dt = 1e-3;
    Index n_steps = 1'000'000;
    Index burn_in = 10'000;
    std::uint64_t rng_seed = 0;
    Index sample_stride = 1;
};

struct SimulationResult {
    /// Empirical C22 on the differential rows.
    Dense covariance;
    Index samples = 0;
    /// dt lies outside the explicit Euler stability region of M22⁻¹S.
    bool stability_warning = false;
};

/// Drift and diffusion of the reduced system in explicit form, M22⁻¹S and M22⁻¹B2.
inline std::pair<Dense, Dense> explicit_reduced_system(const DaeSystem& sys)
{
    const Index nd = sys.n_differential();
    require(nd <= simulation_cap, ErrorKind::oracle_scale,
            "simulation handles differential dimension <= " + std::to_string(simulation_cap));
    Dense drift = sys.m22_lu->solve(schur_apply(sys, Dense::Identity(nd, nd), false));
    Dense diffusion = sys.m22_lu->solve(sys.b2);
    return {std::move(drift), std::move(diffusion)};
}

inline SimulationResult euler_maruyama_covariance(const DaeSystem& sys, const SimulationConfig& cfg)
{
    require(cfg.dt > 0.0, ErrorKind::invalid_argument, "simulation dt must be positive");
    require(cfg.burn_in >= 0 && cfg.burn_in < cfg.n_steps, ErrorKind::invalid_argument, "burn_in must be < n_steps");
    require(cfg.sample_stride >= 1, ErrorKind::invalid_argument, "sample_stride must be at least 1");

    const auto [drift, diffusion] = explicit_reduced_system(sys);
    const Index nd = drift.rows();
    const Index nw = diffusion.cols();

    SimulationResult out;
    if (nd > 0) {
        Eigen::EigenSolver<Dense> es(drift, false);
        for (Index i = 0; i < nd; ++i)
            if (std::abs(1.0 + cfg.dt * es.eigenvalues()(i)) >= 1.0) out.stability_warning = true;
    }

    // One step: x <- (I + dt F) x + sqrt(dt) G xi.
    const Dense step = Dense::Identity(nd, nd) + cfg.dt * drift;
    const Dense kick = std::sqrt(cfg.dt) * diffusion;

    Rng rng(cfg.rng_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector x = Vector::Zero(nd), next(nd), xi(nw);
    Vector sum = Vector::Zero(nd);
    Dense outer = Dense::Zero(nd, nd);
    Index count = 0;

    for (Index s = 1; s <= cfg.n_steps; ++s) {
        for (Index w = 0; w < nw; ++w) xi(w) = normal(rng);
        next.noalias() = step * x;
        next.noalias() += kick * xi;
        x.swap(next);
        if (!(x.squaredNorm() <= 1e24))
            throw Error(ErrorKind::simulation_blowup, "state norm exceeded 1e12 at step " + std::to_string(s));
        if (s > cfg.burn_in && (s - cfg.burn_in) % cfg.sample_stride == 0) {
            sum += x;
            outer.selfadjointView<Eigen::Lower>().rankUpdate(x);
            ++count;
        }
    }
    require(count >= 2, ErrorKind::invalid_argument, "simulation retained fewer than 2 samples");

    Dense second = outer.selfadjointView<Eigen::Lower>();
    const Vector mean = sum / static_cast<double>(count);
    Dense c = (second - static_cast<double>(count) * mean * mean.transpose()) / static_cast<double>(count - 1);
    out.covariance = 0.5 * (c + c.transpose());
    out.samples = count;
    return out;
}

} // namespace rails
