#pragma once

// Command-line front end: generate, solve, validate, analyze.
// Exit codes: 0 success, 1 non-convergence or failed check, 2 usage or
// malformed input, 3 I/O, 4 structural solver error, 5 oracle too small.

#include "rails/covariance_analysis.hpp"
#include "rails/report_io.hpp"
#include "rails/sde_oracle.hpp"
#include "rails/solver.hpp"
#include "rails/testproblems.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace rails::cli {

namespace fs = std::filesystem;

enum ExitCode : int {
    ok = 0,
    not_converged = 1,
    usage = 2,
    io_failure = 3,
    structural = 4,
    oracle_scale = 5,
};

inline int exit_code_for(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::invalid_argument:
    case ErrorKind::dimension_mismatch:
    case ErrorKind::parse: return usage;
    case ErrorKind::io: return io_failure;
    case ErrorKind::oracle_scale: return oracle_scale;
    default: return structural;
    }
}

struct GenerateArgs {
    std::string kind;
    Index n = 50;
    double scale = 1.0;
    Index n_diff = 40;
    Index n_alg = 10;
    double coupling = 0.5;
    double shift = 1.0;
    std::string pattern = "uncorrelated";
    double sigma = 0.1;
    std::uint64_t seed = 0;
    std::string out = ".";
};

struct SolveArgs {
    std::string problem;
    std::string a_path, m_path, b_path;
    std::string out = ".";
    Index expand_m = 3;
    double tol = 1e-2;
    Index restart_period = 50;
    double restart_tol = 1e-8;
    bool restart_tol_relative = false;
    double restart_tol_growth = 1.0;
    Index max_iters = 1000;
    std::string variant = "standard";
    std::string initial = "random";
    std::uint64_t seed = 0;
    Index lanczos_steps = 20;
    double zero_tol = 0.0;
};

struct ValidateArgs {
    std::string problem;
    std::string solution;
    std::string oracle = "kron";
    double check_tol = 1e-6;
    bool simulate = false;
    double steps = 1e6;
    double dt = 1e-3;
    double burn_in = 1e4;
    Index stride = 1;
    double sim_tol = 0.15;
    std::uint64_t seed = 0;
    double zero_tol = 0.0;
    std::string out;
};

struct AnalyzeArgs {
    std::string solution;
    Index k = 4;
    std::string out = ".";
};

namespace detail {

inline void ensure_dir(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw Error(ErrorKind::io, "cannot create output directory '" + dir + "'");
}

inline nlohmann::ordered_json manifest(const std::string& command, const nlohmann::ordered_json& inputs,
                                       const nlohmann::ordered_json& options, const nlohmann::ordered_json& outputs)
{
    nlohmann::ordered_json j;
    j["command"] = command;
    j["inputs"] = inputs;
    j["options"] = options;
    j["outputs"] = outputs;
    j["version"] = version_string;
    return j;
}

struct ProblemFiles {
    SparseMatrix a, m;
    Dense b;
    nlohmann::ordered_json paths;
};

inline ProblemFiles load_problem(const std::string& dir, std::string a, std::string m, std::string b)
{
    if (!dir.empty()) {
        if (a.empty()) a = (fs::path(dir) / "A.mtx").string();
        if (m.empty()) m = (fs::path(dir) / "M.mtx").string();
        if (b.empty()) b = (fs::path(dir) / "B.mtx").string();
    }
    if (a.empty() || b.empty()) throw Error(ErrorKind::invalid_argument, "need --problem or --A/--B paths");
    ProblemFiles p;
    p.a = mm::read_sparse(a);
    p.m = m.empty() ? SparseMatrix::identity(p.a.rows()) : mm::read_sparse(m);
    p.b = mm::read_dense(b);
    p.paths = {{"A", a}, {"M", m.empty() ? std::string("identity") : m}, {"B", b}};
    return p;
}

// Dense S for oracle-scale reduced systems.
inline Dense dense_schur(const DaeSystem& sys)
{
    const Index nd = sys.n_differential();
    return schur_apply(sys, Dense::Identity(nd, nd), false);
}

// Full dense covariance from a dense C22: C = W C22 Wᵀ, W = [-A11⁻¹A12; I] in original ordering.
inline Dense lift_dense(const DaeSystem& sys, const Dense& c22)
{
    const Index nd = sys.n_differential();
    Dense w = Dense::Zero(sys.n, nd);
    const Dense y = sys.pass_through() ? Dense(0, nd) : Dense(-sys.a11_lu->solve(sys.a12.to_dense()));
    for (std::size_t i = 0; i < sys.algebraic_rows.size(); ++i) w.row(sys.algebraic_rows[i]) = y.row(static_cast<Index>(i));
    for (std::size_t i = 0; i < sys.differential_rows.size(); ++i) w(sys.differential_rows[i], static_cast<Index>(i)) = 1.0;
    return w * c22 * w.transpose();
}

inline Dense differential_block(const DaeSystem& sys, const Dense& full)
{
    const Index nd = sys.n_differential();
    Dense c(nd, nd);
    for (Index i = 0; i < nd; ++i)
        for (Index j = 0; j < nd; ++j) c(i, j) = full(sys.differential_rows[static_cast<std::size_t>(i)], sys.differential_rows[static_cast<std::size_t>(j)]);
    return c;
}

inline std::pair<double, Vector> leading_eigenpair(const Dense& c)
{
    Eigen::SelfAdjointEigenSolver<Dense> eig(0.5 * (c + c.transpose()));
    const Index last = c.rows() - 1;
    return {eig.eigenvalues()(last), eig.eigenvectors().col(last)};
}

} // namespace detail

inline int cmd_generate(const GenerateArgs& args, std::ostream& out)
{
    using namespace testproblems;
    auto pattern = parse_pattern(args.pattern);
    if (!pattern) throw Error(ErrorKind::invalid_argument, "unknown pattern '" + args.pattern + "'");

    TestProblem p;
    nlohmann::ordered_json opts;
    opts["kind"] = args.kind;
    if (args.kind == "diffusion") {
        p = gen_diffusion(args.n, args.scale);
        opts["n"] = args.n;
        opts["scale"] = args.scale;
    } else if (args.kind == "dae") {
        p = gen_dae(args.n_diff, args.n_alg, args.coupling, args.shift, args.seed);
        opts["n_diff"] = args.n_diff;
        opts["n_alg"] = args.n_alg;
        opts["coupling"] = args.coupling;
        opts["shift"] = args.shift;
        opts["shift_used"] = p.shift;
    } else {
        throw Error(ErrorKind::invalid_argument, "unknown kind '" + args.kind + "'");
    }
    ForcingMatrix f = gen_forcing(p.sites, p.n(), *pattern, args.sigma);
    opts["pattern"] = args.pattern;
    opts["sigma"] = args.sigma;
    opts["seed"] = args.seed;
    opts["rows"] = p.n();
    opts["forcing_columns"] = f.b.cols();

    detail::ensure_dir(args.out);
    const fs::path dir(args.out);
    mm::save_sparse(dir / "A.mtx", p.a);
    mm::save_sparse(dir / "M.mtx", p.m);
    mm::save_dense(dir / "B.mtx", f.b);
    write_json(dir / "manifest.json",
               detail::manifest("generate", nlohmann::ordered_json::array(), opts,
                                {(dir / "A.mtx").string(), (dir / "M.mtx").string(), (dir / "B.mtx").string()}));
    out << "generated " << args.kind << " problem: n = " << p.n() << ", forcing columns = " << f.b.cols() << '\n';
    return ok;
}

inline SolverOptions to_solver_options(const SolveArgs& a)
{
    SolverOptions o;
    o.expand_m = a.expand_m;
    o.tol = a.tol;
    o.restart_period = a.restart_period;
    o.restart_tol = a.restart_tol;
    o.restart_tol_relative = a.restart_tol_relative;
    o.restart_tol_growth = a.restart_tol_growth;
    o.max_iters = a.max_iters;
    o.seed = a.seed;
    o.lanczos_max_steps = a.lanczos_steps;
    if (a.variant == "standard")
        o.variant = Variant::standard;
    else if (a.variant == "inverse")
        o.variant = Variant::inverse;
    else
        throw Error(ErrorKind::invalid_argument, "unknown variant '" + a.variant + "'");
    if (a.initial == "random")
        o.initial_space = InitialSpace::random;
    else if (a.initial == "b")
        o.initial_space = InitialSpace::columns_of_b;
    else if (a.initial == "inverse-b")
        o.initial_space = InitialSpace::inverse_applied_to_b;
    else
        throw Error(ErrorKind::invalid_argument, "unknown initial space '" + a.initial + "'");
    return o;
}

inline int cmd_solve(const SolveArgs& args, std::ostream& out)
{
    const SolverOptions opts = to_solver_options(args);
    auto files = detail::load_problem(args.problem, args.a_path, args.m_path, args.b_path);
    PartitionOptions popts;
    popts.zero_tol = args.zero_tol;
    DaeSolveResult r = solve_dae(files.a, files.m, files.b, opts, popts);

    detail::ensure_dir(args.out);
    const fs::path dir(args.out);
    save_solution(dir, r.solution);
    write_json(dir / "report.json", to_json(r.report));

    nlohmann::ordered_json o;
    o["expand_m"] = opts.expand_m;
    o["tol"] = opts.tol;
    o["restart_period"] = opts.restart_period;
    o["restart_tol"] = opts.restart_tol;
    o["restart_tol_relative"] = opts.restart_tol_relative;
    o["restart_tol_growth"] = opts.restart_tol_growth;
    o["max_iters"] = opts.max_iters;
    o["variant"] = to_string(opts.variant);
    o["initial_space"] = to_string(opts.initial_space);
    o["seed"] = opts.seed;
    o["lanczos_max_steps"] = opts.lanczos_max_steps;
    o["zero_tol"] = args.zero_tol;
    o["algebraic_rows"] = r.system->n_algebraic();
    write_json(dir / "manifest.json",
               detail::manifest("solve", files.paths, o,
                                {(dir / "V.mtx").string(), (dir / "T.mtx").string(), (dir / "report.json").string()}));

    char line[200];
    std::snprintf(line, sizeof line, "iterations=%lld rho=%.3e rank=%lld converged=%s\n",
                  static_cast<long long>(r.report.iterations), r.report.final_residual,
                  static_cast<long long>(r.report.final_rank), r.report.converged ? "true" : "false");
    out << line;
    return r.report.converged ? ok : not_converged;
}

inline int cmd_validate(const ValidateArgs& args, std::ostream& out)
{
    if (args.oracle != "kron" && args.oracle != "none") throw Error(ErrorKind::invalid_argument, "unknown oracle '" + args.oracle + "'");
    if (args.oracle == "none" && !args.simulate) throw Error(ErrorKind::invalid_argument, "nothing to validate: --oracle none without --simulate");

    auto files = detail::load_problem(args.problem, "", "", "");
    const LowRankSolution sol = load_solution(args.solution);
    require(sol.dimension() == files.a.rows(), ErrorKind::dimension_mismatch, "solution dimension does not match problem");
    PartitionOptions popts;
    popts.zero_tol = args.zero_tol;
    const DaeSystem sys = partition(files.a, files.m, files.b, popts);

    bool passed = true;
    nlohmann::ordered_json results;

    if (args.oracle == "kron") {
        if (sys.n_differential() > kron_solve_cap)
            throw Error(ErrorKind::oracle_scale, "kron oracle handles reduced dimension <= " + std::to_string(kron_solve_cap) +
                                                     ", problem has " + std::to_string(sys.n_differential()));
        const Dense c22 = kron_solve(detail::dense_schur(sys), sys.m22.to_dense(), sys.b2);
        const Dense ref = detail::lift_dense(sys, c22);
        const double err = (sol.dense() - ref).norm() / ref.norm();
        const bool pass = err <= args.check_tol;
        passed = passed && pass;
        results["kron_relative_error"] = err;
        out << "kron oracle: relative Frobenius error " << err << (pass ? " (pass)" : " (FAIL)") << '\n';
    }

    if (args.simulate) {
        if (sys.n_differential() > simulation_cap)
            throw Error(ErrorKind::oracle_scale, "simulation handles differential dimension <= " + std::to_string(simulation_cap));
        SimulationConfig cfg;
        cfg.dt = args.dt;
        cfg.n_steps = static_cast<Index>(args.steps);
        cfg.burn_in = static_cast<Index>(args.burn_in);
        cfg.sample_stride = args.stride;
        cfg.rng_seed = args.seed;
        const SimulationResult sim = euler_maruyama_covariance(sys, cfg);
        const Dense c22 = detail::differential_block(sys, sol.dense());
        const auto [lam_sol, eof_sol] = detail::leading_eigenpair(c22);
        const auto [lam_sim, eof_sim] = detail::leading_eigenpair(sim.covariance);
        const double disc = std::abs(lam_sim - lam_sol) / std::abs(lam_sol);
        const double align = std::abs(eof_sol.dot(eof_sim));
        const bool pass = disc <= args.sim_tol;
        passed = passed && pass;
        results["simulation_leading_eigenvalue_discrepancy"] = disc;
        results["simulation_leading_eof_alignment"] = align;
        results["simulation_samples"] = sim.samples;
        results["simulation_stability_warning"] = sim.stability_warning;
        if (sim.stability_warning) out << "warning: dt outside the explicit Euler stability region\n";
        out << "simulation: leading eigenvalue " << lam_sim << " vs " << lam_sol << ", relative discrepancy " << disc
            << ", |cos| EOF1 " << align << (pass ? " (pass)" : " (FAIL)") << '\n';
    }

    results["passed"] = passed;
    if (!args.out.empty()) {
        detail::ensure_dir(args.out);
        const fs::path dir(args.out);
        write_json(dir / "validation.json", results);
        nlohmann::ordered_json o;
        o["oracle"] = args.oracle;
        o["check_tol"] = args.check_tol;
        o["simulate"] = args.simulate;
        o["steps"] = args.steps;
        o["dt"] = args.dt;
        o["burn_in"] = args.burn_in;
        o["stride"] = args.stride;
        o["sim_tol"] = args.sim_tol;
        o["seed"] = args.seed;
        write_json(dir / "manifest.json", detail::manifest("validate", {{"problem", args.problem}, {"solution", args.solution}}, o,
                                                           {(dir / "validation.json").string()}));
    }
    return passed ? ok : not_converged;
}

inline int cmd_analyze(const AnalyzeArgs& args, std::ostream& out)
{
    const LowRankSolution sol = load_solution(args.solution);
    if (args.k < 1 || args.k > sol.rank())
        throw Error(ErrorKind::invalid_argument,
                    "k = " + std::to_string(args.k) + " exceeds solution rank " + std::to_string(sol.rank()));
    const EofSet all = eofs(sol, sol.rank());
    const EofSet lead = eofs(sol, args.k);

    detail::ensure_dir(args.out);
    const fs::path dir(args.out);
    {
        std::ofstream f(dir / "eofs.csv", std::ios::binary);
        if (!f) throw Error(ErrorKind::io, "cannot write eofs.csv");
        write_eofs_csv(f, lead);
    }
    {
        std::ofstream f(dir / "eigenvalues.csv", std::ios::binary);
        if (!f) throw Error(ErrorKind::io, "cannot write eigenvalues.csv");
        write_eigenvalues_csv(f, all);
    }
    nlohmann::ordered_json o;
    o["k"] = args.k;
    write_json(dir / "manifest.json", detail::manifest("analyze", {{"solution", args.solution}}, o,
                                                       {(dir / "eofs.csv").string(), (dir / "eigenvalues.csv").string()}));
    out << "weighted eigenvalues:";
    char buf[32];
    for (Index i = 0; i < args.k; ++i) {
        std::snprintf(buf, sizeof buf, " %.6f", lead.weighted_eigenvalues(i));
        out << buf;
    }
    out << '\n';
    return ok;
}

/// Parses argv and dispatches; never throws.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"Low-rank solver for large generalized Lyapunov equations"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version_string);

    GenerateArgs g;
    auto* gen = app.add_subcommand("generate", "Write a stable test problem as Matrix Market files");
    gen->add_option("--kind", g.kind, "diffusion | dae")->required()->check(CLI::IsMember({"diffusion", "dae"}));
    gen->add_option("--n", g.n, "diffusion size");
    gen->add_option("--scale", g.scale, "diffusion coefficient");
    gen->add_option("--n-diff", g.n_diff, "DAE differential unknowns");
    gen->add_option("--n-alg", g.n_alg, "DAE algebraic unknowns");
    gen->add_option("--coupling", g.coupling, "DAE coupling magnitude");
    gen->add_option("--shift", g.shift, "DAE initial stabilizing shift");
    gen->add_option("--pattern", g.pattern, "uncorrelated | row-sum | diagonal")
        ->check(CLI::IsMember({"uncorrelated", "row-sum", "diagonal"}));
    gen->add_option("--sigma", g.sigma, "forcing magnitude");
    gen->add_option("--seed", g.seed);
    gen->add_option("--out", g.out, "output directory");

    SolveArgs s;
    auto* sol = app.add_subcommand("solve", "Solve A C Mᵀ + M C Aᵀ + B Bᵀ = 0");
    sol->add_option("--problem", s.problem, "directory with A.mtx, M.mtx, B.mtx");
    sol->add_option("--A", s.a_path);
    sol->add_option("--M", s.m_path);
    sol->add_option("--B", s.b_path);
    sol->add_option("--out", s.out, "output directory");
    sol->add_option("--expand-m", s.expand_m, "vectors added per iteration (m)");
    sol->add_option("--tol", s.tol, "relative residual tolerance (epsilon)");
    sol->add_option("--restart-period", s.restart_period, "iterations between restarts (k)");
    sol->add_option("--restart-tol", s.restart_tol, "eigenvalue threshold at restarts (tau)");
    sol->add_flag("--restart-tol-relative", s.restart_tol_relative, "tau relative to the largest eigenvalue of T");
    sol->add_option("--restart-tol-growth", s.restart_tol_growth, "tau multiplier on stagnation");
    sol->add_option("--max-iters", s.max_iters, "maximum iterations (l)");
    sol->add_option("--variant", s.variant, "standard | inverse")->check(CLI::IsMember({"standard", "inverse"}));
    sol->add_option("--initial", s.initial, "random | b | inverse-b")->check(CLI::IsMember({"random", "b", "inverse-b"}));
    sol->add_option("--seed", s.seed);
    sol->add_option("--lanczos-steps", s.lanczos_steps);
    sol->add_option("--zero-tol", s.zero_tol, "threshold for zero rows of M");

    ValidateArgs v;
    auto* val = app.add_subcommand("validate", "Check a solution against independent oracles");
    val->add_option("--problem", v.problem)->required();
    val->add_option("--solution", v.solution)->required();
    val->add_option("--oracle", v.oracle, "kron | none")->check(CLI::IsMember({"kron", "none"}));
    val->add_option("--check-tol", v.check_tol, "tolerance for the Kronecker oracle");
    val->add_flag("--simulate", v.simulate, "run Euler-Maruyama simulation");
    val->add_option("--steps", v.steps);
    val->add_option("--dt", v.dt);
    val->add_option("--burn-in", v.burn_in);
    val->add_option("--stride", v.stride);
    val->add_option("--sim-tol", v.sim_tol, "tolerance on the leading eigenvalue");
    val->add_option("--seed", v.seed);
    val->add_option("--zero-tol", v.zero_tol);
    val->add_option("--out", v.out, "optional directory for validation.json");

    AnalyzeArgs a;
    auto* ana = app.add_subcommand("analyze", "EOFs and weighted eigenvalues of a solution");
    ana->add_option("--solution", a.solution)->required();
    ana->add_option("--k", a.k, "number of EOFs");
    ana->add_option("--out", a.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return ok;
    } catch (const CLI::CallForVersion&) {
        out << version_string << '\n';
        return ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return usage;
    }

    try {
        if (*gen) return cmd_generate(g, out);
        if (*sol) return cmd_solve(s, out);
        if (*val) return cmd_validate(v, out);
        if (*ana) return cmd_analyze(a, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return io_failure;
    }
    return usage;
}

} // namespace rails::cli
