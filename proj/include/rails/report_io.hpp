#pragma once

#include "rails/matrix_market.hpp"
#include "rails/solver.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>

namespace rails {

inline constexpr const char* version_string = "rails 1.0.0";

inline nlohmann::ordered_json to_json(const SolveReport& r)
{
    nlohmann::ordered_json j;
    j["iterations"] = r.iterations;
    j["mvps"] = r.mvp_count;
    j["imvps"] = r.imvp_count;
    j["max_space_dim"] = r.max_space_dim;
    j["final_rank"] = r.final_rank;
    j["converged"] = r.converged;
    j["termination_reason"] = to_string(r.termination);
    j["final_residual"] = r.final_residual;
    j["restarts"] = r.restarts;
    j["rank_at_first_convergence"] = r.rank_at_first_convergence;
    auto hist = nlohmann::ordered_json::array();
    for (const auto& [iter, rho] : r.residual_history) hist.push_back({iter, rho});
    j["residual_history"] = std::move(hist);
    return j;
}

inline SolveReport report_from_json(const nlohmann::json& j)
{
    SolveReport r;
    try {
        r.iterations = j.at("iterations").get<Index>();
        r.mvp_count = j.at("mvps").get<std::size_t>();
        r.imvp_count = j.at("imvps").get<std::size_t>();
        r.max_space_dim = j.at("max_space_dim").get<Index>();
        r.final_rank = j.at("final_rank").get<Index>();
        r.converged = j.at("converged").get<bool>();
        for (const auto& e : j.at("residual_history")) r.residual_history.emplace_back(e.at(0).get<Index>(), e.at(1).get<double>());
        if (j.contains("final_residual")) r.final_residual = j["final_residual"].get<double>();
        if (j.contains("restarts")) r.restarts = j["restarts"].get<Index>();
        if (j.contains("rank_at_first_convergence")) r.rank_at_first_convergence = j["rank_at_first_convergence"].get<Index>();
        const std::string reason = j.value("termination_reason", "max_iterations");
        r.termination = reason == "converged" ? Termination::converged
                        : reason == "stagnation" ? Termination::stagnation
                                                 : Termination::max_iterations;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse, std::string("report JSON: ") + e.what());
    }
    return r;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << '\n';
    if (!out) throw Error(ErrorKind::io, "write to '" + path.string() + "' failed");
}

inline nlohmann::json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "' for reading");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse, path.string() + ": " + e.what());
    }
}

/// V.mtx and T.mtx in `dir`.
inline void save_solution(const std::filesystem::path& dir, const LowRankSolution& sol)
{
    mm::save_dense(dir / "V.mtx", sol.v);
    mm::save_dense(dir / "T.mtx", sol.t);
}

inline LowRankSolution load_solution(const std::filesystem::path& dir)
{
    LowRankSolution sol{mm::read_dense(dir / "V.mtx"), mm::read_dense(dir / "T.mtx")};
    check_consistent(sol);
    return sol;
}

} // namespace rails
