#pragma once

#include "optidice/bench.hpp"
#include "optidice/mdp.hpp"
#include "optidice/solver.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>

namespace optidice {

/// MDP ⟷ JSON document {n_states, n_actions, gamma, p0, transition, reward}
/// with transition as nested [s][a][s'] arrays.
nlohmann::json mdp_to_json(const TabularMdp& mdp);
TabularMdp mdp_from_json(const nlohmann::json& doc);
void save_mdp(const TabularMdp& mdp, const std::filesystem::path& path);
TabularMdp load_mdp(const std::filesystem::path& path);

/// Dataset ⟷ CSV with header `traj_id,step,s,a,r,s_next,terminal`.
void write_dataset_csv(const Dataset& dataset, std::ostream& out);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_dataset_csv(std::istream& in, int n_states, int n_actions);
Dataset load_dataset(const std::filesystem::path& path, int n_states, int n_actions);

nlohmann::json policy_to_json(const Policy& pi);
Policy policy_from_json(const nlohmann::json& doc);

/// SolveResult → JSON (ν, λ, w, policy, objective, diagnostics).
nlohmann::json solve_result_to_json(const SolveResult& result);

/// SolverConfig from a JSON/TOML block with fields alpha, divergence,
/// normalization, tol, max_iter, damping, seed (all optional).
SolverConfig solver_config_from_json(const nlohmann::json& block, SolverConfig base = {});

/// BenchmarkConfig from a JSON/TOML document.
BenchmarkConfig benchmark_config_from_json(const nlohmann::json& doc);

/// runs.csv with header `run_id,traj_count,algorithm,normalized_perf,wall_time_s`;
/// bit-reproducible given the benchmark seed (see README on the
/// wall_time_s column).
void write_runs_csv(const std::vector<RunRecord>& records, std::ostream& out);
void save_runs_csv(const std::vector<RunRecord>& records, const std::filesystem::path& path);

nlohmann::json report_to_json(const AggregateReport& report, const std::vector<FailedRun>& failures);
void save_report(const AggregateReport& report, const std::vector<FailedRun>& failures,
                 const std::filesystem::path& path);

} // namespace optidice
