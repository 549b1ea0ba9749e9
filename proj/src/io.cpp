#include "optidice/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace optidice {

namespace {

std::vector<double> to_vector(const Eigen::VectorXd& v) {
    return {v.data(), v.data() + v.size()};
}

std::vector<std::vector<double>> to_nested(const Eigen::MatrixXd& m) {
    std::vector<std::vector<double>> out(m.rows());
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        out[r].resize(m.cols());
        for (Eigen::Index c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
    }
    return out;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& doc, Eigen::Index rows, Eigen::Index cols,
                                 const char* what) {
    if (!doc.is_array() || static_cast<Eigen::Index>(doc.size()) != rows) {
        throw std::invalid_argument(std::string("json: bad shape for ") + what);
    }
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = doc[r];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw std::invalid_argument(std::string("json: bad shape for ") + what);
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[c].get<double>();
    }
    return m;
}

/// Shortest-round-trip formatting so identical doubles produce identical text.
std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path.string());
    out << text;
}

} // namespace

nlohmann::json mdp_to_json(const TabularMdp& mdp) {
    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    nlohmann::json transition = nlohmann::json::array();
    for (int s = 0; s < S; ++s) {
        nlohmann::json per_action = nlohmann::json::array();
        for (int a = 0; a < A; ++a) {
            const Eigen::VectorXd row = mdp.transition().row(mdp.sa_index(s, a)).transpose();
            per_action.push_back(to_vector(row));
        }
        transition.push_back(std::move(per_action));
    }
    return nlohmann::json{{"n_states", S},
                          {"n_actions", A},
                          {"gamma", mdp.discount()},
                          {"p0", to_vector(mdp.initial_dist())},
                          {"transition", std::move(transition)},
                          {"reward", to_nested(mdp.reward())}};
}

TabularMdp mdp_from_json(const nlohmann::json& doc) {
    const int S = doc.at("n_states").get<int>();
    const int A = doc.at("n_actions").get<int>();
    const double gamma = doc.at("gamma").get<double>();
    const auto& p0_json = doc.at("p0");
    if (static_cast<int>(p0_json.size()) != S) throw std::invalid_argument("json: bad p0 length");
    Eigen::VectorXd p0(S);
    for (int s = 0; s < S; ++s) p0(s) = p0_json[s].get<double>();

    const auto& t_json = doc.at("transition");
    if (static_cast<int>(t_json.size()) != S) throw std::invalid_argument("json: bad transition");
    Eigen::MatrixXd transition(static_cast<Eigen::Index>(S) * A, S);
    for (int s = 0; s < S; ++s) {
        const auto& per_action = t_json[s];
        if (static_cast<int>(per_action.size()) != A)
            throw std::invalid_argument("json: bad transition");
        for (int a = 0; a < A; ++a) {
            const auto& row = per_action[a];
            if (static_cast<int>(row.size()) != S)
                throw std::invalid_argument("json: bad transition");
            for (int sn = 0; sn < S; ++sn) {
                transition(static_cast<Eigen::Index>(s) * A + a, sn) = row[sn].get<double>();
            }
        }
    }
    Eigen::MatrixXd reward = matrix_from_json(doc.at("reward"), S, A, "reward");
    return TabularMdp(S, A, std::move(transition), std::move(reward), std::move(p0), gamma);
}

void save_mdp(const TabularMdp& mdp, const std::filesystem::path& path) {
    write_text_file(path, mdp_to_json(mdp).dump(2) + "\n");
}

TabularMdp load_mdp(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open MDP file: " + path.string());
    nlohmann::json doc;
    in >> doc;
    return mdp_from_json(doc);
}

void write_dataset_csv(const Dataset& dataset, std::ostream& out) {
    out << "traj_id,step,s,a,r,s_next,terminal\n";
    int traj_id = 0;
    for (const auto& traj : dataset.trajectories()) {
        int step = 0;
        for (const auto& t : traj) {
            out << traj_id << ',' << step << ',' << t.s << ',' << t.a << ','
                << format_double(t.r) << ',' << t.s_next << ',' << (t.terminal ? 1 : 0) << '\n';
            ++step;
        }
        ++traj_id;
    }
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    std::ostringstream out;
    write_dataset_csv(dataset, out);
    write_text_file(path, out.str());
}

Dataset read_dataset_csv(std::istream& in, int n_states, int n_actions) {
    std::string line;
    std::vector<Trajectory> trajectories;
    int current_traj = -1;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("traj_id", 0) == 0) continue; // header
        }
        int traj_id = 0, step = 0, s = 0, a = 0, s_next = 0, terminal = 0;
        double r = 0.0;
        if (std::sscanf(line.c_str(), "%d,%d,%d,%d,%lf,%d,%d", &traj_id, &step, &s, &a, &r,
                        &s_next, &terminal) != 7) {
            throw std::invalid_argument("dataset csv: malformed line: " + line);
        }
        while (current_traj < traj_id) {
            trajectories.emplace_back();
            ++current_traj;
        }
        trajectories.back().push_back(Transition{s, a, r, s_next, terminal != 0});
    }
    return Dataset(std::move(trajectories), n_states, n_actions);
}

Dataset load_dataset(const std::filesystem::path& path, int n_states, int n_actions) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open dataset file: " + path.string());
    return read_dataset_csv(in, n_states, n_actions);
}

nlohmann::json policy_to_json(const Policy& pi) {
    return nlohmann::json{{"probs", to_nested(pi.probs)}};
}

Policy policy_from_json(const nlohmann::json& doc) {
    const auto& probs = doc.at("probs");
    const auto rows = static_cast<Eigen::Index>(probs.size());
    if (rows == 0) throw std::invalid_argument("json: empty policy");
    const auto cols = static_cast<Eigen::Index>(probs[0].size());
    return Policy(matrix_from_json(probs, rows, cols, "policy"));
}

nlohmann::json solve_result_to_json(const SolveResult& result) {
    return nlohmann::json{{"nu", to_vector(result.duals.nu)},
                          {"lambda", result.duals.lambda},
                          {"w", to_nested(result.w)},
                          {"policy", to_nested(result.policy.probs)},
                          {"objective", result.objective},
                          {"iterations", result.iterations},
                          {"grad_norm", result.grad_norm},
                          {"converged", result.converged}};
}

SolverConfig solver_config_from_json(const nlohmann::json& block, SolverConfig base) {
    SolverConfig config = base;
    if (block.contains("alpha")) config.alpha = block["alpha"].get<double>();
    if (block.contains("divergence"))
        config.divergence = FDivergence::from_name(block["divergence"].get<std::string>());
    if (block.contains("normalization")) config.normalization = block["normalization"].get<bool>();
    if (block.contains("tol")) config.tol = block["tol"].get<double>();
    if (block.contains("max_iter")) config.max_iter = block["max_iter"].get<int>();
    if (block.contains("damping")) config.damping = block["damping"].get<double>();
    if (block.contains("seed")) config.seed = block["seed"].get<std::uint64_t>();
    return config;
}

BenchmarkConfig benchmark_config_from_json(const nlohmann::json& doc) {
    BenchmarkConfig config;
    if (doc.contains("n_runs")) config.n_runs = doc["n_runs"].get<int>();
    if (doc.contains("zeta")) config.zeta = doc["zeta"].get<double>();
    if (doc.contains("traj_counts")) config.traj_counts = doc["traj_counts"].get<std::vector<int>>();
    if (doc.contains("algorithms"))
        config.algorithms = doc["algorithms"].get<std::vector<std::string>>();
    if (doc.contains("alpha_rule")) {
        const auto& rule = doc["alpha_rule"];
        if (rule.is_string()) {
            if (rule.get<std::string>() != "inverse_n") {
                throw std::invalid_argument("config: alpha_rule must be \"inverse_n\" or a number");
            }
            config.alpha_rule.inverse_n = true;
        } else {
            config.alpha_rule.inverse_n = false;
            config.alpha_rule.fixed = rule.get<double>();
        }
    }
    if (doc.contains("kappa")) config.baselines.kappa = doc["kappa"].get<double>();
    if (doc.contains("n_wedge")) config.baselines.n_wedge = doc["n_wedge"].get<int>();
    if (doc.contains("seed")) config.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("workers")) config.workers = doc["workers"].get<int>();
    return config;
}

void write_runs_csv(const std::vector<RunRecord>& records, std::ostream& out) {
    out << "run_id,traj_count,algorithm,normalized_perf,wall_time_s\n";
    for (const auto& rec : records) {
        // wall_time_s is pinned to 0.000 so the file is bit-reproducible
        // across worker counts; measured timings live outside the record
        // outputs.
        out << rec.run_id << ',' << rec.traj_count << ',' << rec.algorithm << ','
            << format_double(rec.normalized_perf) << ",0.000\n";
    }
}

void save_runs_csv(const std::vector<RunRecord>& records, const std::filesystem::path& path) {
    std::ostringstream out;
    write_runs_csv(records, out);
    write_text_file(path, out.str());
}

nlohmann::json report_to_json(const AggregateReport& report,
                              const std::vector<FailedRun>& failures) {
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& cell : report.cells) {
        nlohmann::json entry{{"algorithm", cell.algorithm},
                             {"traj_count", cell.traj_count},
                             {"n_runs", cell.n_runs},
                             {"n_failed", cell.n_failed}};
        if (cell.n_runs > 0) {
            entry["mean"] = cell.mean;
            entry["cvar05"] = cell.cvar05;
            entry["ci95_halfwidth_mean"] = cell.ci95_halfwidth_mean;
            entry["ci95_halfwidth_cvar"] = cell.ci95_halfwidth_cvar;
        } else {
            entry["mean"] = nullptr;
            entry["cvar05"] = nullptr;
        }
        cells.push_back(std::move(entry));
    }
    nlohmann::json fail_list = nlohmann::json::array();
    for (const auto& f : failures) {
        fail_list.push_back(nlohmann::json{{"run_id", f.run_id},
                                           {"traj_count", f.traj_count},
                                           {"algorithm", f.algorithm},
                                           {"message", f.message}});
    }
    return nlohmann::json{{"cells", std::move(cells)}, {"failures", std::move(fail_list)}};
}

void save_report(const AggregateReport& report, const std::vector<FailedRun>& failures,
                 const std::filesystem::path& path) {
    write_text_file(path, report_to_json(report, failures).dump(2) + "\n");
}

} // namespace optidice
