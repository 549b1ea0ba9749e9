#include "optidice/bench.hpp"
#include "optidice/config.hpp"
#include "optidice/fourrooms.hpp"
#include "optidice/io.hpp"
#include "optidice/mdp.hpp"
#include "optidice/selfcheck.hpp"
#include "optidice/solver.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

namespace fs = std::filesystem;
using optidice::load_config_file;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNotConverged = 3;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::string alpha_list;
};

nlohmann::json load_config_or_exit(const std::string& path) {
    if (!fs::exists(path)) {
        throw CLI::ValidationError("config", "config file not found: " + path);
    }
    return load_config_file(path);
}

int cmd_bench(const CommonArgs& args) {
    optidice::BenchmarkConfig config =
        optidice::benchmark_config_from_json(load_config_or_exit(args.config_path));
    if (args.seed) config.seed = *args.seed;
    if (args.workers) config.workers = *args.workers;
    fs::create_directories(args.out_dir);

    const auto started = std::chrono::steady_clock::now();
    const optidice::BenchmarkOutput output = optidice::run_benchmark(config);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    optidice::save_runs_csv(output.records, fs::path(args.out_dir) / "runs.csv");
    optidice::save_report(output.report, output.failures, fs::path(args.out_dir) / "report.json");

    std::cout << std::left << std::setw(12) << "algorithm" << std::setw(8) << "N"
              << std::setw(12) << "mean" << std::setw(12) << "(ci95)" << std::setw(12) << "cvar05"
              << std::setw(12) << "(ci95)" << std::setw(8) << "runs" << "failed\n";
    for (const auto& cell : output.report.cells) {
        std::cout << std::left << std::setw(12) << cell.algorithm << std::setw(8)
                  << cell.traj_count << std::setw(12) << std::setprecision(4) << cell.mean
                  << std::setw(12) << cell.ci95_halfwidth_mean << std::setw(12) << cell.cvar05
                  << std::setw(12) << cell.ci95_halfwidth_cvar << std::setw(8) << cell.n_runs
                  << cell.n_failed << "\n";
    }
    std::cout << "total wall time: " << std::setprecision(3) << elapsed << " s\n";
    if (!output.failures.empty()) {
        std::cerr << output.failures.size() << " run(s) failed; see report.json\n";
        return kExitRuntime;
    }
    return kExitOk;
}

std::vector<std::pair<std::string, double>> parse_alpha_list(const std::string& list) {
    std::vector<std::pair<std::string, double>> out;
    std::stringstream ss(list);
    std::string token;
    while (std::getline(ss, token, ',')) {
        if (token.empty()) continue;
        out.emplace_back(token, std::stod(token));
    }
    if (out.empty()) {
        throw CLI::ValidationError("--alpha", "empty alpha list");
    }
    return out;
}

int cmd_solve(const CommonArgs& args) {
    const nlohmann::json doc = load_config_or_exit(args.config_path);
    const fs::path base = fs::path(args.config_path).parent_path();

    const auto resolve = [&](const std::string& p) {
        fs::path path(p);
        return path.is_absolute() ? path : base / path;
    };
    const optidice::TabularMdp mdp = optidice::load_mdp(resolve(doc.at("mdp").get<std::string>()));
    const optidice::Dataset dataset = optidice::load_dataset(
        resolve(doc.at("dataset").get<std::string>()), mdp.n_states(), mdp.n_actions());
    const optidice::TabularMdp mle = optidice::mle_mdp(dataset, mdp);

    const std::string d_ref_mode = doc.value("d_ref", std::string("behavior-on-mle"));
    optidice::StationaryDistribution d_ref;
    if (d_ref_mode == "empirical") {
        d_ref = optidice::empirical_distribution(dataset);
    } else if (d_ref_mode == "behavior-on-mle") {
        optidice::Policy pi_b = doc.contains("behavior_policy")
                                    ? optidice::policy_from_json(load_config_file(resolve(
                                          doc["behavior_policy"].get<std::string>())))
                                    : optidice::empirical_policy(dataset);
        d_ref = optidice::stationary_distribution(mle, pi_b);
    } else {
        throw CLI::ValidationError("config", "d_ref must be \"empirical\" or \"behavior-on-mle\"");
    }

    const std::string method = doc.value("method", std::string("newton"));
    optidice::SolverConfig solver =
        method == "newton" ? optidice::SolverConfig::newton_defaults()
                           : optidice::SolverConfig::first_order_defaults();
    if (doc.contains("solver")) solver = optidice::solver_config_from_json(doc["solver"], solver);
    if (args.seed) solver.seed = *args.seed;

    std::vector<std::pair<std::string, double>> alphas;
    if (!args.alpha_list.empty()) {
        alphas = parse_alpha_list(args.alpha_list);
    } else {
        alphas.emplace_back("", solver.alpha);
    }

    fs::create_directories(args.out_dir);
    bool all_converged = true;
    for (const auto& [label, alpha] : alphas) {
        solver.alpha = alpha;
        const optidice::SolveResult result =
            method == "newton" ? optidice::solve_newton_chi2(mle, d_ref, solver)
                               : optidice::solve_first_order(mle, d_ref, solver);
        nlohmann::json out = optidice::solve_result_to_json(result);
        out["alpha"] = alpha;
        out["divergence"] = solver.divergence.name();
        out["method"] = method;
        out["d_ref"] = d_ref_mode;
        out["mle_expected_reward"] =
            optidice::expected_reward(mle, d_ref.d.cwiseProduct(result.w));
        const std::string name =
            label.empty() ? "solve_result.json" : "solve_result_alpha_" + label + ".json";
        std::ofstream file(fs::path(args.out_dir) / name, std::ios::binary);
        file << out.dump(2) << "\n";
        std::cout << name << ": converged=" << (result.converged ? "yes" : "no")
                  << " objective=" << std::setprecision(10) << result.objective
                  << " iterations=" << result.iterations << "\n";
        all_converged = all_converged && result.converged;
    }
    return all_converged ? kExitOk : kExitNotConverged;
}

int cmd_fourrooms(const CommonArgs& args) {
    std::uint64_t seed = 0;
    double alpha = 0.001;
    if (!args.config_path.empty()) {
        const nlohmann::json doc = load_config_or_exit(args.config_path);
        seed = doc.value("seed", seed);
        alpha = doc.value("alpha", alpha);
    }
    if (args.seed) seed = *args.seed;

    const optidice::IllustrativeResult result = optidice::run_illustrative(seed, alpha);
    optidice::write_illustrative(result, args.out_dir);
    std::cout << "wrote fig1_a.csv ... fig1_d.csv to " << args.out_dir
              << " (alpha=" << alpha << ", seed=" << seed
              << ", converged=" << (result.solve.converged ? "yes" : "no") << ")\n";
    return result.solve.converged ? kExitOk : kExitNotConverged;
}

int cmd_selfcheck(const CommonArgs& args) {
    optidice::SelfcheckOptions options;
    if (args.seed) options.seed = *args.seed;
    const optidice::SelfcheckReport report = optidice::run_selfcheck(options);
    optidice::print_selfcheck(report, std::cout);
    return report.all_passed() ? kExitOk : kExitRuntime;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tabular offline RL: stationary distribution correction solver and benchmark"};
    app.require_subcommand(1);

    CommonArgs args;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* config_opt = cmd->add_option("--config", args.config_path, "config file (TOML or JSON)");
        if (needs_config) config_opt->required();
        cmd->add_option("--out", args.out_dir, "output directory");
        cmd->add_option("--seed", args.seed, "seed override");
        return cmd;
    };

    auto* bench = add_common(app.add_subcommand("bench", "run the random-MDP benchmark"), true);
    bench->add_option("--workers", args.workers, "parallel benchmark workers");
    auto* solve = add_common(app.add_subcommand("solve", "solve one offline dataset"), true);
    solve->add_option("--alpha", args.alpha_list, "comma-separated alpha sweep");
    add_common(app.add_subcommand("fourrooms", "run the Four Rooms illustrative experiment"),
               false);
    add_common(app.add_subcommand("selfcheck", "run the embedded property suites"), false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (app.got_subcommand("bench")) return cmd_bench(args);
        if (app.got_subcommand("solve")) return cmd_solve(args);
        if (app.got_subcommand("fourrooms")) return cmd_fourrooms(args);
        if (app.got_subcommand("selfcheck")) return cmd_selfcheck(args);
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
