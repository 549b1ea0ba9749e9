#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "optidice/config.hpp"
#include "optidice/io.hpp"
#include "optidice/selfcheck.hpp"
#include "test_util.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace optidice;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("optidice_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int run_cli(const std::string& args) {
    const std::string command = std::string(CLI_BINARY_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(command.c_str());
    return WEXITSTATUS(status);
}

} // namespace

TEST_CASE("toml parser covers the config subset") {
    const std::string text = R"(# comment
n_runs = 12
zeta = 0.9            # trailing comment
name = "hello # world"
flag = true
counts = [1, 2, 3]
algorithms = ["a", "b"]

[solver]
alpha = 1e-3
max_iter = 200
)";
    const nlohmann::json doc = parse_toml(text);
    CHECK(doc["n_runs"] == 12);
    CHECK(doc["zeta"] == 0.9);
    CHECK(doc["name"] == "hello # world");
    CHECK(doc["flag"] == true);
    CHECK(doc["counts"] == nlohmann::json({1, 2, 3}));
    CHECK(doc["algorithms"] == nlohmann::json({"a", "b"}));
    CHECK(doc["solver"]["alpha"] == 1e-3);
    CHECK(doc["solver"]["max_iter"] == 200);
    CHECK_THROWS_AS(parse_toml("key value"), std::invalid_argument);
    CHECK_THROWS_AS(parse_toml("x = [1, 2"), std::invalid_argument);
}

TEST_CASE("config loader accepts JSON and TOML interchangeably") {
    const fs::path dir = temp_dir("config");
    {
        std::ofstream out(dir / "a.toml");
        out << "n_runs = 3\nzeta = 0.5\n";
    }
    {
        std::ofstream out(dir / "b.json");
        out << R"({"n_runs": 3, "zeta": 0.5})";
    }
    const BenchmarkConfig a = benchmark_config_from_json(load_config_file(dir / "a.toml"));
    const BenchmarkConfig b = benchmark_config_from_json(load_config_file(dir / "b.json"));
    CHECK(a.n_runs == b.n_runs);
    CHECK(a.zeta == b.zeta);
    CHECK_THROWS(load_config_file(dir / "missing.toml"));
}

TEST_CASE("benchmark config parsing: alpha rule variants") {
    CHECK(benchmark_config_from_json(parse_toml("alpha_rule = \"inverse_n\"")).alpha_rule.value(50) ==
          doctest::Approx(0.02));
    const BenchmarkConfig fixed = benchmark_config_from_json(parse_toml("alpha_rule = 0.25"));
    CHECK(fixed.alpha_rule.value(50) == 0.25);
    CHECK_THROWS_AS(benchmark_config_from_json(parse_toml("alpha_rule = \"sqrt_n\"")),
                    std::invalid_argument);
}

TEST_CASE("mdp json round trip is exact") {
    Rng rng(71);
    const TabularMdp mdp = test::random_mdp(rng, 6, 3, 0.93);
    const TabularMdp back = mdp_from_json(mdp_to_json(mdp));
    CHECK((back.transition() - mdp.transition()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.reward() - mdp.reward()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.initial_dist() - mdp.initial_dist()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.discount() == mdp.discount());
}

TEST_CASE("dataset csv round trip preserves counts") {
    Rng rng(73);
    const TabularMdp mdp = test::random_mdp(rng, 5, 2, 0.9);
    const Dataset data =
        sample_trajectories(mdp, test::random_positive_policy(rng, 5, 2), 7, 15, {}, 3);
    std::stringstream buffer;
    write_dataset_csv(data, buffer);
    const Dataset back = read_dataset_csv(buffer, 5, 2);
    CHECK(back.total_transitions() == data.total_transitions());
    CHECK((back.counts_sa() - data.counts_sa()).cwiseAbs().maxCoeff() == 0);
    CHECK((back.counts_sas() - data.counts_sas()).cwiseAbs().maxCoeff() == 0);
    CHECK(back.trajectories().size() == data.trajectories().size());
}

TEST_CASE("policy json round trip") {
    Rng rng(79);
    const Policy pi = test::random_positive_policy(rng, 4, 3);
    const Policy back = policy_from_json(policy_to_json(pi));
    CHECK((back.probs - pi.probs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("solver config from json block") {
    const nlohmann::json block = parse_toml(R"(alpha = 0.5
divergence = "soft-chi2"
normalization = true
tol = 1e-7
max_iter = 50
damping = 1e-8
seed = 9
)");
    const SolverConfig config = solver_config_from_json(block);
    CHECK(config.alpha == 0.5);
    CHECK(config.divergence.kind() == DivergenceKind::SoftChi2);
    CHECK(config.normalization);
    CHECK(config.tol == 1e-7);
    CHECK(config.max_iter == 50);
    CHECK(config.damping == 1e-8);
    CHECK(config.seed == 9);
}

TEST_CASE("runs csv writer output shape") {
    std::vector<RunRecord> records{{0, 10, "basic-rl", 0.5, 0.1}, {1, 10, "basic-rl", -0.25, 0.2}};
    std::stringstream out;
    write_runs_csv(records, out);
    CHECK(out.str() ==
          "run_id,traj_count,algorithm,normalized_perf,wall_time_s\n"
          "0,10,basic-rl,0.5,0.000\n"
          "1,10,basic-rl,-0.25,0.000\n");
}

TEST_CASE("cli: missing config exits with usage error") {
    CHECK(run_cli("bench --config /nonexistent/really_not_here.toml --out /tmp") == 2);
    CHECK(run_cli("bench") == 2);
    CHECK(run_cli("definitely-not-a-subcommand") == 2);
}

TEST_CASE("cli: smoke benchmark is reproducible and fast") {
    const fs::path dir = temp_dir("cli_bench");
    const auto started = std::chrono::steady_clock::now();
    const std::string config = std::string(CONFIG_DIR) + "/bench_smoke.toml";
    REQUIRE(run_cli("bench --config " + config + " --out " + (dir / "one").string()) == 0);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    CHECK(elapsed < 60.0);
    REQUIRE(run_cli("bench --config " + config + " --out " + (dir / "two").string()) == 0);
    CHECK(slurp(dir / "one" / "runs.csv") == slurp(dir / "two" / "runs.csv"));
    CHECK(slurp(dir / "one" / "report.json") == slurp(dir / "two" / "report.json"));
}

TEST_CASE("cli: solve pipeline on a single-state input") {
    const fs::path dir = temp_dir("cli_solve");
    const TabularMdp mdp = test::trivial_mdp(0.6, 0.9);
    save_mdp(mdp, dir / "mdp.json");
    const Dataset data = sample_trajectories(mdp, uniform_policy(1, 1), 3, 5, {}, 1);
    save_dataset(data, dir / "data.csv");
    {
        std::ofstream out(dir / "solve.toml");
        out << "mdp = \"mdp.json\"\ndataset = \"data.csv\"\nd_ref = \"empirical\"\n"
               "method = \"newton\"\n\n[solver]\nalpha = 1.0\n";
    }
    REQUIRE(run_cli("solve --config " + (dir / "solve.toml").string() + " --out " +
                    (dir / "out").string()) == 0);
    const nlohmann::json result = nlohmann::json::parse(slurp(dir / "out" / "solve_result.json"));
    CHECK(result["converged"] == true);
    CHECK(result["w"][0][0].get<double>() == doctest::Approx(1.0).epsilon(1e-9));

    // Identical invocation produces identical bytes.
    REQUIRE(run_cli("solve --config " + (dir / "solve.toml").string() + " --out " +
                    (dir / "out2").string()) == 0);
    CHECK(slurp(dir / "out" / "solve_result.json") == slurp(dir / "out2" / "solve_result.json"));
}

TEST_CASE("cli: alpha sweep reports non-increasing corrected reward") {
    const fs::path dir = temp_dir("cli_sweep");
    Rng rng(83);
    const TabularMdp mdp = test::random_mdp(rng, 6, 2, 0.9);
    save_mdp(mdp, dir / "mdp.json");
    const Dataset data =
        sample_trajectories(mdp, test::random_positive_policy(rng, 6, 2), 50, 40, {}, 2);
    save_dataset(data, dir / "data.csv");
    {
        std::ofstream out(dir / "solve.toml");
        out << "mdp = \"mdp.json\"\ndataset = \"data.csv\"\nd_ref = \"behavior-on-mle\"\n"
               "method = \"newton\"\n";
    }
    REQUIRE(run_cli("solve --config " + (dir / "solve.toml").string() + " --out " +
                    (dir / "out").string() + " --alpha 1e-4,1,1e4") == 0);
    double previous = std::numeric_limits<double>::infinity();
    for (const std::string label : {"1e-4", "1", "1e4"}) {
        const nlohmann::json result = nlohmann::json::parse(
            slurp(dir / "out" / ("solve_result_alpha_" + label + ".json")));
        const double reward = result["mle_expected_reward"].get<double>();
        CHECK(reward <= previous + 1e-6);
        previous = reward;
    }
}

TEST_CASE("cli: solver non-convergence exits with code 3") {
    const fs::path dir = temp_dir("cli_nonconv");
    Rng rng(89);
    const TabularMdp mdp = test::random_mdp(rng, 4, 2, 0.9);
    save_mdp(mdp, dir / "mdp.json");
    const Dataset data =
        sample_trajectories(mdp, test::random_positive_policy(rng, 4, 2), 10, 20, {}, 4);
    save_dataset(data, dir / "data.csv");
    {
        std::ofstream out(dir / "solve.toml");
        out << "mdp = \"mdp.json\"\ndataset = \"data.csv\"\nd_ref = \"empirical\"\n"
               "method = \"newton\"\n\n[solver]\nalpha = 0.1\nmax_iter = 0\n";
    }
    CHECK(run_cli("solve --config " + (dir / "solve.toml").string() + " --out " +
                  (dir / "out").string()) == 3);
    const nlohmann::json result = nlohmann::json::parse(slurp(dir / "out" / "solve_result.json"));
    CHECK(result["converged"] == false);
}

TEST_CASE("cli: fourrooms writes the four grids") {
    const fs::path dir = temp_dir("cli_fourrooms");
    REQUIRE(run_cli("fourrooms --out " + dir.string() + " --seed 0") == 0);
    for (const std::string name : {"fig1_a", "fig1_b", "fig1_c", "fig1_d"}) {
        CHECK(fs::exists(dir / (name + ".csv")));
        CHECK(fs::exists(dir / (name + ".json")));
    }
    const nlohmann::json sidecar = nlohmann::json::parse(slurp(dir / "fig1_a.json"));
    CHECK(sidecar["action_codes"]["0"] == "up");
    CHECK(sidecar["action_codes"]["3"] == "right");
    CHECK(sidecar["actions"].size() == 11);
}

TEST_CASE("cli: selfcheck passes quickly") {
    const auto started = std::chrono::steady_clock::now();
    CHECK(run_cli("selfcheck") == 0);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    CHECK(elapsed < 30.0);
}

TEST_CASE("selfcheck negative control: a flipped gradient fails the gradient family") {
    SelfcheckOptions options;
    options.flip_gradient_sign = true;
    const SelfcheckReport report = run_selfcheck(options);
    bool gradient_failed = false;
    for (const auto& family : report.families) {
        if (family.name == "gradient") gradient_failed = !family.passed;
    }
    CHECK(gradient_failed);
    CHECK_FALSE(report.all_passed());
}
