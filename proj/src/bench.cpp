#include "optidice/bench.hpp"

#include "optidice/rng.hpp"
#include "optidice/solver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace optidice {

namespace {

constexpr int kCoreStates = 50;
constexpr int kActions = 4;
constexpr int kConnectivity = 4;
constexpr double kDiscount = 0.95;
constexpr int kMaxTrajectorySteps = 250;
constexpr int kMaxPerturbations = 100000;
constexpr int kBootstrapResamples = 1000;

TabularMdp assemble_goal_mdp(const Eigen::MatrixXd& core_transition, int goal) {
    const int S = kCoreStates + 1; // + absorbing sink
    const int sink = kCoreStates;
    Eigen::MatrixXd transition = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(S) * kActions, S);
    Eigen::MatrixXd reward = Eigen::MatrixXd::Zero(S, kActions);
    for (int s = 0; s < kCoreStates; ++s) {
        for (int a = 0; a < kActions; ++a) {
            transition.row(s * kActions + a).head(kCoreStates) =
                core_transition.row(s * kActions + a);
        }
    }
    for (int a = 0; a < kActions; ++a) {
        // Entering the goal pays 1 and the episode ends in the sink.
        transition.row(goal * kActions + a).setZero();
        transition(goal * kActions + a, sink) = 1.0;
        reward(goal, a) = 1.0;
        transition(sink * kActions + a, sink) = 1.0;
    }
    Eigen::VectorXd p0 = Eigen::VectorXd::Zero(S);
    p0(0) = 1.0;
    return TabularMdp(S, kActions, std::move(transition), std::move(reward), std::move(p0),
                      kDiscount);
}

double initial_value(const TabularMdp& mdp, const Eigen::VectorXd& v) {
    return mdp.initial_dist().dot(v);
}

Policy softened_policy(const Eigen::MatrixXd& q, double tau) {
    Eigen::MatrixXd probs(q.rows(), q.cols());
    for (Eigen::Index s = 0; s < q.rows(); ++s) {
        const double top = q.row(s).maxCoeff();
        Eigen::RowVectorXd row = ((q.row(s).array() - top) / tau).exp();
        probs.row(s) = row / row.sum();
    }
    return Policy(std::move(probs));
}

struct AlgorithmRunner {
    const BenchmarkConfig& config;
    const TabularMdp& true_mdp;
    const Policy& pi_d;

    Policy train(const std::string& name, const Dataset& dataset, const TabularMdp& mle,
                 const StationaryDistribution* d_ref, int n_trajectories) const {
        if (name == "basic-rl") return basic_rl(dataset, true_mdp);
        if (name == "ramdp") return ramdp(dataset, true_mdp, config.baselines.kappa);
        if (name == "spibb") return spibb(dataset, true_mdp, pi_d, config.baselines.n_wedge);
        if (name == "optidice") {
            SolverConfig solver = SolverConfig::newton_defaults();
            solver.alpha = config.alpha_rule.value(n_trajectories);
            const SolveResult result = solve_newton_chi2(mle, *d_ref, solver);
            if (!result.converged) {
                throw std::runtime_error("optidice: Newton solve did not converge (grad norm " +
                                         std::to_string(result.grad_norm) + ")");
            }
            return result.policy;
        }
        throw std::invalid_argument("unknown algorithm: " + name);
    }
};

void validate_config(const BenchmarkConfig& config) {
    if (config.n_runs < 1) throw std::invalid_argument("benchmark: n_runs must be at least 1");
    if (config.zeta < 0.0 || config.zeta > 1.0)
        throw std::invalid_argument("benchmark: zeta must lie in [0, 1]");
    if (config.traj_counts.empty())
        throw std::invalid_argument("benchmark: traj_counts must be non-empty");
    for (int n : config.traj_counts) {
        if (n < 1) throw std::invalid_argument("benchmark: trajectory counts must be positive");
    }
    if (config.workers < 1) throw std::invalid_argument("benchmark: workers must be at least 1");
    for (const auto& name : config.algorithms) {
        if (name != "basic-rl" && name != "ramdp" && name != "spibb" && name != "optidice") {
            throw std::invalid_argument("unknown algorithm: " + name);
        }
    }
}

} // namespace

std::pair<TabularMdp, int> generate_random_mdp(std::uint64_t seed) {
    Rng rng(seed);
    // Connectivity-4 rows over the 50 core states with Dir(1,1,1,1) weights.
    Eigen::MatrixXd core =
        Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(kCoreStates) * kActions, kCoreStates);
    std::vector<int> candidates(kCoreStates);
    for (int s = 0; s < kCoreStates; ++s) {
        for (int a = 0; a < kActions; ++a) {
            std::iota(candidates.begin(), candidates.end(), 0);
            double weights[kConnectivity];
            double total = 0.0;
            int successors[kConnectivity];
            for (int k = 0; k < kConnectivity; ++k) {
                const int pick = k + rng.uniform_int(kCoreStates - k);
                std::swap(candidates[k], candidates[pick]);
                successors[k] = candidates[k];
                weights[k] = rng.exponential();
                total += weights[k];
            }
            for (int k = 0; k < kConnectivity; ++k) {
                core(s * kActions + a, successors[k]) = weights[k] / total;
            }
        }
    }

    // The goal is the candidate state whose optimal value at s0 is smallest,
    // i.e. the state hardest to reach; recompute the optimal value for each
    // candidate.
    int goal = -1;
    double goal_value = std::numeric_limits<double>::infinity();
    for (int g = 1; g < kCoreStates; ++g) {
        const TabularMdp candidate = assemble_goal_mdp(core, g);
        const auto [values, pi] = solve_optimal(candidate);
        const double v0 = initial_value(candidate, values.v);
        if (v0 < goal_value) {
            goal_value = v0;
            goal = g;
        }
    }
    return {assemble_goal_mdp(core, goal), goal};
}

Policy construct_behavior_policy(const TabularMdp& mdp, double zeta,
                                 const Eigen::VectorXd& v_star, const Eigen::MatrixXd& q_star,
                                 const Eigen::VectorXd& v_unif, std::uint64_t seed) {
    if (zeta < 0.0 || zeta > 1.0) {
        throw std::invalid_argument("construct_behavior_policy: zeta must lie in [0, 1]");
    }
    if (v_star.size() != mdp.n_states() || v_unif.size() != mdp.n_states() ||
        q_star.rows() != mdp.n_states() || q_star.cols() != mdp.n_actions()) {
        throw std::invalid_argument("construct_behavior_policy: value shape mismatch");
    }
    Rng rng(seed);
    Policy pi = greedy_policy(q_star);
    const double greedy_value = initial_value(mdp, evaluate_policy(mdp, pi).v);
    // Anchoring the optimal level at the greedy policy's own evaluation keeps
    // the ζ = 1 guards false at entry regardless of solver roundoff.
    const double opt = std::max(mdp.initial_dist().dot(v_star), greedy_value);
    const double unif = mdp.initial_dist().dot(v_unif);
    const double target = zeta * opt + (1.0 - zeta) * unif;
    const double halfway = 0.5 * opt + 0.5 * target;

    // Temperature softening until the (ζ+1)/2 mixture level.
    double tau = 1e-7;
    const int max_softening = 20000;
    int softenings = 0;
    double value = greedy_value;
    while (value > halfway) {
        if (softenings++ >= max_softening) {
            throw std::runtime_error("construct_behavior_policy: softening did not converge");
        }
        pi = softened_policy(q_star, tau);
        tau /= 0.9;
        value = initial_value(mdp, evaluate_policy(mdp, pi).v);
    }

    // Perturbation: discount the optimal action at random states until the
    // ζ level is reached.
    for (int i = 0; i <= kMaxPerturbations; ++i) {
        const double value = initial_value(mdp, evaluate_policy(mdp, pi).v);
        if (value <= target) return pi;
        if (i == kMaxPerturbations) break;
        const int s = rng.uniform_int(mdp.n_states());
        int best = 0;
        for (int a = 1; a < mdp.n_actions(); ++a) {
            if (q_star(s, a) > q_star(s, best)) best = a;
        }
        Eigen::MatrixXd probs = pi.probs;
        probs(s, best) *= 0.9;
        probs.row(s) /= probs.row(s).sum();
        pi = Policy(std::move(probs));
    }
    throw std::runtime_error("construct_behavior_policy: perturbation cap exceeded");
}

NormalizedPerf normalized_performance(double v_pi, double v_behavior, double v_star) {
    if (!(v_star > v_behavior)) {
        return NormalizedPerf{0.0, true};
    }
    return NormalizedPerf{(v_pi - v_behavior) / (v_star - v_behavior), false};
}

double cvar(std::vector<double> values, double level) {
    if (values.empty()) throw std::invalid_argument("cvar: empty value list");
    if (!(level > 0.0 && level <= 1.0)) throw std::invalid_argument("cvar: level must be in (0, 1]");
    const auto n = values.size();
    const auto k = static_cast<std::size_t>(std::ceil(level * static_cast<double>(n)));
    std::partial_sort(values.begin(), values.begin() + k, values.end());
    return std::accumulate(values.begin(), values.begin() + k, 0.0) / static_cast<double>(k);
}

double paired_cvar_pvalue(const std::vector<double>& a, const std::vector<double>& b,
                          double level, int resamples, std::uint64_t seed) {
    if (a.size() != b.size() || a.empty()) {
        throw std::invalid_argument("paired_cvar_pvalue: paired samples of equal size required");
    }
    Rng rng(seed);
    const int n = static_cast<int>(a.size());
    int not_better = 0;
    std::vector<double> ra(n), rb(n);
    for (int rep = 0; rep < resamples; ++rep) {
        for (int i = 0; i < n; ++i) {
            const int j = rng.uniform_int(n);
            ra[i] = a[j];
            rb[i] = b[j];
        }
        if (cvar(ra, level) - cvar(rb, level) <= 0.0) ++not_better;
    }
    return (not_better + 1.0) / (resamples + 1.0);
}

BenchmarkOutput run_benchmark(const BenchmarkConfig& config) {
    validate_config(config);
    const int n_runs = config.n_runs;
    const bool wants_optidice =
        std::find(config.algorithms.begin(), config.algorithms.end(), "optidice") !=
        config.algorithms.end();

    std::vector<std::vector<RunRecord>> per_run_records(n_runs);
    std::vector<std::vector<FailedRun>> per_run_failures(n_runs);

    auto run_one_inner = [&](int run_id) {
        const auto [mdp, goal] = generate_random_mdp(derive_seed(config.seed, {0x01, (std::uint64_t)run_id}));
        const int sink = mdp.n_states() - 1;
        const auto [opt_values, pi_star] = solve_optimal(mdp);
        const Eigen::VectorXd v_unif =
            evaluate_policy(mdp, uniform_policy(mdp.n_states(), mdp.n_actions())).v;
        const Policy pi_d = construct_behavior_policy(
            mdp, config.zeta, opt_values.v, opt_values.q, v_unif,
            derive_seed(config.seed, {0x02, (std::uint64_t)run_id}));
        const double v_star = mdp.initial_dist().dot(opt_values.v);
        const double v_behavior = mdp.initial_dist().dot(evaluate_policy(mdp, pi_d).v);
        AlgorithmRunner runner{config, mdp, pi_d};

        for (int n_traj : config.traj_counts) {
            const Dataset dataset = sample_trajectories(
                mdp, pi_d, n_traj, kMaxTrajectorySteps, {sink},
                derive_seed(config.seed, {0x03, (std::uint64_t)run_id, (std::uint64_t)n_traj}));
            const TabularMdp mle = mle_mdp(dataset, mdp);
            StationaryDistribution d_ref;
            if (wants_optidice) {
                d_ref = stationary_distribution(mle, pi_d);
            }
            for (const auto& name : config.algorithms) {
                const auto started = std::chrono::steady_clock::now();
                try {
                    const Policy pi = runner.train(name, dataset, mle, &d_ref, n_traj);
                    const double v = mdp.initial_dist().dot(evaluate_policy(mdp, pi).v);
                    const double elapsed =
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                            .count();
                    per_run_records[run_id].push_back(RunRecord{
                        run_id, n_traj, name, normalized_performance(v, v_behavior, v_star).value,
                        elapsed});
                } catch (const std::exception& e) {
                    per_run_failures[run_id].push_back(FailedRun{run_id, n_traj, name, e.what()});
                }
            }
        }
    };
    auto run_one = [&](int run_id) {
        try {
            run_one_inner(run_id);
        } catch (const std::exception& e) {
            // Instance generation or behavior construction failed: every cell
            // of this run counts as failed.
            per_run_records[run_id].clear();
            for (int n_traj : config.traj_counts) {
                for (const auto& name : config.algorithms) {
                    per_run_failures[run_id].push_back(FailedRun{run_id, n_traj, name, e.what()});
                }
            }
        }
    };

    const int workers = std::min(config.workers, n_runs);
    if (workers <= 1) {
        for (int r = 0; r < n_runs; ++r) run_one(r);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                while (true) {
                    const int r = next.fetch_add(1);
                    if (r >= n_runs) break;
                    run_one(r);
                }
            });
        }
        for (auto& t : pool) t.join();
    }

    BenchmarkOutput output;
    for (int r = 0; r < n_runs; ++r) {
        output.records.insert(output.records.end(), per_run_records[r].begin(),
                              per_run_records[r].end());
        output.failures.insert(output.failures.end(), per_run_failures[r].begin(),
                               per_run_failures[r].end());
    }

    for (std::size_t ai = 0; ai < config.algorithms.size(); ++ai) {
        const auto& name = config.algorithms[ai];
        for (int n_traj : config.traj_counts) {
            AggregateCell cell;
            cell.algorithm = name;
            cell.traj_count = n_traj;
            std::vector<double> perfs;
            for (const auto& rec : output.records) {
                if (rec.algorithm == name && rec.traj_count == n_traj) {
                    perfs.push_back(rec.normalized_perf);
                }
            }
            for (const auto& fail : output.failures) {
                if (fail.algorithm == name && fail.traj_count == n_traj) ++cell.n_failed;
            }
            cell.n_runs = static_cast<int>(perfs.size());
            if (!perfs.empty()) {
                cell.mean = std::accumulate(perfs.begin(), perfs.end(), 0.0) / perfs.size();
                cell.cvar05 = cvar(perfs, 0.05);
                // Percentile bootstrap, 1000 resamples, seeded independently
                // of the worker count.
                Rng rng(derive_seed(config.seed, {0xB0, ai, (std::uint64_t)n_traj}));
                std::vector<double> means(kBootstrapResamples), cvars(kBootstrapResamples);
                std::vector<double> resample(perfs.size());
                for (int rep = 0; rep < kBootstrapResamples; ++rep) {
                    for (std::size_t i = 0; i < perfs.size(); ++i) {
                        resample[i] = perfs[rng.uniform_int(static_cast<int>(perfs.size()))];
                    }
                    means[rep] = std::accumulate(resample.begin(), resample.end(), 0.0) /
                                 resample.size();
                    cvars[rep] = cvar(resample, 0.05);
                }
                auto halfwidth = [](std::vector<double>& xs) {
                    std::sort(xs.begin(), xs.end());
                    const auto lo = static_cast<std::size_t>(0.025 * (xs.size() - 1));
                    const auto hi = static_cast<std::size_t>(0.975 * (xs.size() - 1));
                    return 0.5 * (xs[hi] - xs[lo]);
                };
                cell.ci95_halfwidth_mean = halfwidth(means);
                cell.ci95_halfwidth_cvar = halfwidth(cvars);
            } else {
                cell.mean = std::numeric_limits<double>::quiet_NaN();
                cell.cvar05 = std::numeric_limits<double>::quiet_NaN();
            }
            output.report.cells.push_back(std::move(cell));
        }
    }
    return output;
}

} // namespace optidice
