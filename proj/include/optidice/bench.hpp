#pragma once

#include "optidice/baselines.hpp"
#include "optidice/mdp.hpp"

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace optidice {

/// α selection for OptiDICE inside the benchmark: either the
/// trajectory-count rule α = N⁻¹ or a fixed value.
struct AlphaRule {
    bool inverse_n = true;
    double fixed = 1.0;

    double value(int n_trajectories) const {
        return inverse_n ? 1.0 / static_cast<double>(n_trajectories) : fixed;
    }
};

struct BenchmarkConfig {
    int n_runs = 100;
    double zeta = 0.9;
    std::vector<int> traj_counts{10, 50, 200, 1000};
    std::vector<std::string> algorithms{"optidice", "basic-rl", "ramdp", "spibb"};
    AlphaRule alpha_rule;
    BaselineConfig baselines;
    std::uint64_t seed = 0;
    int workers = 1;
};

struct RunRecord {
    int run_id = 0;
    int traj_count = 0;
    std::string algorithm;
    double normalized_perf = 0.0;
    double wall_time = 0.0; // seconds, measured; excluded from reproducible outputs
};

struct FailedRun {
    int run_id = 0;
    int traj_count = 0;
    std::string algorithm;
    std::string message;
};

struct AggregateCell {
    std::string algorithm;
    int traj_count = 0;
    double mean = 0.0;
    double cvar05 = 0.0;
    double ci95_halfwidth_mean = 0.0;
    double ci95_halfwidth_cvar = 0.0;
    int n_runs = 0;
    int n_failed = 0;
};

struct AggregateReport {
    std::vector<AggregateCell> cells; // ordered by (algorithm list position, traj_count)
};

struct BenchmarkOutput {
    std::vector<RunRecord> records;
    std::vector<FailedRun> failures;
    AggregateReport report;
};

/// Random 50-state 4-action γ=0.95 MDP with connectivity 4 and Dir(1,1,1,1)
/// transition rows, plus an absorbing zero-reward sink appended as state 50.
/// The goal is the state hardest to reach from s0 = 0 (argmin over candidate
/// goals of the recomputed optimal value); entering it pays reward 1 and
/// leads to the sink. Deterministic given the seed.
std::pair<TabularMdp, int> generate_random_mdp(std::uint64_t seed);

/// Data-collection policy at optimality level ζ: softens the greedy policy
/// by temperature until the (ζ+1)/2 mixture level, then discounts the
/// optimal action at randomly chosen states until
/// V(s0) ≤ ζV*(s0) + (1−ζ)V^unif(s0). Throws after 10^5 perturbations.
Policy construct_behavior_policy(const TabularMdp& mdp, double zeta,
                                 const Eigen::VectorXd& v_star, const Eigen::MatrixXd& q_star,
                                 const Eigen::VectorXd& v_unif, std::uint64_t seed);

struct NormalizedPerf {
    double value = 0.0;
    bool degenerate = false;
};

/// Affine rescaling (v_pi − v_behavior)/(v_star − v_behavior): 0 at behavior
/// level, 1 at optimal. Degenerate v_star = v_behavior yields 0 with a flag.
NormalizedPerf normalized_performance(double v_pi, double v_behavior, double v_star);

/// Mean of the ⌈level·n⌉ smallest values.
double cvar(std::vector<double> values, double level);

/// One-sided paired bootstrap p-value for the hypothesis that the CVaR of
/// `a` does not exceed the CVaR of `b`; small p supports CVaR(a) > CVaR(b).
double paired_cvar_pvalue(const std::vector<double>& a, const std::vector<double>& b,
                          double level, int resamples, std::uint64_t seed);

/// Full benchmark: per run a fresh MDP and behavior policy, per trajectory
/// count one dataset shared by every algorithm, evaluation on the true MDP,
/// normalized performance, and per-cell aggregation with percentile
/// bootstrap confidence intervals. Deterministic given the seed regardless
/// of the worker count; failed runs are excluded from aggregates.
BenchmarkOutput run_benchmark(const BenchmarkConfig& config);

} // namespace optidice
