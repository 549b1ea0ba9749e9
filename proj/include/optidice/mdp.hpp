#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <set>
#include <vector>

namespace optidice {

/// Finite MDP ⟨S, A, T, R, p0, γ⟩ stored densely.
///
/// The transition tensor is kept as a (|S|·|A|) × |S| row-stochastic matrix
/// whose row `s * n_actions + a` holds T(·|s,a); this is the layout every
/// solver operates on. Instances are immutable after construction and safe
/// to share across threads.
class TabularMdp {
  public:
    TabularMdp(int n_states, int n_actions, Eigen::MatrixXd transition,
               Eigen::MatrixXd reward, Eigen::VectorXd initial_dist, double discount);

    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }
    /// (|S|·|A|) × |S| matrix, row s*A+a = T(·|s,a).
    const Eigen::MatrixXd& transition() const { return transition_; }
    /// |S| × |A| reward table R(s,a).
    const Eigen::MatrixXd& reward() const { return reward_; }
    const Eigen::VectorXd& initial_dist() const { return initial_dist_; }
    double discount() const { return discount_; }

    int sa_index(int s, int a) const { return s * n_actions_ + a; }
    /// Reward table flattened to length |S|·|A| in sa_index order.
    Eigen::VectorXd reward_flat() const;

  private:
    int n_states_;
    int n_actions_;
    Eigen::MatrixXd transition_;
    Eigen::MatrixXd reward_;
    Eigen::VectorXd initial_dist_;
    double discount_;
};

/// Row-stochastic |S| × |A| action-selection matrix.
struct Policy {
    Eigen::MatrixXd probs;

    Policy() = default;
    explicit Policy(Eigen::MatrixXd p);

    int n_states() const { return static_cast<int>(probs.rows()); }
    int n_actions() const { return static_cast<int>(probs.cols()); }
};

/// Uniform policy over `n_actions`.
Policy uniform_policy(int n_states, int n_actions);

/// Deterministic policy that is greedy in `q`, ties broken by lowest action index.
Policy greedy_policy(const Eigen::MatrixXd& q);

/// Discounted (normalized) occupancy measure d(s,a) over state-action pairs.
struct StationaryDistribution {
    Eigen::MatrixXd d;

    /// Flattened view in sa_index order.
    Eigen::VectorXd flat() const;
};

/// State and action values of a fixed point of a Bellman operator.
struct ValueSolution {
    Eigen::VectorXd v;
    Eigen::MatrixXd q;
};

struct Transition {
    int s = 0;
    int a = 0;
    double r = 0.0;
    int s_next = 0;
    bool terminal = false;
};

using Trajectory = std::vector<Transition>;

/// Offline dataset: raw trajectories plus the derived count tables n(s,a)
/// and n(s,a,s') used by maximum-likelihood estimation.
class Dataset {
  public:
    Dataset(std::vector<Trajectory> trajectories, int n_states, int n_actions);

    const std::vector<Trajectory>& trajectories() const { return trajectories_; }
    int n_states() const { return n_states_; }
    int n_actions() const { return n_actions_; }
    /// n(s,a) visit counts, |S| × |A|.
    const Eigen::MatrixXi& counts_sa() const { return counts_sa_; }
    /// n(s,a,s') counts laid out as (|S|·|A|) × |S|.
    const Eigen::MatrixXi& counts_sas() const { return counts_sas_; }
    std::int64_t total_transitions() const { return total_; }

  private:
    std::vector<Trajectory> trajectories_;
    int n_states_;
    int n_actions_;
    Eigen::MatrixXi counts_sa_;
    Eigen::MatrixXi counts_sas_;
    std::int64_t total_ = 0;
};

/// Greedy optimal values via value iteration; requires γ < 1.
/// The returned q satisfies ‖q − (R + γ T max_a q)‖∞ ≤ tol and the policy is
/// greedy with ties broken by lowest action index.
std::pair<ValueSolution, Policy> solve_optimal(const TabularMdp& mdp, double tol = 1e-10);

/// Fixed point of the policy Bellman operator, solved by dense LU; γ < 1.
ValueSolution evaluate_policy(const TabularMdp& mdp, const Policy& pi, double tol = 1e-10);

/// Normalized discounted occupancy of `pi`: solves
/// μ = (1−γ)p0 + γ P_π^T μ and sets d(s,a) = μ(s)·π(a|s). Requires γ < 1.
StationaryDistribution stationary_distribution(const TabularMdp& mdp, const Policy& pi);

/// Residual of the Bellman flow constraints at each state:
/// (1−γ)p0 + γ T_* d − B_* d.
Eigen::VectorXd flow_residual(const TabularMdp& mdp, const Eigen::MatrixXd& d);

/// E_{(s,a)∼d}[R(s,a)] for an occupancy-like weight table d.
double expected_reward(const TabularMdp& mdp, const Eigen::MatrixXd& d);

/// Maximum-likelihood MDP from counts. Seen pairs get frequency transitions
/// and empirical mean rewards; unseen pairs become zero-reward self-loops.
/// n_states, n_actions, γ and p0 are taken from `template_mdp`.
TabularMdp mle_mdp(const Dataset& dataset, const TabularMdp& template_mdp);

/// Empirical state-action distribution n(s,a) / N of the dataset.
StationaryDistribution empirical_distribution(const Dataset& dataset);

/// Empirical behavior-policy estimate n(s,a)/n(s); unvisited states uniform.
Policy empirical_policy(const Dataset& dataset);

/// Rolls out `n_traj` trajectories under `pi`. Each trajectory ends on
/// entering a terminal state or after `max_steps` transitions. Deterministic
/// given the seed.
Dataset sample_trajectories(const TabularMdp& mdp, const Policy& pi, int n_traj,
                            int max_steps, const std::set<int>& terminal_states,
                            std::uint64_t seed);

} // namespace optidice
