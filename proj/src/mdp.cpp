#include "optidice/mdp.hpp"

#include "optidice/rng.hpp"

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

namespace optidice {

namespace {

constexpr double kStochasticTol = 1e-12;

void require(bool cond, const std::string& msg) {
    if (!cond) {
        throw std::invalid_argument(msg);
    }
}

void require_discounted(const TabularMdp& mdp, const char* op) {
    if (mdp.discount() >= 1.0) {
        throw std::invalid_argument(std::string(op) + ": requires discount < 1");
    }
}

/// P_π(s,s') = Σ_a π(a|s) T(s'|s,a) and r_π(s) = Σ_a π(a|s) R(s,a).
std::pair<Eigen::MatrixXd, Eigen::VectorXd> policy_dynamics(const TabularMdp& mdp,
                                                            const Policy& pi) {
    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    require(pi.n_states() == S && pi.n_actions() == A, "policy shape mismatch");
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(S, S);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(S);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            const double w = pi.probs(s, a);
            if (w == 0.0) continue;
            p.row(s) += w * mdp.transition().row(mdp.sa_index(s, a));
            r(s) += w * mdp.reward()(s, a);
        }
    }
    return {std::move(p), std::move(r)};
}

} // namespace

TabularMdp::TabularMdp(int n_states, int n_actions, Eigen::MatrixXd transition,
                       Eigen::MatrixXd reward, Eigen::VectorXd initial_dist,
                       double discount)
    : n_states_(n_states),
      n_actions_(n_actions),
      transition_(std::move(transition)),
      reward_(std::move(reward)),
      initial_dist_(std::move(initial_dist)),
      discount_(discount) {
    require(n_states_ > 0 && n_actions_ > 0, "TabularMdp: empty state or action space");
    require(discount_ > 0.0 && discount_ <= 1.0, "TabularMdp: discount must be in (0, 1]");
    require(transition_.rows() == static_cast<Eigen::Index>(n_states_) * n_actions_ &&
                transition_.cols() == n_states_,
            "TabularMdp: transition must be (S*A) x S");
    require(reward_.rows() == n_states_ && reward_.cols() == n_actions_,
            "TabularMdp: reward must be S x A");
    require(initial_dist_.size() == n_states_, "TabularMdp: p0 must have S entries");

    for (Eigen::Index i = 0; i < transition_.rows(); ++i) {
        require(transition_.row(i).minCoeff() >= 0.0, "TabularMdp: negative transition probability");
        require(std::abs(transition_.row(i).sum() - 1.0) <= kStochasticTol,
                "TabularMdp: transition row does not sum to 1");
    }
    require(initial_dist_.minCoeff() >= 0.0, "TabularMdp: negative initial probability");
    require(std::abs(initial_dist_.sum() - 1.0) <= kStochasticTol,
            "TabularMdp: initial distribution does not sum to 1");
    require(reward_.allFinite(), "TabularMdp: rewards must be finite");
}

Eigen::VectorXd TabularMdp::reward_flat() const {
    Eigen::VectorXd r(static_cast<Eigen::Index>(n_states_) * n_actions_);
    for (int s = 0; s < n_states_; ++s) {
        for (int a = 0; a < n_actions_; ++a) {
            r(sa_index(s, a)) = reward_(s, a);
        }
    }
    return r;
}

Policy::Policy(Eigen::MatrixXd p) : probs(std::move(p)) {
    for (Eigen::Index s = 0; s < probs.rows(); ++s) {
        require(probs.row(s).minCoeff() >= 0.0, "Policy: negative probability");
        require(std::abs(probs.row(s).sum() - 1.0) <= kStochasticTol,
                "Policy: row does not sum to 1");
    }
}

Policy uniform_policy(int n_states, int n_actions) {
    return Policy(Eigen::MatrixXd::Constant(n_states, n_actions, 1.0 / n_actions));
}

Policy greedy_policy(const Eigen::MatrixXd& q) {
    Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(q.rows(), q.cols());
    for (Eigen::Index s = 0; s < q.rows(); ++s) {
        Eigen::Index best = 0;
        for (Eigen::Index a = 1; a < q.cols(); ++a) {
            if (q(s, a) > q(s, best)) best = a;
        }
        probs(s, best) = 1.0;
    }
    return Policy(std::move(probs));
}

Eigen::VectorXd StationaryDistribution::flat() const {
    Eigen::VectorXd out(d.size());
    const int A = static_cast<int>(d.cols());
    for (int s = 0; s < d.rows(); ++s) {
        for (int a = 0; a < A; ++a) {
            out(s * A + a) = d(s, a);
        }
    }
    return out;
}

Dataset::Dataset(std::vector<Trajectory> trajectories, int n_states, int n_actions)
    : trajectories_(std::move(trajectories)), n_states_(n_states), n_actions_(n_actions) {
    require(n_states_ > 0 && n_actions_ > 0, "Dataset: empty state or action space");
    counts_sa_ = Eigen::MatrixXi::Zero(n_states_, n_actions_);
    counts_sas_ = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(n_states_) * n_actions_, n_states_);
    for (const auto& traj : trajectories_) {
        for (const auto& t : traj) {
            require(t.s >= 0 && t.s < n_states_ && t.s_next >= 0 && t.s_next < n_states_,
                    "Dataset: state index out of range");
            require(t.a >= 0 && t.a < n_actions_, "Dataset: action index out of range");
            counts_sa_(t.s, t.a) += 1;
            counts_sas_(static_cast<Eigen::Index>(t.s) * n_actions_ + t.a, t.s_next) += 1;
            ++total_;
        }
    }
}

std::pair<ValueSolution, Policy> solve_optimal(const TabularMdp& mdp, double tol) {
    require_discounted(mdp, "solve_optimal");
    require(tol > 0.0, "solve_optimal: tol must be positive");
    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    const double gamma = mdp.discount();
    const Eigen::VectorXd r = mdp.reward_flat();

    Eigen::VectorXd v = Eigen::VectorXd::Zero(S);
    Eigen::VectorXd q_flat(static_cast<Eigen::Index>(S) * A);
    const long max_sweeps = 10'000'000;
    for (long sweep = 0; sweep < max_sweeps; ++sweep) {
        q_flat = r + gamma * (mdp.transition() * v);
        Eigen::VectorXd v_new(S);
        for (int s = 0; s < S; ++s) {
            v_new(s) = q_flat.segment(static_cast<Eigen::Index>(s) * A, A).maxCoeff();
        }
        // Bellman residual of q: one more application of the operator.
        const double residual =
            (q_flat - (r + gamma * (mdp.transition() * v_new))).cwiseAbs().maxCoeff();
        v = std::move(v_new);
        if (residual <= tol) {
            Eigen::MatrixXd q(S, A);
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) q(s, a) = q_flat(mdp.sa_index(s, a));
            Policy pi = greedy_policy(q);
            return {ValueSolution{std::move(v), std::move(q)}, std::move(pi)};
        }
    }
    throw std::runtime_error("solve_optimal: value iteration did not converge");
}

ValueSolution evaluate_policy(const TabularMdp& mdp, const Policy& pi, double tol) {
    require_discounted(mdp, "evaluate_policy");
    require(tol > 0.0, "evaluate_policy: tol must be positive");
    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    const double gamma = mdp.discount();
    auto [p, r] = policy_dynamics(mdp, pi);

    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S) - gamma * p;
    Eigen::VectorXd v = system.partialPivLu().solve(r);
    const double residual = (v - (r + gamma * (p * v))).cwiseAbs().maxCoeff();
    if (!(residual <= tol)) {
        throw std::runtime_error("evaluate_policy: linear solve residual " +
                                 std::to_string(residual) + " exceeds tol");
    }
    Eigen::VectorXd q_flat = mdp.reward_flat() + gamma * (mdp.transition() * v);
    Eigen::MatrixXd q(S, A);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) q(s, a) = q_flat(mdp.sa_index(s, a));
    return ValueSolution{std::move(v), std::move(q)};
}

StationaryDistribution stationary_distribution(const TabularMdp& mdp, const Policy& pi) {
    require_discounted(mdp, "stationary_distribution");
    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    const double gamma = mdp.discount();
    auto [p, r] = policy_dynamics(mdp, pi);
    (void)r;

    Eigen::MatrixXd system = Eigen::MatrixXd::Identity(S, S) - gamma * p.transpose();
    Eigen::VectorXd mu = system.partialPivLu().solve((1.0 - gamma) * mdp.initial_dist());
    // μ is nonnegative up to roundoff; clip the dust so the invariant holds.
    for (int s = 0; s < S; ++s) {
        if (mu(s) < 0.0 && mu(s) > -1e-12) mu(s) = 0.0;
    }
    Eigen::MatrixXd d(S, A);
    for (int s = 0; s < S; ++s) {
        d.row(s) = mu(s) * pi.probs.row(s);
    }
    return StationaryDistribution{std::move(d)};
}

Eigen::VectorXd flow_residual(const TabularMdp& mdp, const Eigen::MatrixXd& d) {
    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    require(d.rows() == S && d.cols() == A, "flow_residual: d must be S x A");
    Eigen::VectorXd d_flat(static_cast<Eigen::Index>(S) * A);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) d_flat(mdp.sa_index(s, a)) = d(s, a);
    Eigen::VectorXd inflow = mdp.transition().transpose() * d_flat;     // (T_* d)(s)
    Eigen::VectorXd outflow = d.rowwise().sum();                        // (B_* d)(s)
    return (1.0 - mdp.discount()) * mdp.initial_dist() + mdp.discount() * inflow - outflow;
}

double expected_reward(const TabularMdp& mdp, const Eigen::MatrixXd& d) {
    require(d.rows() == mdp.n_states() && d.cols() == mdp.n_actions(),
            "expected_reward: d must be S x A");
    return (d.array() * mdp.reward().array()).sum();
}

TabularMdp mle_mdp(const Dataset& dataset, const TabularMdp& template_mdp) {
    require(dataset.total_transitions() > 0, "mle_mdp: empty dataset");
    const int S = template_mdp.n_states();
    const int A = template_mdp.n_actions();
    require(dataset.n_states() == S && dataset.n_actions() == A,
            "mle_mdp: dataset/template shape mismatch");

    Eigen::MatrixXd transition = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(S) * A, S);
    Eigen::MatrixXd reward = Eigen::MatrixXd::Zero(S, A);
    Eigen::MatrixXd reward_sum = Eigen::MatrixXd::Zero(S, A);
    for (const auto& traj : dataset.trajectories()) {
        for (const auto& t : traj) {
            reward_sum(t.s, t.a) += t.r;
        }
    }
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            const int row = s * A + a;
            const int n = dataset.counts_sa()(s, a);
            if (n > 0) {
                transition.row(row) =
                    dataset.counts_sas().row(row).cast<double>() / static_cast<double>(n);
                reward(s, a) = reward_sum(s, a) / n;
            } else {
                // Unseen pair: zero-reward self-loop.
                transition(row, s) = 1.0;
            }
        }
    }
    return TabularMdp(S, A, std::move(transition), std::move(reward),
                      template_mdp.initial_dist(), template_mdp.discount());
}

StationaryDistribution empirical_distribution(const Dataset& dataset) {
    require(dataset.total_transitions() > 0, "empirical_distribution: empty dataset");
    Eigen::MatrixXd d =
        dataset.counts_sa().cast<double>() / static_cast<double>(dataset.total_transitions());
    return StationaryDistribution{std::move(d)};
}

Policy empirical_policy(const Dataset& dataset) {
    const int S = dataset.n_states();
    const int A = dataset.n_actions();
    Eigen::MatrixXd probs(S, A);
    for (int s = 0; s < S; ++s) {
        const double n = dataset.counts_sa().row(s).sum();
        if (n > 0) {
            probs.row(s) = dataset.counts_sa().row(s).cast<double>() / n;
        } else {
            probs.row(s).setConstant(1.0 / A);
        }
    }
    return Policy(std::move(probs));
}

Dataset sample_trajectories(const TabularMdp& mdp, const Policy& pi, int n_traj,
                            int max_steps, const std::set<int>& terminal_states,
                            std::uint64_t seed) {
    require(n_traj >= 0, "sample_trajectories: n_traj must be nonnegative");
    require(max_steps >= 1, "sample_trajectories: max_steps must be at least 1");
    require(pi.n_states() == mdp.n_states() && pi.n_actions() == mdp.n_actions(),
            "sample_trajectories: policy shape mismatch");
    Rng rng(seed);
    const int A = mdp.n_actions();

    std::vector<Trajectory> trajectories;
    trajectories.reserve(n_traj);
    const Eigen::VectorXd p0 = mdp.initial_dist();
    for (int i = 0; i < n_traj; ++i) {
        Trajectory traj;
        int s = rng.categorical(std::span<const double>(p0.data(), p0.size()));
        for (int step = 0; step < max_steps; ++step) {
            if (terminal_states.count(s)) break;
            const Eigen::VectorXd pi_row = pi.probs.row(s).transpose();
            const int a = rng.categorical(std::span<const double>(pi_row.data(), A));
            const Eigen::VectorXd t_row = mdp.transition().row(mdp.sa_index(s, a)).transpose();
            const int s_next = rng.categorical(std::span<const double>(t_row.data(), t_row.size()));
            const bool terminal = terminal_states.count(s_next) > 0;
            traj.push_back(Transition{s, a, mdp.reward()(s, a), s_next, terminal});
            s = s_next;
        }
        trajectories.push_back(std::move(traj));
    }
    return Dataset(std::move(trajectories), mdp.n_states(), mdp.n_actions());
}

} // namespace optidice
