#pragma once

#include "optidice/mdp.hpp"

namespace optidice {

/// Hyperparameters of the reference offline-RL baselines.
struct BaselineConfig {
    double kappa = 0.003; // RaMDP reward adjustment
    int n_wedge = 5;      // SPIBB bootstrapping threshold
};

/// Model-based RL: greedy optimal policy of the MLE MDP.
Policy basic_rl(const Dataset& dataset, const TabularMdp& template_mdp);

/// Reward-adjusted MDP: greedy optimal policy of the MLE MDP with rewards
/// penalized by κ/√n(s,a) on seen pairs; unseen pairs keep their
/// zero-reward self-loops.
Policy ramdp(const Dataset& dataset, const TabularMdp& template_mdp, double kappa);

/// Π_b-SPIBB: policy iteration on the MLE MDP where the probability mass of
/// bootstrapped pairs {(s,a) : n(s,a) < n_wedge} is frozen at the behavior
/// policy and the remaining mass goes greedily to the best non-bootstrapped
/// action.
Policy spibb(const Dataset& dataset, const TabularMdp& template_mdp, const Policy& pi_b,
             int n_wedge);

} // namespace optidice
