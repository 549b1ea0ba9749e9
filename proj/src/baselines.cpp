#include "optidice/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace optidice {

Policy basic_rl(const Dataset& dataset, const TabularMdp& template_mdp) {
    const TabularMdp mle = mle_mdp(dataset, template_mdp);
    return solve_optimal(mle).second;
}

Policy ramdp(const Dataset& dataset, const TabularMdp& template_mdp, double kappa) {
    if (!(kappa > 0.0)) {
        throw std::invalid_argument("ramdp: kappa must be positive");
    }
    const TabularMdp mle = mle_mdp(dataset, template_mdp);
    Eigen::MatrixXd adjusted = mle.reward();
    for (int s = 0; s < mle.n_states(); ++s) {
        for (int a = 0; a < mle.n_actions(); ++a) {
            const int n = dataset.counts_sa()(s, a);
            if (n > 0) {
                adjusted(s, a) -= kappa / std::sqrt(static_cast<double>(n));
            }
        }
    }
    const TabularMdp penalized(mle.n_states(), mle.n_actions(), mle.transition(),
                               std::move(adjusted), mle.initial_dist(), mle.discount());
    return solve_optimal(penalized).second;
}

Policy spibb(const Dataset& dataset, const TabularMdp& template_mdp, const Policy& pi_b,
             int n_wedge) {
    if (dataset.total_transitions() == 0) {
        throw std::invalid_argument("spibb: empty dataset");
    }
    if (n_wedge < 1) {
        throw std::invalid_argument("spibb: n_wedge must be at least 1");
    }
    const TabularMdp mle = mle_mdp(dataset, template_mdp);
    const int S = mle.n_states();
    const int A = mle.n_actions();
    if (pi_b.n_states() != S || pi_b.n_actions() != A) {
        throw std::invalid_argument("spibb: behavior policy shape mismatch");
    }

    Policy pi = pi_b;
    const int max_sweeps = 1000;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        const ValueSolution values = evaluate_policy(mle, pi);
        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(S, A);
        for (int s = 0; s < S; ++s) {
            double frozen = 0.0;
            int best = -1;
            for (int a = 0; a < A; ++a) {
                if (dataset.counts_sa()(s, a) < n_wedge) {
                    next(s, a) = pi_b.probs(s, a);
                    frozen += pi_b.probs(s, a);
                } else if (best < 0 || values.q(s, a) > values.q(s, best)) {
                    best = a;
                }
            }
            if (best >= 0) {
                next(s, best) += 1.0 - frozen;
            } else {
                // Every action bootstrapped: the whole row stays at π_b.
                next.row(s) /= frozen;
            }
        }
        const bool unchanged = (next - pi.probs).cwiseAbs().maxCoeff() == 0.0;
        pi = Policy(std::move(next));
        if (unchanged) break;
    }
    return pi;
}

} // namespace optidice
