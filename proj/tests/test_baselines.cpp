#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "optidice/baselines.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace optidice;

namespace {

Dataset full_coverage_dataset(const TabularMdp& mdp, int repeats) {
    std::vector<Trajectory> trajs;
    for (int rep = 0; rep < repeats; ++rep) {
        for (int s = 0; s < mdp.n_states(); ++s) {
            for (int a = 0; a < mdp.n_actions(); ++a) {
                const Eigen::Index row = mdp.sa_index(s, a);
                int sn = 0;
                for (int c = 0; c < mdp.n_states(); ++c)
                    if (mdp.transition()(row, c) == 1.0) sn = c;
                trajs.push_back({Transition{s, a, mdp.reward()(s, a), sn, false}});
            }
        }
    }
    return Dataset(std::move(trajs), mdp.n_states(), mdp.n_actions());
}

} // namespace

TEST_CASE("basic_rl recovers the optimal policy from full deterministic coverage") {
    Rng rng(501);
    const TabularMdp mdp = test::random_deterministic_mdp(rng, 6, 3, 0.9);
    const Dataset data = full_coverage_dataset(mdp, 1);
    const Policy learned = basic_rl(data, mdp);
    const auto [values, pi_star] = solve_optimal(mdp);
    CHECK((learned.probs - pi_star.probs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("basic_rl never prefers unseen self-loops over positive seen actions") {
    // Only action 0 is ever visited; its rewards are positive everywhere, so
    // the zero-reward self-loops of action 1 can never win the greedy step.
    Rng rng(503);
    Eigen::MatrixXd transition = Eigen::MatrixXd::Zero(8, 4); // 4 states x 2 actions
    for (int s = 0; s < 4; ++s) {
        transition(s * 2, (s + 1) % 4) = 1.0;
        transition(s * 2 + 1, s) = 1.0;
    }
    Eigen::MatrixXd reward(4, 2);
    reward << 0.3, 0.0, 0.5, 0.0, 0.2, 0.0, 0.9, 0.0;
    Eigen::VectorXd p0 = Eigen::VectorXd::Zero(4);
    p0(0) = 1.0;
    const TabularMdp mdp(4, 2, transition, reward, p0, 0.9);

    std::vector<Trajectory> trajs;
    for (int s = 0; s < 4; ++s) {
        trajs.push_back({Transition{s, 0, reward(s, 0), (s + 1) % 4, false}});
    }
    const Policy learned = basic_rl(Dataset(std::move(trajs), 4, 2), mdp);
    for (int s = 0; s < 4; ++s) CHECK(learned.probs(s, 0) == 1.0);
}

TEST_CASE("basic_rl rejects an empty dataset") {
    Rng rng(509);
    const TabularMdp mdp = test::random_mdp(rng, 3, 2, 0.9);
    CHECK_THROWS_AS(basic_rl(Dataset({}, 3, 2), mdp), std::invalid_argument);
    CHECK_THROWS_AS(ramdp(Dataset({}, 3, 2), mdp, 0.003), std::invalid_argument);
    CHECK_THROWS_AS(spibb(Dataset({}, 3, 2), mdp, uniform_policy(3, 2), 5), std::invalid_argument);
}

TEST_CASE("ramdp: penalty arithmetic flips a close call") {
    // One state, two actions. Action 0: mean reward 0.5 from 4 visits, so
    // the adjusted value is 0.5 - 0.003/sqrt(4) = 0.4985. Action 1: reward
    // 0.499 from 10000 visits, adjusted 0.49897. BasicRL prefers action 0,
    // RaMDP prefers action 1.
    std::vector<Trajectory> trajs;
    for (int i = 0; i < 4; ++i) trajs.push_back({Transition{0, 0, 0.5, 0, false}});
    for (int i = 0; i < 10000; ++i) trajs.push_back({Transition{0, 1, 0.499, 0, false}});
    const Dataset data(std::move(trajs), 1, 2);

    Eigen::MatrixXd transition = Eigen::MatrixXd::Ones(2, 1);
    Eigen::MatrixXd reward = Eigen::MatrixXd::Zero(1, 2);
    Eigen::VectorXd p0 = Eigen::VectorXd::Ones(1);
    const TabularMdp tmpl(1, 2, transition, reward, p0, 0.9);

    CHECK(basic_rl(data, tmpl).probs(0, 0) == 1.0);
    CHECK(ramdp(data, tmpl, 0.003).probs(0, 1) == 1.0);
}

TEST_CASE("ramdp with vanishing kappa matches basic_rl elementwise") {
    Rng rng(521);
    for (int i = 0; i < 10; ++i) {
        const TabularMdp mdp = test::random_mdp(rng, 6, 3, 0.9);
        const Policy behavior = test::random_positive_policy(rng, 6, 3);
        const Dataset data = sample_trajectories(mdp, behavior, 30, 40, {}, 600 + i);
        const Policy a = basic_rl(data, mdp);
        const Policy b = ramdp(data, mdp, 1e-300);
        CHECK((a.probs - b.probs).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("ramdp with huge kappa collapses onto the well-visited path") {
    // 5-state chain. Action 0 follows the heavily visited path; action 1 is
    // a detour seen once with slightly better reward.
    const int S = 5, A = 2;
    Eigen::MatrixXd transition = Eigen::MatrixXd::Zero(S * A, S);
    Eigen::MatrixXd reward(S, A);
    for (int s = 0; s < S; ++s) {
        transition(s * A, (s + 1) % S) = 1.0;     // path
        transition(s * A + 1, (s + 2) % S) = 1.0; // detour
        reward(s, 0) = 0.4;
        reward(s, 1) = 0.5;
    }
    Eigen::VectorXd p0 = Eigen::VectorXd::Zero(S);
    p0(0) = 1.0;
    const TabularMdp mdp(S, A, transition, reward, p0, 0.9);

    std::vector<Trajectory> trajs;
    for (int rep = 0; rep < 10; ++rep)
        for (int s = 0; s < S; ++s)
            trajs.push_back({Transition{s, 0, 0.4, (s + 1) % S, false}});
    for (int s = 0; s < S; ++s)
        trajs.push_back({Transition{s, 1, 0.5, (s + 2) % S, false}});
    const Dataset data(std::move(trajs), S, A);

    const double kappa = 1e3;
    const Policy learned = ramdp(data, mdp, kappa);
    for (int s = 0; s < S; ++s) CHECK(learned.probs(s, 0) == 1.0);

    // Oracle: enumerate all deterministic policies on the penalized MLE MDP
    // and confirm none beats the RaMDP output.
    const TabularMdp mle = mle_mdp(data, mdp);
    Eigen::MatrixXd adjusted = mle.reward();
    for (int s = 0; s < S; ++s) {
        adjusted(s, 0) -= kappa / std::sqrt(10.0);
        adjusted(s, 1) -= kappa / std::sqrt(1.0);
    }
    const TabularMdp penalized(S, A, mle.transition(), adjusted, mle.initial_dist(),
                               mle.discount());
    const double learned_value =
        penalized.initial_dist().dot(evaluate_policy(penalized, learned).v);
    for (int mask = 0; mask < (1 << S); ++mask) {
        Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(S, A);
        for (int s = 0; s < S; ++s) probs(s, (mask >> s) & 1) = 1.0;
        const double value =
            penalized.initial_dist().dot(evaluate_policy(penalized, Policy(probs)).v);
        CHECK(learned_value >= value - 1e-9);
    }
}

TEST_CASE("spibb: nothing bootstrapped reduces to basic_rl") {
    Rng rng(523);
    const TabularMdp mdp = test::random_mdp(rng, 5, 2, 0.9);
    const Policy behavior = test::random_positive_policy(rng, 5, 2);
    const Dataset data = sample_trajectories(mdp, behavior, 200, 50, {}, 77);
    REQUIRE(data.counts_sa().minCoeff() >= 1);
    const Policy a = spibb(data, mdp, behavior, 1);
    const Policy b = basic_rl(data, mdp);
    CHECK((a.probs - b.probs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("spibb: everything bootstrapped returns the behavior policy") {
    Rng rng(541);
    const TabularMdp mdp = test::random_mdp(rng, 5, 2, 0.9);
    const Policy behavior = test::random_positive_policy(rng, 5, 2);
    const Dataset data = sample_trajectories(mdp, behavior, 2, 5, {}, 78);
    const int n_wedge = data.counts_sa().maxCoeff() + 1;
    const Policy out = spibb(data, mdp, behavior, n_wedge);
    CHECK((out.probs - behavior.probs).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("spibb improves on the behavior policy on the MLE MDP") {
    Rng rng(547);
    for (int i = 0; i < 100; ++i) {
        const TabularMdp mdp = test::random_mdp(rng, 3 + i % 5, 2, 0.9);
        const Policy behavior =
            test::random_positive_policy(rng, mdp.n_states(), mdp.n_actions());
        const Dataset data = sample_trajectories(mdp, behavior, 8, 20, {}, 1000 + i);
        if (data.total_transitions() == 0) continue;
        const Policy improved = spibb(data, mdp, behavior, 5);
        const TabularMdp mle = mle_mdp(data, mdp);
        const double v_behavior = mle.initial_dist().dot(evaluate_policy(mle, behavior).v);
        const double v_improved = mle.initial_dist().dot(evaluate_policy(mle, improved).v);
        CHECK(v_improved >= v_behavior - 1e-9);
        for (int s = 0; s < mdp.n_states(); ++s)
            CHECK(improved.probs.row(s).sum() == doctest::Approx(1.0));
    }
}

TEST_CASE("spibb freezes bootstrapped mass at the behavior policy") {
    // State 0: action 0 well-visited, action 1 rare. The rare action's mass
    // must equal the behavior policy's mass exactly.
    Rng rng(557);
    const TabularMdp mdp = test::random_mdp(rng, 3, 2, 0.9);
    const Policy behavior = test::random_positive_policy(rng, 3, 2);
    std::vector<Trajectory> trajs;
    for (int rep = 0; rep < 10; ++rep)
        for (int s = 0; s < 3; ++s)
            trajs.push_back({Transition{s, 0, 0.1, (s + 1) % 3, false}});
    trajs.push_back({Transition{0, 1, 0.9, 1, false}});
    const Dataset data(std::move(trajs), 3, 2);

    const Policy out = spibb(data, mdp, behavior, 5);
    for (int s = 0; s < 3; ++s) {
        CHECK(out.probs(s, 1) == doctest::Approx(behavior.probs(s, 1)));
        CHECK(out.probs(s, 0) == doctest::Approx(1.0 - behavior.probs(s, 1)));
    }
}
