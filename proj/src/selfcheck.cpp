#include "optidice/selfcheck.hpp"

#include "optidice/divergence.hpp"
#include "optidice/mdp.hpp"
#include "optidice/rng.hpp"
#include "optidice/solver.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

namespace optidice {

namespace {

TabularMdp random_dense_mdp(Rng& rng, int n_states, int n_actions, double gamma) {
    Eigen::MatrixXd transition(static_cast<Eigen::Index>(n_states) * n_actions, n_states);
    for (Eigen::Index row = 0; row < transition.rows(); ++row) {
        double total = 0.0;
        for (int sn = 0; sn < n_states; ++sn) {
            transition(row, sn) = rng.exponential();
            total += transition(row, sn);
        }
        transition.row(row) /= total;
    }
    Eigen::MatrixXd reward(n_states, n_actions);
    for (int s = 0; s < n_states; ++s)
        for (int a = 0; a < n_actions; ++a) reward(s, a) = 2.0 * rng.uniform01() - 1.0;
    Eigen::VectorXd p0(n_states);
    double total = 0.0;
    for (int s = 0; s < n_states; ++s) {
        p0(s) = rng.exponential();
        total += p0(s);
    }
    p0 /= total;
    return TabularMdp(n_states, n_actions, std::move(transition), std::move(reward),
                      std::move(p0), gamma);
}

Policy random_positive_policy(Rng& rng, int n_states, int n_actions) {
    Eigen::MatrixXd probs(n_states, n_actions);
    for (int s = 0; s < n_states; ++s) {
        double total = 0.0;
        for (int a = 0; a < n_actions; ++a) {
            probs(s, a) = 0.1 + rng.exponential();
            total += probs(s, a);
        }
        probs.row(s) /= total;
    }
    return Policy(std::move(probs));
}

/// Random ν kept clear of the χ² mask kinks on the support of d_ref, so
/// finite differences are well-defined.
Eigen::VectorXd sample_kink_safe_nu(Rng& rng, const TabularMdp& mdp,
                                    const StationaryDistribution& d_ref, double alpha,
                                    double margin) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Eigen::VectorXd nu(mdp.n_states());
        for (int s = 0; s < mdp.n_states(); ++s) nu(s) = 4.0 * rng.uniform01() - 2.0;
        const Eigen::MatrixXd e = advantage(mdp, nu);
        double closest = std::numeric_limits<double>::infinity();
        for (int s = 0; s < mdp.n_states(); ++s) {
            for (int a = 0; a < mdp.n_actions(); ++a) {
                if (d_ref.d(s, a) == 0.0) continue;
                closest = std::min(closest, std::abs(e(s, a) / alpha + 1.0));
            }
        }
        if (closest > margin) return nu;
    }
    throw std::runtime_error("selfcheck: could not sample a kink-safe nu");
}

SelfcheckFamily conjugacy_family(std::uint64_t seed) {
    SelfcheckFamily family{"conjugacy", true, 0.0, ""};
    Rng rng(seed);
    const int kinds[] = {0, 1, 2};
    for (int kind : kinds) {
        const FDivergence div(static_cast<DivergenceKind>(kind));
        for (int i = 0; i < 200; ++i) {
            const double ratio = 10.0 * rng.uniform01() - 5.0; // e/α
            const double alpha = std::pow(10.0, 2.0 * rng.uniform01() - 1.0);
            const double e = ratio * alpha;
            const double w_closed = div.correction_from_advantage(e, alpha);
            const double g_closed = w_closed * e - alpha * div.f(w_closed);
            const double g_oracle = conjugate_search_oracle(kind, e, alpha, 200.0);
            const double beaten_by = g_oracle - g_closed;
            family.worst = std::max(family.worst, beaten_by);
            if (beaten_by > 1e-8 || std::abs(beaten_by) > 1e-6) family.passed = false;
        }
    }
    family.detail = "closed form vs grid+golden search";
    return family;
}

SelfcheckFamily gradient_family(std::uint64_t seed, bool flip_sign) {
    SelfcheckFamily family{"gradient", true, 0.0, ""};
    Rng rng(seed);
    SolverConfig config;
    for (int instance = 0; instance < 5; ++instance) {
        const TabularMdp mdp = random_dense_mdp(rng, 8, 3, 0.9);
        const StationaryDistribution d_ref =
            stationary_distribution(mdp, random_positive_policy(rng, 8, 3));
        config.alpha = (instance % 2 == 0) ? 1.0 : 0.01;
        const double h = 1e-5 * std::min(1.0, config.alpha);
        for (int trial = 0; trial < 5; ++trial) {
            const Eigen::VectorXd nu = sample_kink_safe_nu(rng, mdp, d_ref, config.alpha, 1e-3);
            GradHess gh = grad_hess_chi2(mdp, d_ref, nu, config);
            if (flip_sign) gh.grad = -gh.grad;

            Eigen::VectorXd fd_grad(mdp.n_states());
            Eigen::VectorXd fd_hess_diag(mdp.n_states());
            for (int s = 0; s < mdp.n_states(); ++s) {
                Eigen::VectorXd up = nu, dn = nu;
                up(s) += h;
                dn(s) -= h;
                const DualVariables d_up{up, 0.0}, d_dn{dn, 0.0};
                fd_grad(s) = (dual_objective(mdp, d_ref, d_up, config) -
                              dual_objective(mdp, d_ref, d_dn, config)) /
                             (2.0 * h);
                fd_hess_diag(s) = (grad_hess_chi2(mdp, d_ref, up, config).grad(s) -
                                   grad_hess_chi2(mdp, d_ref, dn, config).grad(s)) /
                                  (2.0 * h);
            }
            const double grad_rel = (fd_grad - gh.grad).cwiseAbs().maxCoeff() /
                                    std::max(fd_grad.cwiseAbs().maxCoeff(), 1e-12);
            const double hess_rel =
                (fd_hess_diag - gh.hess.diagonal()).cwiseAbs().maxCoeff() /
                std::max(fd_hess_diag.cwiseAbs().maxCoeff(), 1e-12);
            family.worst = std::max({family.worst, grad_rel, hess_rel});
            if (grad_rel > 1e-6 || hess_rel > 1e-4) family.passed = false;
        }
    }
    family.detail = "analytic gradient/Hessian vs central differences";
    return family;
}

SelfcheckFamily duality_family(std::uint64_t seed) {
    SelfcheckFamily family{"duality-gap", true, 0.0, ""};
    Rng rng(seed);
    for (int instance = 0; instance < 10; ++instance) {
        const TabularMdp mdp = random_dense_mdp(rng, 6 + instance % 5, 3, 0.9);
        const StationaryDistribution d_ref = stationary_distribution(
            mdp, random_positive_policy(rng, mdp.n_states(), mdp.n_actions()));
        SolverConfig config;
        config.alpha = (instance % 2 == 0) ? 1.0 : 0.01;
        const SolveResult result = solve_newton_chi2(mdp, d_ref, config);
        const Eigen::MatrixXd d_hat = d_ref.d.cwiseProduct(result.w);
        const double gap = std::abs(result.objective - primal_value(mdp, d_ref, result.w, config));
        const double flow = flow_residual(mdp, d_hat).cwiseAbs().maxCoeff();
        family.worst = std::max({family.worst, gap, flow});
        if (!result.converged || gap > 1e-6 || flow > 1e-6) family.passed = false;
    }
    family.detail = "dual objective vs primal value and flow feasibility";
    return family;
}

SelfcheckFamily jensen_family(std::uint64_t seed) {
    SelfcheckFamily family{"jensen", true, 0.0, ""};
    Rng rng(seed);
    SolverConfig config;
    for (int instance = 0; instance < 10; ++instance) {
        const bool deterministic = instance % 2 == 0;
        TabularMdp mdp = random_dense_mdp(rng, 6, 3, 0.9);
        if (deterministic) {
            Eigen::MatrixXd transition =
                Eigen::MatrixXd::Zero(mdp.transition().rows(), mdp.transition().cols());
            for (Eigen::Index row = 0; row < transition.rows(); ++row) {
                transition(row, rng.uniform_int(mdp.n_states())) = 1.0;
            }
            mdp = TabularMdp(mdp.n_states(), mdp.n_actions(), std::move(transition),
                             mdp.reward(), mdp.initial_dist(), mdp.discount());
        }
        const StationaryDistribution d_ref = stationary_distribution(
            mdp, random_positive_policy(rng, mdp.n_states(), mdp.n_actions()));
        DualVariables duals;
        duals.nu.resize(mdp.n_states());
        for (int s = 0; s < mdp.n_states(); ++s) duals.nu(s) = 4.0 * rng.uniform01() - 2.0;
        const JensenBound bound = jensen_upper_bound(mdp, d_ref, duals, config);
        const double violation = bound.exact - bound.upper;
        family.worst = std::max(family.worst, deterministic ? std::abs(violation) : violation);
        if (violation > 1e-10) family.passed = false;
        if (deterministic && std::abs(violation) > 1e-10) family.passed = false;
    }
    family.detail = "biased estimate bounds the exact objective";
    return family;
}

} // namespace

double conjugate_search_oracle(int divergence_kind, double e, double alpha, double hi) {
    const FDivergence div(static_cast<DivergenceKind>(divergence_kind));
    const auto objective = [&](double w) { return w * e - alpha * div.f(w); };

    // Coarse grid, then golden-section refinement around the best point.
    const int grid_points = 2000;
    double best_w = 0.0;
    double best_val = objective(0.0);
    for (int i = 1; i <= grid_points; ++i) {
        const double w = hi * i / grid_points;
        const double val = objective(w);
        if (val > best_val) {
            best_val = val;
            best_w = w;
        }
    }
    double lo = std::max(0.0, best_w - hi / grid_points);
    double up = std::min(hi, best_w + hi / grid_points);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = up - inv_phi * (up - lo);
    double x2 = lo + inv_phi * (up - lo);
    double f1 = objective(x1);
    double f2 = objective(x2);
    while (up - lo > 1e-12) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (up - lo);
            f2 = objective(x2);
        } else {
            up = x2;
            x2 = x1;
            f2 = f1;
            x1 = up - inv_phi * (up - lo);
            f1 = objective(x1);
        }
    }
    return std::max(best_val, std::max(f1, f2));
}

bool SelfcheckReport::all_passed() const {
    return std::all_of(families.begin(), families.end(),
                       [](const SelfcheckFamily& f) { return f.passed; });
}

SelfcheckReport run_selfcheck(const SelfcheckOptions& options) {
    SelfcheckReport report;
    report.families.push_back(conjugacy_family(derive_seed(options.seed, {0xA1})));
    report.families.push_back(gradient_family(derive_seed(options.seed, {0xA2}),
                                              options.flip_gradient_sign));
    report.families.push_back(duality_family(derive_seed(options.seed, {0xA3})));
    report.families.push_back(jensen_family(derive_seed(options.seed, {0xA4})));
    return report;
}

void print_selfcheck(const SelfcheckReport& report, std::ostream& out) {
    for (const auto& family : report.families) {
        out << (family.passed ? "[PASS] " : "[FAIL] ") << family.name << " (worst "
            << family.worst << "): " << family.detail << "\n";
    }
}

} // namespace optidice
