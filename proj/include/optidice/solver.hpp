#pragma once

#include "optidice/divergence.hpp"
#include "optidice/mdp.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace optidice {

/// Lagrange multipliers of the dual problem: ν(s) for the Bellman flow
/// constraints, λ for the normalization constraint (0 and unused when the
/// constraint is off).
struct DualVariables {
    Eigen::VectorXd nu;
    double lambda = 0.0;
};

struct SolverConfig {
    double alpha = 1.0;
    FDivergence divergence{DivergenceKind::Chi2};
    bool normalization = false;
    double tol = 1e-9;      // on ‖gradient‖∞
    int max_iter = 200;
    double damping = 1e-9;  // Tikhonov term added to the Hessian
    std::uint64_t seed = 0; // retained for optional randomized restarts

    static SolverConfig newton_defaults() { return SolverConfig{}; }
    static SolverConfig first_order_defaults() {
        SolverConfig c;
        c.max_iter = 50000;
        return c;
    }
};

/// Artifact of one solve: duals, corrections w(s,a), extracted policy and
/// convergence diagnostics.
struct SolveResult {
    DualVariables duals;
    Eigen::MatrixXd w;
    Policy policy;
    double objective = 0.0;
    int iterations = 0;
    double grad_norm = 0.0;
    bool converged = false;
};

/// Advantage e_ν(s,a) = R + γ(Tν) − ν(s), evaluated exactly from the MDP's
/// transition tensor. Returns an |S| × |A| matrix.
Eigen::MatrixXd advantage(const TabularMdp& mdp, const Eigen::VectorXd& nu);

/// Dual objective after plugging in the closed-form inner maximizer:
///   (1−γ)p0ᵀν + Σ d_ref·[w*·(e_ν−λ) − α f(w*)] (+ λ when normalization is on)
/// with w* = max(0,(f')⁻¹((e_ν−λ)/α)). λ is taken from `duals` only when
/// config.normalization is set.
double dual_objective(const TabularMdp& mdp, const StationaryDistribution& d_ref,
                      const DualVariables& duals, const SolverConfig& config);

struct GradHess {
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
};

/// Exact gradient and generalized Hessian of the χ² dual objective at ν
/// (normalization off). Rejects any other divergence.
GradHess grad_hess_chi2(const TabularMdp& mdp, const StationaryDistribution& d_ref,
                        const Eigen::VectorXd& nu, const SolverConfig& config);

/// Semi-smooth Newton solve of the χ² dual (damped Newton direction, Armijo
/// backtracking from η=1, gradient-step fallback when the direction is not a
/// descent direction). With config.normalization the scalar λ is optimized
/// jointly, which also covers γ = 1.
SolveResult solve_newton_chi2(const TabularMdp& mdp, const StationaryDistribution& d_ref,
                              const SolverConfig& config);

/// First-order solve (Barzilai–Borwein step with Armijo backtracking) of the
/// dual objective for any of the three divergences; honors the
/// normalization flag. γ = 1 requires normalization.
SolveResult solve_first_order(const TabularMdp& mdp, const StationaryDistribution& d_ref,
                              const SolverConfig& config);

/// Row-normalized policy π(a|s) ∝ w(s,a)·d_ref(s,a); rows with zero total
/// weight fall back to uniform.
Policy extract_policy(const Eigen::MatrixXd& w, const StationaryDistribution& d_ref);

struct JensenBound {
    double exact = 0.0;
    double upper = 0.0;
};

/// Exact dual objective and its per-(s,a,s') Jensen upper bound
///   (1−γ)p0ᵀν + Σ_{s,a} d_ref Σ_{s'} T(s'|s,a)·α·h(ê_ν(s,a,s')/α),
/// with ê_ν(s,a,s') = R(s,a) + γν(s') − ν(s). Uses the γ < 1 form (λ = 0);
/// upper = exact when the MDP is deterministic.
JensenBound jensen_upper_bound(const TabularMdp& mdp, const StationaryDistribution& d_ref,
                               const DualVariables& duals, const SolverConfig& config);

/// Primal value E_{d̂}[R] − α·D_f(d̂‖d_ref) of the corrected occupancy
/// d̂ = d_ref ∘ w. Equals the dual objective at convergence (strong duality).
double primal_value(const TabularMdp& mdp, const StationaryDistribution& d_ref,
                    const Eigen::MatrixXd& w, const SolverConfig& config);

} // namespace optidice
