#include "optidice/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace optidice {

namespace {

constexpr double kArmijoSlope = 1e-4;
constexpr int kMaxBacktracks = 60;

void check_config(const SolverConfig& config) {
    if (!(config.alpha > 0.0)) throw std::invalid_argument("solver: alpha must be positive");
    if (!(config.tol > 0.0)) throw std::invalid_argument("solver: tol must be positive");
}

void check_shapes(const TabularMdp& mdp, const StationaryDistribution& d_ref) {
    if (d_ref.d.rows() != mdp.n_states() || d_ref.d.cols() != mdp.n_actions()) {
        throw std::invalid_argument("solver: d_ref must be S x A");
    }
    if (d_ref.d.minCoeff() < 0.0) {
        throw std::invalid_argument("solver: d_ref must be nonnegative");
    }
}

/// Flattened quantities shared by the dual computations. The variable vector
/// z is ν, optionally augmented by λ as its last entry; correspondingly
/// K̃ = [γT − B | −1] and the linear head p̃ = ((1−γ)p0 ; 1), so that every
/// objective below reads p̃ᵀz + Σ d·[−αf(w) + w·ẽ] with ẽ = r + K̃z.
struct DualWorkspace {
    Eigen::MatrixXd k;      // (S·A) x (S [+1])
    Eigen::VectorXd head;   // S [+1]
    Eigen::VectorXd r;      // S·A
    Eigen::VectorXd d;      // S·A, reference weights
    int n_states = 0;
    int n_actions = 0;
    bool augmented = false;

    int dim() const { return static_cast<int>(head.size()); }
};

DualWorkspace make_workspace(const TabularMdp& mdp, const StationaryDistribution& d_ref,
                             bool with_lambda) {
    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    const Eigen::Index rows = static_cast<Eigen::Index>(S) * A;
    DualWorkspace ws;
    ws.n_states = S;
    ws.n_actions = A;
    ws.augmented = with_lambda;
    ws.r = mdp.reward_flat();
    ws.d = d_ref.flat();
    ws.k = Eigen::MatrixXd::Zero(rows, S + (with_lambda ? 1 : 0));
    ws.k.leftCols(S) = mdp.discount() * mdp.transition();
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            ws.k(mdp.sa_index(s, a), s) -= 1.0;
        }
    }
    if (with_lambda) {
        ws.k.col(S).setConstant(-1.0);
    }
    ws.head = Eigen::VectorXd::Zero(S + (with_lambda ? 1 : 0));
    ws.head.head(S) = (1.0 - mdp.discount()) * mdp.initial_dist();
    if (with_lambda) {
        ws.head(S) = 1.0;
    }
    return ws;
}

double objective_at(const DualWorkspace& ws, const FDivergence& div, double alpha,
                    const Eigen::VectorXd& z) {
    const Eigen::VectorXd e = ws.r + ws.k * z;
    double acc = ws.head.dot(z);
    for (Eigen::Index i = 0; i < e.size(); ++i) {
        if (ws.d(i) == 0.0) continue;
        const double w = div.correction_from_advantage(e(i), alpha);
        acc += ws.d(i) * (w * e(i) - alpha * div.f(w));
    }
    return acc;
}

Eigen::VectorXd gradient_at(const DualWorkspace& ws, const FDivergence& div, double alpha,
                            const Eigen::VectorXd& z) {
    const Eigen::VectorXd e = ws.r + ws.k * z;
    Eigen::VectorXd dw(e.size());
    for (Eigen::Index i = 0; i < e.size(); ++i) {
        dw(i) = ws.d(i) == 0.0 ? 0.0 : ws.d(i) * div.correction_from_advantage(e(i), alpha);
    }
    return ws.head + ws.k.transpose() * dw;
}

/// Gradient and generalized Hessian of the χ² dual on the workspace
/// variables, following the masked tabular formulas:
///   m = 1(e/α + 1 ≥ 0),  w = (e/α + 1)⊙m,  J = (1/α)(γT − B)⊙m,
///   g = head − αJᵀD(w−1) + JᵀDe + (γT − B)ᵀDw,
///   H = −αJᵀDJ + JᵀD(γT − B) + (γT − B)ᵀDJ.
GradHess chi2_grad_hess(const DualWorkspace& ws, double alpha, const Eigen::VectorXd& z) {
    const Eigen::VectorXd e = ws.r + ws.k * z;
    const Eigen::Index n = e.size();
    Eigen::VectorXd w(n);
    Eigen::VectorXd mask(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double cand = e(i) / alpha + 1.0;
        mask(i) = cand >= 0.0 ? 1.0 : 0.0;
        w(i) = mask(i) * cand;
    }
    Eigen::MatrixXd j = (1.0 / alpha) * (ws.k.array().colwise() * mask.array()).matrix();
    Eigen::MatrixXd dj = j.array().colwise() * ws.d.array();       // D·J
    Eigen::MatrixXd dk = ws.k.array().colwise() * ws.d.array();    // D·K

    GradHess out;
    out.grad = ws.head - alpha * (dj.transpose() * (w - Eigen::VectorXd::Ones(n))) +
               dj.transpose() * e + dk.transpose() * w;
    out.hess = -alpha * (j.transpose() * dj) + j.transpose() * dk + ws.k.transpose() * dj;
    return out;
}

struct LineSearchResult {
    double step = 0.0;
    double objective = 0.0;
    bool ok = false;
};

LineSearchResult armijo(const DualWorkspace& ws, const FDivergence& div, double alpha,
                        const Eigen::VectorXd& z, const Eigen::VectorXd& direction,
                        double obj, double slope) {
    LineSearchResult res;
    double t = 1.0;
    for (int i = 0; i < kMaxBacktracks; ++i) {
        const double candidate = objective_at(ws, div, alpha, z + t * direction);
        // Strict decrease required: accepting ties would loop on null steps
        // once the improvement falls below the objective's own rounding.
        if (std::isfinite(candidate) && candidate <= obj + kArmijoSlope * t * slope &&
            candidate < obj) {
            res.step = t;
            res.objective = candidate;
            res.ok = true;
            return res;
        }
        t *= 0.5;
    }
    return res;
}

SolveResult finalize(const DualWorkspace& ws, const TabularMdp& mdp,
                     const StationaryDistribution& d_ref, const FDivergence& div,
                     double alpha, const Eigen::VectorXd& z, int iterations,
                     double grad_norm, bool converged, bool normalization) {
    const int S = ws.n_states;
    const int A = ws.n_actions;
    SolveResult result;
    result.duals.nu = z.head(S);
    result.duals.lambda = normalization ? z(S) : 0.0;
    const Eigen::VectorXd e = ws.r + ws.k * z;
    result.w.resize(S, A);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            result.w(s, a) = div.correction_from_advantage(e(mdp.sa_index(s, a)), alpha);
        }
    }
    result.policy = extract_policy(result.w, d_ref);
    result.objective = objective_at(ws, div, alpha, z);
    result.iterations = iterations;
    result.grad_norm = grad_norm;
    result.converged = converged;
    if (!std::isfinite(result.objective)) {
        throw std::runtime_error("solver: non-finite objective");
    }
    return result;
}

void check_gamma(const TabularMdp& mdp, const SolverConfig& config, const char* op) {
    if (mdp.discount() >= 1.0 && !config.normalization) {
        throw std::invalid_argument(std::string(op) +
                                    ": discount = 1 requires the normalization constraint");
    }
}

} // namespace

Eigen::MatrixXd advantage(const TabularMdp& mdp, const Eigen::VectorXd& nu) {
    if (nu.size() != mdp.n_states()) {
        throw std::invalid_argument("advantage: nu must have one entry per state");
    }
    const int S = mdp.n_states();
    const int A = mdp.n_actions();
    const Eigen::VectorXd t_nu = mdp.transition() * nu;
    Eigen::MatrixXd e(S, A);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            e(s, a) = mdp.reward()(s, a) + mdp.discount() * t_nu(mdp.sa_index(s, a)) - nu(s);
        }
    }
    return e;
}

double dual_objective(const TabularMdp& mdp, const StationaryDistribution& d_ref,
                      const DualVariables& duals, const SolverConfig& config) {
    check_config(config);
    check_shapes(mdp, d_ref);
    DualWorkspace ws = make_workspace(mdp, d_ref, config.normalization);
    Eigen::VectorXd z(ws.dim());
    z.head(mdp.n_states()) = duals.nu;
    if (config.normalization) z(mdp.n_states()) = duals.lambda;
    return objective_at(ws, config.divergence, config.alpha, z);
}

GradHess grad_hess_chi2(const TabularMdp& mdp, const StationaryDistribution& d_ref,
                        const Eigen::VectorXd& nu, const SolverConfig& config) {
    check_config(config);
    check_shapes(mdp, d_ref);
    if (config.divergence.kind() != DivergenceKind::Chi2) {
        throw std::invalid_argument("grad_hess_chi2: unsupported divergence " +
                                    config.divergence.name());
    }
    DualWorkspace ws = make_workspace(mdp, d_ref, false);
    return chi2_grad_hess(ws, config.alpha, nu);
}

SolveResult solve_newton_chi2(const TabularMdp& mdp, const StationaryDistribution& d_ref,
                              const SolverConfig& config) {
    check_config(config);
    check_shapes(mdp, d_ref);
    check_gamma(mdp, config, "solve_newton_chi2");
    if (config.divergence.kind() != DivergenceKind::Chi2) {
        throw std::invalid_argument("solve_newton_chi2: unsupported divergence " +
                                    config.divergence.name());
    }
    const FDivergence div(DivergenceKind::Chi2);
    DualWorkspace ws = make_workspace(mdp, d_ref, config.normalization);

    // ν (and λ) start at zero for reproducibility.
    Eigen::VectorXd z = Eigen::VectorXd::Zero(ws.dim());
    double obj = objective_at(ws, div, config.alpha, z);
    if (!std::isfinite(obj)) throw std::runtime_error("solve_newton_chi2: non-finite objective");

    int iterations = 0;
    double grad_norm = 0.0;
    bool converged = false;
    for (int it = 0; it < config.max_iter; ++it) {
        GradHess gh = chi2_grad_hess(ws, config.alpha, z);
        grad_norm = gh.grad.size() > 0 ? gh.grad.cwiseAbs().maxCoeff() : 0.0;
        if (grad_norm <= config.tol) {
            converged = true;
            break;
        }
        iterations = it + 1;

        Eigen::MatrixXd damped = gh.hess;
        damped.diagonal().array() += config.damping;
        Eigen::VectorXd direction = damped.ldlt().solve(-gh.grad);
        double slope = gh.grad.dot(direction);
        if (!direction.allFinite() || slope >= 0.0) {
            // The generalized Hessian can be singular when the mask zeroes
            // rows; fall back to a plain gradient step.
            direction = -gh.grad;
            slope = gh.grad.dot(direction);
        }
        LineSearchResult ls = armijo(ws, div, config.alpha, z, direction, obj, slope);
        if (!ls.ok) {
            // Near the optimum the objective improvement drops below its own
            // rounding and Armijo cannot see progress; accept the full step
            // on gradient-norm decrease instead (local quadratic phase).
            const Eigen::VectorXd candidate = z + direction;
            const double candidate_norm =
                gradient_at(ws, div, config.alpha, candidate).cwiseAbs().maxCoeff();
            if (std::isfinite(candidate_norm) && candidate_norm <= 0.9 * grad_norm) {
                z = candidate;
                obj = objective_at(ws, div, config.alpha, z);
                continue;
            }
            direction = -gh.grad;
            slope = gh.grad.dot(direction);
            ls = armijo(ws, div, config.alpha, z, direction, obj, slope);
            if (!ls.ok) break; // stalled; report non-convergence below
        }
        z += ls.step * direction;
        obj = ls.objective;
    }
    if (!converged) {
        grad_norm = gradient_at(ws, div, config.alpha, z).cwiseAbs().maxCoeff();
        converged = grad_norm <= config.tol;
    }
    return finalize(ws, mdp, d_ref, div, config.alpha, z, iterations, grad_norm, converged,
                    config.normalization);
}

SolveResult solve_first_order(const TabularMdp& mdp, const StationaryDistribution& d_ref,
                              const SolverConfig& config) {
    check_config(config);
    check_shapes(mdp, d_ref);
    check_gamma(mdp, config, "solve_first_order");
    const FDivergence& div = config.divergence;
    DualWorkspace ws = make_workspace(mdp, d_ref, config.normalization);

    Eigen::VectorXd z = Eigen::VectorXd::Zero(ws.dim());
    double obj = objective_at(ws, div, config.alpha, z);
    if (!std::isfinite(obj)) throw std::runtime_error("solve_first_order: non-finite objective");
    Eigen::VectorXd grad = gradient_at(ws, div, config.alpha, z);

    int iterations = 0;
    double grad_norm = grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0;
    bool converged = grad_norm <= config.tol;
    Eigen::VectorXd z_prev = z;
    Eigen::VectorXd grad_prev = grad;
    bool have_prev = false;
    // Non-monotone (GLL) reference window keeps Barzilai–Borwein steps from
    // being throttled by the line search.
    constexpr int kWindow = 10;
    double recent[kWindow];
    std::fill(recent, recent + kWindow, obj);

    for (int it = 0; it < config.max_iter && !converged; ++it) {
        iterations = it + 1;
        // Barzilai–Borwein initial step, safeguarded; plain 1/‖g‖ on the
        // first iteration.
        double t0 = 1.0 / std::max(grad.norm(), 1.0);
        if (have_prev) {
            const Eigen::VectorXd dz = z - z_prev;
            const Eigen::VectorXd dg = grad - grad_prev;
            const double denom = dz.dot(dg);
            if (denom > 0.0) {
                t0 = std::clamp(dz.squaredNorm() / denom, 1e-12, 1e12);
            }
        }
        const Eigen::VectorXd direction = -grad;
        const double slope = grad.dot(direction);
        const double reference = *std::max_element(recent, recent + kWindow);
        double t = t0;
        bool accepted = false;
        double candidate_obj = obj;
        for (int bt = 0; bt < kMaxBacktracks; ++bt) {
            candidate_obj = objective_at(ws, div, config.alpha, z + t * direction);
            if (std::isfinite(candidate_obj) &&
                candidate_obj <= reference + kArmijoSlope * t * slope &&
                candidate_obj < reference) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            // Objective progress is below rounding; fall back to accepting
            // the step on gradient-norm decrease.
            const Eigen::VectorXd candidate = z + t0 * direction;
            const double candidate_norm =
                gradient_at(ws, div, config.alpha, candidate).cwiseAbs().maxCoeff();
            if (!std::isfinite(candidate_norm) || candidate_norm > 0.9 * grad_norm) break;
            t = t0;
            candidate_obj = objective_at(ws, div, config.alpha, candidate);
        }
        z_prev = z;
        grad_prev = grad;
        have_prev = true;
        z += t * direction;
        obj = candidate_obj;
        recent[it % kWindow] = obj;
        grad = gradient_at(ws, div, config.alpha, z);
        grad_norm = grad.cwiseAbs().maxCoeff();
        converged = grad_norm <= config.tol;
    }
    return finalize(ws, mdp, d_ref, div, config.alpha, z, iterations, grad_norm, converged,
                    config.normalization);
}

Policy extract_policy(const Eigen::MatrixXd& w, const StationaryDistribution& d_ref) {
    if (w.rows() != d_ref.d.rows() || w.cols() != d_ref.d.cols()) {
        throw std::invalid_argument("extract_policy: w and d_ref shapes differ");
    }
    if (w.minCoeff() < 0.0) {
        throw std::invalid_argument("extract_policy: w must be nonnegative");
    }
    const int S = static_cast<int>(w.rows());
    const int A = static_cast<int>(w.cols());
    Eigen::MatrixXd probs(S, A);
    for (int s = 0; s < S; ++s) {
        Eigen::RowVectorXd weights = w.row(s).cwiseProduct(d_ref.d.row(s));
        const double total = weights.sum();
        if (total > 0.0) {
            probs.row(s) = weights / total;
        } else {
            probs.row(s).setConstant(1.0 / A);
        }
    }
    return Policy(std::move(probs));
}

JensenBound jensen_upper_bound(const TabularMdp& mdp, const StationaryDistribution& d_ref,
                               const DualVariables& duals, const SolverConfig& config) {
    check_config(config);
    check_shapes(mdp, d_ref);
    if (mdp.discount() >= 1.0) {
        throw std::invalid_argument("jensen_upper_bound: requires discount < 1");
    }
    const FDivergence& div = config.divergence;
    const double alpha = config.alpha;
    const Eigen::VectorXd& nu = duals.nu;
    const double gamma = mdp.discount();
    const double head = (1.0 - gamma) * mdp.initial_dist().dot(nu);

    JensenBound bound;
    bound.exact = head;
    bound.upper = head;
    for (int s = 0; s < mdp.n_states(); ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
            const double weight = d_ref.d(s, a);
            if (weight == 0.0) continue;
            const auto row = mdp.transition().row(mdp.sa_index(s, a));
            double e = mdp.reward()(s, a) - nu(s) + gamma * row.dot(nu);
            bound.exact += weight * alpha * div.h(e / alpha);
            for (int sn = 0; sn < mdp.n_states(); ++sn) {
                if (row(sn) == 0.0) continue;
                const double e_hat = mdp.reward()(s, a) + gamma * nu(sn) - nu(s);
                bound.upper += weight * row(sn) * alpha * div.h(e_hat / alpha);
            }
        }
    }
    return bound;
}

double primal_value(const TabularMdp& mdp, const StationaryDistribution& d_ref,
                    const Eigen::MatrixXd& w, const SolverConfig& config) {
    check_config(config);
    check_shapes(mdp, d_ref);
    double value = 0.0;
    for (int s = 0; s < mdp.n_states(); ++s) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
            const double weight = d_ref.d(s, a);
            if (weight == 0.0) continue;
            value += weight * w(s, a) * mdp.reward()(s, a);
            value -= config.alpha * weight * config.divergence.f(w(s, a));
        }
    }
    return value;
}

} // namespace optidice
