#pragma once

#include <string>

namespace optidice {

enum class DivergenceKind { Chi2, Kl, SoftChi2 };

/// Generator family for the f-divergences used by the solvers: f, its
/// derivative, the inverse derivative, and the clipped correction map
/// w(e) = max(0, (f')⁻¹(e/α)).
///
/// Kinds:
///   chi2       f(x) = ½(x−1)²
///   kl         f(x) = x log x
///   soft-chi2  f(x) = x log x − x + 1 on (0,1), ½(x−1)² on [1,∞);
///              its clipped inverse derivative equals ELU(·)+1.
///
/// f(0) is defined by the right limit of each branch so that the clipped
/// branch of h below stays well-defined.
class FDivergence {
  public:
    explicit FDivergence(DivergenceKind kind) : kind_(kind) {}

    DivergenceKind kind() const { return kind_; }
    std::string name() const;

    /// f(x) for x ≥ 0; throws std::domain_error for negative x.
    double f(double x) const;

    /// f'(x) on the interior of the domain.
    double f_prime(double x) const;

    /// (f')⁻¹(y). For kl the exponent is clamped at +50; the clamp lies far
    /// outside the region any converged solve visits.
    double f_prime_inv(double y) const;

    /// Closed-form inner maximizer max(0, (f')⁻¹(e/α)) of w·e − α·f(w) over
    /// w ≥ 0; monotone non-decreasing in e.
    double correction_from_advantage(double e, double alpha) const;

    /// h(x) = −f(max(0,(f')⁻¹(x))) + max(0,(f')⁻¹(x))·x; convex, with
    /// h'(x) = max(0,(f')⁻¹(x)) wherever differentiable.
    double h(double x) const;

    /// Parses "chi2" | "kl" | "soft-chi2".
    static FDivergence from_name(const std::string& name);

  private:
    DivergenceKind kind_;
};

} // namespace optidice
