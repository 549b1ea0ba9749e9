#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace optidice {

struct SelfcheckOptions {
    std::uint64_t seed = 0;
    /// Test fixture: negates the analytic gradient before comparing against
    /// finite differences, so the gradient family must fail.
    bool flip_gradient_sign = false;
};

struct SelfcheckFamily {
    std::string name;
    bool passed = false;
    double worst = 0.0; // worst observed error of the family
    std::string detail;
};

struct SelfcheckReport {
    std::vector<SelfcheckFamily> families;
    bool all_passed() const;
};

/// Runs the embedded property suites: the conjugacy oracle for the
/// closed-form correction, gradient/Hessian finite-difference checks, the
/// strong-duality gap with Bellman-flow feasibility, and the Jensen upper
/// bound.
SelfcheckReport run_selfcheck(const SelfcheckOptions& options);

/// Prints one pass/fail line per family.
void print_selfcheck(const SelfcheckReport& report, std::ostream& out);

/// Scalar oracle used by the conjugacy family: maximizes w·e − α·f(w) over
/// w ∈ [0, hi] by grid search refined with golden-section. Independent of
/// the closed-form correction it validates.
double conjugate_search_oracle(int divergence_kind, double e, double alpha, double hi);

} // namespace optidice
