#include "optidice/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace optidice {

namespace {
constexpr double kExpClamp = 50.0;
}

std::string FDivergence::name() const {
    switch (kind_) {
        case DivergenceKind::Chi2: return "chi2";
        case DivergenceKind::Kl: return "kl";
        case DivergenceKind::SoftChi2: return "soft-chi2";
    }
    return "?";
}

double FDivergence::f(double x) const {
    if (x < 0.0) {
        throw std::domain_error("FDivergence::f: negative argument");
    }
    switch (kind_) {
        case DivergenceKind::Chi2:
            return 0.5 * (x - 1.0) * (x - 1.0);
        case DivergenceKind::Kl:
            return x == 0.0 ? 0.0 : x * std::log(x);
        case DivergenceKind::SoftChi2:
            if (x >= 1.0) return 0.5 * (x - 1.0) * (x - 1.0);
            return x == 0.0 ? 1.0 : x * std::log(x) - x + 1.0;
    }
    return 0.0;
}

double FDivergence::f_prime(double x) const {
    switch (kind_) {
        case DivergenceKind::Chi2:
            return x - 1.0;
        case DivergenceKind::Kl:
            if (x <= 0.0) throw std::domain_error("FDivergence::f_prime: kl needs x > 0");
            return std::log(x) + 1.0;
        case DivergenceKind::SoftChi2:
            if (x >= 1.0) return x - 1.0;
            if (x <= 0.0) throw std::domain_error("FDivergence::f_prime: soft-chi2 needs x > 0");
            return std::log(x);
    }
    return 0.0;
}

double FDivergence::f_prime_inv(double y) const {
    switch (kind_) {
        case DivergenceKind::Chi2:
            return y + 1.0;
        case DivergenceKind::Kl:
            return std::exp(std::min(y - 1.0, kExpClamp));
        case DivergenceKind::SoftChi2:
            return y < 0.0 ? std::exp(y) : y + 1.0;
    }
    return 0.0;
}

double FDivergence::correction_from_advantage(double e, double alpha) const {
    if (!(alpha > 0.0)) {
        throw std::invalid_argument("correction_from_advantage: alpha must be positive");
    }
    return std::max(0.0, f_prime_inv(e / alpha));
}

double FDivergence::h(double x) const {
    const double w = std::max(0.0, f_prime_inv(x));
    return -f(w) + w * x;
}

FDivergence FDivergence::from_name(const std::string& name) {
    if (name == "chi2") return FDivergence(DivergenceKind::Chi2);
    if (name == "kl") return FDivergence(DivergenceKind::Kl);
    if (name == "soft-chi2") return FDivergence(DivergenceKind::SoftChi2);
    throw std::invalid_argument("unknown divergence: " + name);
}

} // namespace optidice
