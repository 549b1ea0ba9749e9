#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "optidice/divergence.hpp"
#include "optidice/rng.hpp"
#include "optidice/selfcheck.hpp"

#include <cmath>

using namespace optidice;

namespace {
const FDivergence chi2{DivergenceKind::Chi2};
const FDivergence kl{DivergenceKind::Kl};
const FDivergence soft{DivergenceKind::SoftChi2};
const FDivergence kinds[] = {chi2, kl, soft};
} // namespace

TEST_CASE("f values on pinned points") {
    CHECK(chi2.f(1.0) == 0.0);
    CHECK(chi2.f(3.0) == doctest::Approx(2.0).epsilon(1e-15));
    // 0.5·ln 0.5 − 0.5 + 1, cross-checked against a high-precision evaluation.
    CHECK(soft.f(0.5) == doctest::Approx(0.15342640972002736).epsilon(1e-12));
    // Right limits at zero.
    CHECK(kl.f(0.0) == 0.0);
    CHECK(soft.f(0.0) == 1.0);
    CHECK(chi2.f(0.0) == 0.5);
}

TEST_CASE("f rejects negative arguments") {
    for (const auto& div : kinds) {
        CHECK_THROWS_AS(div.f(-0.1), std::domain_error);
    }
}

TEST_CASE("f(1) = 0 for every kind") {
    for (const auto& div : kinds) {
        CHECK(std::abs(div.f(1.0)) <= 1e-15);
    }
}

TEST_CASE("f is strictly convex") {
    Rng rng(101);
    for (const auto& div : kinds) {
        for (int i = 0; i < 200; ++i) {
            const double x = 0.01 + 5.0 * rng.uniform01();
            const double y = x + 0.05 + 5.0 * rng.uniform01();
            const double t = 0.1 + 0.8 * rng.uniform01();
            const double mid = div.f(t * x + (1.0 - t) * y);
            const double chord = t * div.f(x) + (1.0 - t) * div.f(y);
            CHECK(mid < chord - 1e-12);
        }
    }
}

TEST_CASE("inverse derivative round trip") {
    Rng rng(103);
    for (int i = 0; i < 200; ++i) {
        const double x = 0.01 + 8.0 * rng.uniform01();
        CHECK(chi2.f_prime_inv(chi2.f_prime(x)) == doctest::Approx(x).epsilon(1e-9));
        CHECK(kl.f_prime_inv(kl.f_prime(x)) == doctest::Approx(x).epsilon(1e-9));
        CHECK(soft.f_prime_inv(soft.f_prime(x)) == doctest::Approx(x).epsilon(1e-9));
    }
    CHECK(chi2.f_prime_inv(chi2.f_prime(0.0)) == doctest::Approx(0.0));
}

TEST_CASE("inverse derivative is strictly increasing") {
    Rng rng(107);
    for (const auto& div : kinds) {
        for (int i = 0; i < 200; ++i) {
            const double y1 = 8.0 * rng.uniform01() - 4.0;
            const double y2 = y1 + 0.01 + 2.0 * rng.uniform01();
            CHECK(div.f_prime_inv(y2) > div.f_prime_inv(y1));
        }
    }
}

TEST_CASE("correction_from_advantage pinned points") {
    CHECK(chi2.correction_from_advantage(0.0, 1.0) == 1.0);
    CHECK(chi2.correction_from_advantage(-2.0, 1.0) == 0.0);
    CHECK(soft.correction_from_advantage(-std::log(2.0), 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK_THROWS_AS(chi2.correction_from_advantage(0.0, 0.0), std::invalid_argument);
}

TEST_CASE("correction is monotone in the advantage") {
    Rng rng(109);
    for (const auto& div : kinds) {
        for (int i = 0; i < 100; ++i) {
            const double alpha = std::pow(10.0, 2.0 * rng.uniform01() - 1.0);
            const double e1 = 6.0 * rng.uniform01() - 3.0;
            const double e2 = e1 + 2.0 * rng.uniform01();
            CHECK(div.correction_from_advantage(e2, alpha) >=
                  div.correction_from_advantage(e1, alpha));
        }
    }
}

TEST_CASE("soft-chi2 correction equals ELU(e/alpha) + 1") {
    Rng rng(113);
    for (int i = 0; i < 200; ++i) {
        const double e = 8.0 * rng.uniform01() - 4.0;
        const double alpha = std::pow(10.0, 2.0 * rng.uniform01() - 1.0);
        const double x = e / alpha;
        const double elu = x < 0.0 ? std::exp(x) - 1.0 : x;
        CHECK(soft.correction_from_advantage(e, alpha) == doctest::Approx(elu + 1.0).epsilon(1e-12));
    }
}

TEST_CASE("h pinned points for chi2") {
    CHECK(chi2.h(0.0) == 0.0);
    CHECK(chi2.h(-10.0) == doctest::Approx(-0.5).epsilon(1e-15)); // clipped branch: −f(0)
    // h(2) = −f(3) + 3·2 = 4; oracle: scalar maximization of w·x − f(w).
    CHECK(chi2.h(2.0) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(chi2.h(2.0) == doctest::Approx(conjugate_search_oracle(0, 2.0, 1.0, 100.0)).epsilon(1e-9));
}

TEST_CASE("h midpoint convexity") {
    Rng rng(127);
    for (const auto& div : kinds) {
        for (int i = 0; i < 300; ++i) {
            const double x = 8.0 * rng.uniform01() - 4.0;
            const double y = 8.0 * rng.uniform01() - 4.0;
            CHECK(div.h(0.5 * (x + y)) <= 0.5 * (div.h(x) + div.h(y)) + 1e-12);
        }
    }
}

TEST_CASE("h derivative equals the clipped inverse derivative") {
    Rng rng(131);
    const double step = 1e-6;
    for (const auto& div : kinds) {
        for (int i = 0; i < 200; ++i) {
            double x = 8.0 * rng.uniform01() - 4.0;
            // Keep clear of the chi2 kink at −1.
            if (div.kind() == DivergenceKind::Chi2 && std::abs(x + 1.0) < 0.05) continue;
            const double fd = (div.h(x + step) - div.h(x - step)) / (2.0 * step);
            const double expected = std::max(0.0, div.f_prime_inv(x));
            CHECK(fd == doctest::Approx(expected).epsilon(1e-5));
        }
    }
}

TEST_CASE("soft-chi2 branches are continuous") {
    const double eps = 1e-13;
    CHECK(std::abs(soft.f(1.0 - eps) - soft.f(1.0 + eps)) <= 1e-12);
    CHECK(std::abs(soft.f_prime(1.0 - eps) - soft.f_prime(1.0 + eps)) <= 1e-12);
    CHECK(std::abs(soft.f_prime_inv(-eps) - soft.f_prime_inv(eps)) <= 1e-12);
    CHECK(soft.f(1.0) == 0.0);
    CHECK(soft.f_prime(1.0) == 0.0);
    CHECK(soft.f_prime_inv(0.0) == 1.0);
}

TEST_CASE("kl inverse derivative clamps its exponent") {
    CHECK(std::isfinite(kl.f_prime_inv(1e6)));
    CHECK(kl.f_prime_inv(1e6) == doctest::Approx(std::exp(50.0)));
    // Never clipped to zero: exp is positive.
    CHECK(kl.correction_from_advantage(-100.0, 1.0) > 0.0);
}

TEST_CASE("conjugacy oracle: closed form maximizes the inner objective") {
    Rng rng(137);
    for (int kind = 0; kind < 3; ++kind) {
        const FDivergence div(static_cast<DivergenceKind>(kind));
        for (int i = 0; i < 200; ++i) {
            const double ratio = 10.0 * rng.uniform01() - 5.0;
            const double alpha = std::pow(10.0, 2.0 * rng.uniform01() - 1.0);
            const double e = ratio * alpha;
            const double w = div.correction_from_advantage(e, alpha);
            const double closed = w * e - alpha * div.f(w);
            const double searched = conjugate_search_oracle(kind, e, alpha, 200.0);
            CHECK(searched - closed <= 1e-8);
            CHECK(std::abs(searched - closed) <= 1e-6);
        }
    }
}

TEST_CASE("divergence names round trip") {
    CHECK(FDivergence::from_name("chi2").kind() == DivergenceKind::Chi2);
    CHECK(FDivergence::from_name("kl").kind() == DivergenceKind::Kl);
    CHECK(FDivergence::from_name("soft-chi2").kind() == DivergenceKind::SoftChi2);
    CHECK(FDivergence::from_name("soft-chi2").name() == "soft-chi2");
    CHECK_THROWS_AS(FDivergence::from_name("hellinger"), std::invalid_argument);
}
