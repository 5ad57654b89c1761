#include <cmath>

#include "doctest.h"
#include "htsim/quadrature.hpp"
#include "htsim/special.hpp"

using namespace htsim;

TEST_CASE("regularized incomplete gamma against elementary identities") {
    // P(1/2, x) = erf(sqrt(x)); P(1, x) = 1 - exp(-x).
    for (double x : {0.01, 0.1, 0.5, 1.0, 2.5, 7.0, 20.0}) {
        CHECK(gamma_p(0.5, x) == doctest::Approx(std::erf(std::sqrt(x))).epsilon(1e-10));
        CHECK(gamma_p(1.0, x) == doctest::Approx(1.0 - std::exp(-x)).epsilon(1e-10));
    }
    // P(3/2, x) = erf(sqrt x) - 2 sqrt(x/pi) e^{-x}.
    for (double x : {0.2, 1.0, 4.0})
        CHECK(gamma_p(1.5, x) ==
              doctest::Approx(std::erf(std::sqrt(x)) -
                              2.0 * std::sqrt(x / M_PI) * std::exp(-x))
                  .epsilon(1e-10));
}

TEST_CASE("gamma_p_inv inverts gamma_p") {
    for (double a : {0.5, 1.0, 2.5, 15.0})
        for (double p : {1e-6, 0.01, 0.3, 0.5, 0.9, 0.999}) {
            const double x = gamma_p_inv(a, p);
            CHECK(gamma_p(a, x) == doctest::Approx(p).epsilon(1e-8));
        }
}

TEST_CASE("gamma_pdf integrates to the cdf increments") {
    const double a = 1.7;
    const QuadResult q =
        integrate([&](double x) { return gamma_pdf(a, x); }, 0.3, 2.1);
    CHECK(q.converged);
    CHECK(q.value == doctest::Approx(gamma_p(a, 2.1) - gamma_p(a, 0.3)).epsilon(1e-8));
}

TEST_CASE("erf_inv inverts erf") {
    for (double y : {-0.999, -0.7, -0.1, 0.0, 0.25, 0.9, 0.99999})
        CHECK(std::erf(erf_inv(y)) == doctest::Approx(y).epsilon(1e-10));
}

TEST_CASE("adaptive quadrature on finite intervals") {
    CHECK(integrate([](double x) { return x * x; }, 0.0, 1.0).value ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    // A sharply peaked integrand exercising the subdivision logic.
    const QuadResult q =
        integrate([](double x) { return std::exp(-200.0 * (x - 0.37) * (x - 0.37)); },
                  0.0, 1.0);
    CHECK(q.converged);
    CHECK(q.value == doctest::Approx(std::sqrt(M_PI / 200.0)).epsilon(1e-8));
}

TEST_CASE("quadrature over the half line") {
    CHECK(integrate_to_inf([](double x) { return std::exp(-x); }, 0.0).value ==
          doctest::Approx(1.0).epsilon(1e-9));
    CHECK(integrate_to_inf([](double x) { return x * std::exp(-x * x); }, 0.0).value ==
          doctest::Approx(0.5).epsilon(1e-9));
    CHECK(integrate_to_inf([](double x) { return std::exp(-x); }, 2.0).value ==
          doctest::Approx(std::exp(-2.0)).epsilon(1e-9));
}

TEST_CASE("log-weighted unit-interval quadrature") {
    // integral_0^1 log(x) x^alpha dx = -1/(alpha+1)^2.
    for (double alpha : {0.0, 0.5, 2.0, 7.3}) {
        const QuadResult q = integrate_log_weighted_unit([](double) { return 1.0; }, alpha);
        CHECK(q.converged);
        CHECK(q.value ==
              doctest::Approx(-1.0 / ((alpha + 1.0) * (alpha + 1.0))).epsilon(1e-8));
    }
}
