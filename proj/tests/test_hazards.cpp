#include <doctest.h>

#include <array>
#include <cmath>
#include <stdexcept>

#include "crcop/hazards.hpp"
#include "crcop/numerics.hpp"
#include "crcop/rng.hpp"

using namespace crcop;

namespace {

MarginalHazardSpec exponential(double rate, std::vector<double> coeffs) {
    MarginalHazardSpec spec;
    spec.scale = rate;
    spec.coeffs = std::move(coeffs);
    return spec;
}

MarginalHazardSpec weibull(double scale, double shape, std::vector<double> coeffs) {
    MarginalHazardSpec spec;
    spec.baseline = BaselineFamily::weibull;
    spec.scale = scale;
    spec.shape = shape;
    spec.coeffs = std::move(coeffs);
    return spec;
}

} // namespace

TEST_CASE("hazard closed forms") {
    const std::array<double, 1> z0{0.0};
    const std::array<double, 1> z1{1.0};
    const auto exp_spec = exponential(1.0, {1.0});
    CHECK(hazard(exp_spec, 0.7, z0) == doctest::Approx(1.0));
    CHECK(hazard(exp_spec, 3.1, z1) == doctest::Approx(std::exp(1.0)).epsilon(1e-12));
    const auto wei = weibull(1.0, 2.0, {0.0});
    CHECK(hazard(wei, 0.5, z0) == doctest::Approx(1.0)); // shape*scale*(scale t)^(shape-1)
    CHECK_THROWS_AS(hazard(exp_spec, 0.0, z0), std::domain_error);
    CHECK_THROWS_AS(hazard(exp_spec, -1.0, z0), std::domain_error);
}

TEST_CASE("survival and its inverse round-trip") {
    const std::array<double, 1> z0{0.0};
    const auto exp_spec = exponential(1.0, {0.0});
    CHECK(survival(exp_spec, std::log(2.0), z0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(inverse_survival(exp_spec, 0.5, z0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    const std::array<double, 1> zh{0.5};
    const auto shifted = exponential(1.0, {2.0});
    CHECK(cumulative_hazard(shifted, 1.0, zh) == doctest::Approx(std::exp(1.0)).epsilon(1e-12));

    for (const auto& spec : {exponential(0.7, {0.4}), weibull(1.3, 2.2, {-0.3})}) {
        for (double s : {0.05, 0.3, 0.5, 0.9, 0.999}) {
            const std::array<double, 1> z{0.8};
            const double t = inverse_survival(spec, s, z);
            CHECK(survival(spec, t, z) == doctest::Approx(s).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(inverse_survival(exp_spec, 0.0, z0), std::domain_error);
    CHECK_THROWS_AS(inverse_survival(exp_spec, 1.0, z0), std::domain_error);
}

TEST_CASE("cumulative hazard agrees with quadrature of the hazard") {
    Rng rng(42);
    const std::array<double, 1> z{0.3};
    for (int rep = 0; rep < 5; ++rep) {
        MarginalHazardSpec spec;
        if (rep % 2 == 0) {
            spec = exponential(0.5 + rng.uniform(), {rng.normal()});
        } else {
            spec = weibull(0.5 + rng.uniform(), 0.5 + 2.0 * rng.uniform(), {rng.normal()});
        }
        const double t = 0.2 + 2.0 * rng.uniform();
        const double quad =
            integrate([&](double u) { return hazard(spec, u, z); }, 1e-12, t, 1e-12);
        CHECK(cumulative_hazard(spec, t, z) == doctest::Approx(quad).epsilon(1e-8));
    }
}

TEST_CASE("proportional baselines keep a constant cumulative-hazard ratio") {
    const auto base = weibull(1.0, 1.8, {0.5});
    const auto scaled = weibull(1.0 * std::exp(0.4 / 1.8), 1.8, {1.2});
    const double expected = baseline_cumulative_hazard(scaled, 1.0) /
                            baseline_cumulative_hazard(base, 1.0);
    for (double t : {0.05, 0.3, 1.0, 2.5, 7.0}) {
        const double ratio =
            baseline_cumulative_hazard(scaled, t) / baseline_cumulative_hazard(base, t);
        CHECK(ratio == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("spec validation rejects bad parameters") {
    MarginalHazardSpec bad;
    bad.scale = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    MarginalHazardSpec bad_shape = weibull(1.0, 0.0, {});
    CHECK_THROWS_AS(bad_shape.validate(), std::invalid_argument);
    const std::array<double, 2> z2{0.1, 0.2};
    CHECK_THROWS_AS(hazard(exponential(1.0, {1.0}), 1.0, z2), std::invalid_argument);
}
