#include "doctest.h"
#include "dko/errors.hpp"
#include "dko/measures.hpp"
#include "dko/rds.hpp"
#include "dko/stats.hpp"
#include "test_util.hpp"

#include <cmath>
#include <numbers>

using namespace dko;
constexpr double kPi = std::numbers::pi;

TEST_CASE("rotation arithmetic") {
    CHECK(rotate(6.0, 0.5, 0.3, 0.0) == doctest::Approx(6.8 - 2 * kPi).epsilon(1e-14));
    CHECK(rotate(6.0, 0.5, 0.3, 0.0) == doctest::Approx(0.51681).epsilon(1e-5));
    CHECK(reduce_angle(-0.5) == doctest::Approx(2 * kPi - 0.5));
    CHECK(reduce_angle(2 * kPi) == 0.0);
    for (double x : {-100.0, -1e-300, 0.0, 3.0, 1e6}) {
        const double r = reduce_angle(x);
        CHECK(r >= 0.0);
        CHECK(r < 2 * kPi);
    }
}

TEST_CASE("deterministic rotation is exact") {
    const auto m = RdsModel::rotation(kPi / 2, 0.0, 0.0);
    const auto t = generate_trajectory(m, 0.0, 4, 1);
    REQUIRE(t.columns == 5);
    const double expect[] = {0.0, kPi / 2, kPi, 3 * kPi / 2, 0.0};
    for (int j = 0; j < 5; ++j) CHECK(t.at(0, j) == doctest::Approx(expect[j]).epsilon(1e-14));
    NoiseStream s(1, 0, 0);
    CHECK(m.step(1.0, s) == rotate(1.0, kPi / 2, 0.0, 0.0));
}

TEST_CASE("rotation noise stays within the arc") {
    const auto m = RdsModel::rotation(0.5, 0.5, 0.0);
    for (std::uint32_t k = 0; k < 2000; ++k) {
        NoiseStream s(5, k, 0);
        const double y = m.step(1.0, s);
        CHECK(y >= 1.0);
        CHECK(y < 2.0);
    }
}

TEST_CASE("model validation") {
    CHECK_THROWS_AS(RdsModel::rotation(0.5, -0.1), std::invalid_argument);
    CHECK_THROWS_AS(RdsModel::rotation(0.5, 0.5, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(RdsModel::sde("neg_identity", "sqrt2", 0.1, 0.03), std::invalid_argument);
    CHECK_THROWS_AS(RdsModel::sde("nope", "sqrt2", 0.1), std::invalid_argument);
    CHECK_THROWS_AS(RdsModel::sde("neg_identity", "sqrt2", 0.1, -0.01), std::invalid_argument);
    const auto ou = RdsModel::ou(0.1);
    CHECK(ou.substeps() == 10);
    CHECK(ou.dt_internal() == doctest::Approx(0.01));
    CHECK(ou.steps_for(1.0) == 10);
    CHECK_THROWS_AS(ou.steps_for(0.05), std::invalid_argument);
    CHECK_THROWS_AS(ou.with_sigma(0.5), std::invalid_argument);
}

TEST_CASE("frozen sde leaves the state alone") {
    const auto m = RdsModel::sde("zero", "zero", 0.5, 0.01);
    NoiseStream s(1, 0, 0);
    CHECK(m.step(1.25, s) == 1.25);
    const auto t = generate_trajectory(m, -3.0, 7, 2);
    for (std::size_t j = 0; j < t.columns; ++j) CHECK(t.at(0, j) == -3.0);
}

TEST_CASE("ou ensemble mean") {
    const auto m = RdsModel::ou(0.1, 0.01);
    std::vector<double> x0(100000, 2.0);
    const auto e = generate_ensemble(m, x0, 1, 4);
    CHECK(std::fabs(stats::mean(e.column(1)) - 2 * std::exp(-0.1)) < 0.02);
    CHECK(2 * std::exp(-0.1) == doctest::Approx(1.8097).epsilon(1e-4));
}

TEST_CASE("euler-maruyama weak error shrinks with the step") {
    const std::size_t K = 40000;
    std::vector<double> x0(K, 2.0);
    const double exact = 2 * std::exp(-1.0);
    const double band = 3 * std::sqrt((1 - std::exp(-2.0)) / K);
    double prev = 1e9;
    for (double dt : {0.05, 0.025, 0.0125}) {
        const auto e = generate_ensemble(RdsModel::ou(0.1, dt), x0, 10, 8);
        const double err = std::fabs(stats::mean(e.column(10)) - exact);
        CHECK(err < 1.2 * dt + band);
        CHECK(err <= prev + band);
        prev = err;
    }
}

TEST_CASE("integration errors carry the step") {
    const auto m = RdsModel::sde("neg_identity", "sqrt2", 0.1, 0.01);
    NoiseStream s(1, 0, 0);
    try {
        m.step(std::numeric_limits<double>::infinity(), s, 17);
        FAIL("expected IntegrationError");
    } catch (const IntegrationError& e) {
        CHECK(std::string(e.what()).find("17") != std::string::npos);
    }
}

TEST_CASE("trajectory shapes and determinism") {
    const auto m = RdsModel::rotation(0.5);
    CHECK_THROWS_AS(generate_trajectory(m, 0.0, 0, 1), std::invalid_argument);
    const auto t1 = generate_trajectory(m, 0.0, 1, 1);
    CHECK(t1.columns == 2);
    const auto a = generate_trajectory(m, 0.3, 50, 77), b = generate_trajectory(m, 0.3, 50, 77);
    CHECK(a.states == b.states);
    const auto c = generate_trajectory(m, 0.3, 50, 78);
    CHECK(c.states.size() == a.states.size());
    CHECK(c.states != a.states);
    for (double x : a.states) {
        CHECK(x >= 0.0);
        CHECK(x < 2 * kPi);
    }
}

TEST_CASE("ensembles do not depend on the thread count") {
    const auto m = RdsModel::sinexp(0.1);
    const auto x0 = testutil::normals(64, 3);
    const auto a = generate_ensemble(m, x0, 5, 9);
    const auto b = generate_ensemble(m, x0, 5, 9);
    CHECK(a.states == b.states);
    const auto single = generate_ensemble(m, std::vector<double>{x0[0]}, 5, 9);
    for (std::size_t j = 0; j <= 5; ++j) CHECK(single.at(0, j) == a.at(0, j));
}

TEST_CASE("measure pairs") {
    const auto id = RdsModel::rotation(0.0, 0.0, 0.0);
    const std::vector<EmpiricalMeasure> init = {EmpiricalMeasure::from_points(testutil::uniforms(30, 1, 0.0, 6.0)),
                                                dirac(1.0)};
    const auto pairs = generate_pairs(id, init, 3);
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].evolved == pairs[0].initial);
    const auto rot = RdsModel::rotation(0.5, 0.0, 0.0);
    const auto p = generate_pairs(rot, std::vector<EmpiricalMeasure>{dirac(1.0)}, 3);
    CHECK(p[0].evolved == dirac(1.5));
    CHECK_THROWS_AS(generate_pairs(rot, std::vector<EmpiricalMeasure>{}, 3), std::invalid_argument);
    const auto noisy = RdsModel::rotation(0.5);
    const auto two = generate_pairs(noisy, std::vector<EmpiricalMeasure>{init[0], init[0]}, 3);
    CHECK_FALSE(two[0].evolved == two[1].evolved);
}

TEST_CASE("chains feed each output back in") {
    const auto rot = RdsModel::rotation(0.5, 0.0, 0.0);
    const auto chain = generate_chain(rot, dirac(0.0), 3, 1);
    REQUIRE(chain.size() == 4);
    for (int j = 0; j < 4; ++j) CHECK(chain[j].coords()[0] == doctest::Approx(0.5 * j));
}
