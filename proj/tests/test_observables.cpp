#include "doctest.h"
#include "dko/measures.hpp"
#include "dko/observables.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace dko;
constexpr double kPi = std::numbers::pi;

TEST_CASE("indicator bank") {
    CHECK_THROWS_AS(indicator_bank(0), std::invalid_argument);
    const auto bank = indicator_bank(4);
    const auto v = bank.evaluate(dirac(kPi / 2 + 0.01));
    CHECK(v == Eigen::Vector4d(0, 1, 0, 0));
    // Half-open bins: a boundary belongs to the bin it opens.
    CHECK(bank.evaluate(dirac(kPi / 2)) == Eigen::Vector4d(0, 1, 0, 0));
    CHECK(bank.evaluate(dirac(2 * kPi)) == Eigen::Vector4d(1, 0, 0, 0));
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto mu = EmpiricalMeasure::from_points(testutil::uniforms(37, s, -10.0, 10.0));
        CHECK(bank.evaluate(mu).sum() == doctest::Approx(1.0).epsilon(1e-14));
    }
    const auto fine = indicator_bank(100);
    const auto u = fine.evaluate(EmpiricalMeasure::from_points(testutil::uniforms(100000, 3, 0.0, 2 * kPi)));
    CHECK((u.array() - 0.01).abs().maxCoeff() < 0.001);
}

TEST_CASE("gaussian bank") {
    const auto c = equispaced(-2.0, 2.0, 9);
    CHECK(c == std::vector<double>{-2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5, 2});
    const auto bank = gaussian_bank(c);
    REQUIRE(bank.size() == 9);
    for (std::size_t i = 0; i < 9; ++i) {
        CHECK(bank.evaluate(dirac(c[i]))[i] == 1.0);
        CHECK(bank.evaluate(dirac(c[i] + 2.0))[i] == doctest::Approx(0.13534).epsilon(1e-4));
    }
    std::vector<double> rev(c.rbegin(), c.rend());
    const auto b2 = gaussian_bank(rev);
    const auto mu = EmpiricalMeasure::from_points(testutil::normals(40, 2));
    const auto v1 = bank.evaluate(mu), v2 = b2.evaluate(mu);
    for (int i = 0; i < 9; ++i) CHECK(v1[i] == v2[8 - i]);
}

TEST_CASE("pq bank layout") {
    const auto c = equispaced(-2.0, 2.0, 9);
    const auto bank = pq_bank(c);
    CHECK(bank.size() == 90);
    CHECK(bank.labels()[0] == "p(1,1)");
    CHECK(bank.labels()[1] == "p(1,2)");
    CHECK(bank.labels()[44] == "p(9,9)");
    CHECK(bank.labels()[45] == "q(1,1)");
    for (std::size_t i = 0; i < 9; ++i)
        for (std::size_t j = i; j < 9; ++j) {
            const auto k = pair_index(i, j, 9);
            CHECK(bank.labels()[k] == "p(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
        }
    const auto x = dirac(0.3);
    const auto v = bank.evaluate(x);
    const auto lin = gaussian_bank(c).evaluate(x);
    for (std::size_t i = 0; i < 9; ++i) {
        const auto k = pair_index(i, i, 9);
        CHECK(v[k] == doctest::Approx(lin[i] * lin[i]));
        CHECK(v[k] - v[45 + k] == doctest::Approx(0.0).scale(1.0));
    }
}

TEST_CASE("pq products are covariances") {
    const auto c = equispaced(-2.0, 2.0, 9);
    const auto bank = pq_bank(c);
    const auto lin = gaussian_bank(c);
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto mu = EmpiricalMeasure::from_points(testutil::normals(60, s, 1.5));
        const auto v = bank.evaluate(mu);
        const auto h = lin.evaluate(mu);
        for (std::size_t i = 0; i < 9; ++i) {
            CHECK(v[45 + pair_index(i, i, 9)] >= 0.0);
            CHECK(v[pair_index(i, i, 9)] - v[45 + pair_index(i, i, 9)] >= -1e-15);
            for (std::size_t j = i; j < 9; ++j) CHECK(v[45 + pair_index(i, j, 9)] == doctest::Approx(h[i] * h[j]).epsilon(1e-14));
        }
    }
}

TEST_CASE("variance coefficients") {
    const auto c = equispaced(-2.0, 2.0, 9);
    const auto bank = pq_bank(c);
    CHECK_THROWS_AS(variance_coeff(0, 9), std::invalid_argument);
    CHECK_THROWS_AS(variance_coeff(10, 9), std::invalid_argument);
    const auto w = variance_coeff(3, 9);
    CHECK(w.size() == 90);
    CHECK(w.sum() == 0.0);
    CHECK(w[pair_index(2, 2, 9)] == 1.0);
    CHECK(w[45 + pair_index(2, 2, 9)] == -1.0);
    for (double x : {-1.0, 0.0, 2.5}) CHECK(std::fabs(w.dot(bank.evaluate(dirac(x)))) < 1e-15);
    const auto sym = EmpiricalMeasure::from_points(std::vector<double>{-1.0, 1.0});
    CHECK(std::fabs(variance_coeff(5, 9).dot(bank.evaluate(sym))) < 1e-15);
    for (std::uint64_t s = 0; s < 25; ++s) {
        const auto mu = EmpiricalMeasure::from_points(testutil::normals(30, 100 + s, 1.2));
        const auto v = bank.evaluate(mu);
        for (std::size_t i = 1; i <= 9; ++i) {
            const auto h = StateObservable::gaussian(c[i - 1]);
            const double direct = variance_of(mu, [&](auto x) { return h(x[0]); });
            CHECK(std::fabs(variance_coeff(i, 9).dot(v) - direct) <= 1e-12);
        }
    }
}

TEST_CASE("linear lifts are affine on mixtures") {
    const auto bank = gaussian_bank(equispaced(-2.0, 2.0, 9));
    const auto a = EmpiricalMeasure::from_points(testutil::normals(17, 1));
    const auto b = EmpiricalMeasure::from_points(testutil::normals(29, 2, 2.0));
    for (double alpha : {0.0, 0.1, 0.5, 0.93, 1.0}) {
        const auto mix = bank.evaluate(EmpiricalMeasure::mixture(a, b, alpha));
        const Eigen::VectorXd lin = alpha * bank.evaluate(a) + (1 - alpha) * bank.evaluate(b);
        CHECK((mix - lin).cwiseAbs().maxCoeff() <= 1e-12);
    }
}

TEST_CASE("linear lift on a dirac is the state function") {
    const auto banks = {indicator_bank(7), gaussian_bank(equispaced(-1, 1, 3)), monomial_bank(3),
                        linear_bank({StateObservable::custom("cos2"), StateObservable::custom("sin1")})};
    for (const auto& bank : banks)
        for (double x : {-1.3, 0.0, 0.7, 4.0}) CHECK(bank.evaluate(dirac(x)) == bank.evaluate_state(x));
    CHECK(monomial_bank(2).evaluate(dirac(3.0)) == Eigen::Vector3d(1, 3, 9));
    CHECK(StateObservable::custom("cos3")(0.5) == std::cos(1.5));
    CHECK_THROWS_AS(StateObservable::custom("tan1"), std::invalid_argument);
    CHECK_THROWS_AS(pq_bank(equispaced(-1, 1, 3)).evaluate_state(0.0), std::invalid_argument);
}

TEST_CASE("evaluate_bank") {
    const auto bank = gaussian_bank(equispaced(-2.0, 2.0, 9));
    const auto none = evaluate_bank(bank, {});
    CHECK(none.rows() == 9);
    CHECK(none.cols() == 0);
    std::vector<EmpiricalMeasure> ms;
    for (std::uint64_t s = 0; s < 12; ++s) ms.push_back(EmpiricalMeasure::from_points(testutil::normals(15, s)));
    const auto a = evaluate_bank(bank, ms), b = evaluate_bank(bank, ms);
    CHECK(a == b);
    for (std::size_t j = 0; j < ms.size(); ++j) CHECK(a.col(static_cast<Eigen::Index>(j)) == bank.evaluate(ms[j]));
}

TEST_CASE("bank descriptor round trip") {
    for (const auto& bank : {indicator_bank(5), pq_bank(equispaced(-1, 1, 3)), monomial_bank(2),
                             linear_bank({StateObservable::custom("sin4")})}) {
        const auto back = ObservableBank::from_descriptor(nlohmann::json::parse(bank.descriptor().dump()));
        CHECK(back.labels() == bank.labels());
        const auto mu = EmpiricalMeasure::from_points(testutil::normals(9, 4));
        CHECK(back.evaluate(mu) == bank.evaluate(mu));
    }
}
