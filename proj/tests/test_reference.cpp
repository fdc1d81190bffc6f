#include "doctest.h"
#include "dko/observables.hpp"
#include "dko/rds.hpp"
#include "dko/reference.hpp"

#include <cmath>
#include <numbers>
#include <vector>

using namespace dko;

namespace {

// E[f(Y)], Y ~ N(m, s^2), by composite Simpson on +-12 s.
template <class F>
double gauss_integral(F f, double m, double s) {
    const int n = 4000;
    const double a = m - 12 * s, h = 24 * s / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double y = a + i * h;
        const double w = (i == 0 || i == n) ? 1 : (i % 2 ? 4 : 2);
        acc += w * f(y) * std::exp(-(y - m) * (y - m) / (2 * s * s));
    }
    return acc * h / 3 / (s * std::sqrt(2 * std::numbers::pi));
}

}  // namespace

TEST_CASE("closed-form OU gaussian moments against quadrature") {
    for (double x : {-2.0, 0.0, 0.7}) {
        for (double t : {0.1, 1.0, 3.0}) {
            const double m = x * std::exp(-t), s = std::sqrt(1 - std::exp(-2 * t));
            for (double c : {-1.5, 0.0, 2.0}) {
                const auto h = [c](double y) { return std::exp(-(y - c) * (y - c) / 2); };
                const double e1 = gauss_integral(h, m, s);
                const double e2 = gauss_integral([&](double y) { return h(y) * h(y); }, m, s);
                CHECK(reference::ou_gaussian_mean(x, t, c) == doctest::Approx(e1).epsilon(1e-10));
                CHECK(reference::ou_gaussian_variance(x, t, c) == doctest::Approx(e2 - e1 * e1).epsilon(1e-8));
            }
        }
    }
}

TEST_CASE("monte carlo reference within its CLT band") {
    const auto model = RdsModel::ou(0.1, 0.001);
    const std::vector<StateObservable> obs = {StateObservable::gaussian(0.0), StateObservable::gaussian(1.0)};
    const std::vector<double> grid = {-1.0, 0.5};
    const std::size_t n = 20000;
    const auto r = reference::conditional_moments(model, obs, grid, 10, n, 3);
    REQUIRE(r.mean.size() == 11);
    for (std::size_t i = 0; i < obs.size(); ++i)
        for (std::size_t g = 0; g < grid.size(); ++g) {
            CHECK(r.mean[0][i][g] == doctest::Approx(obs[i](grid[g])).epsilon(1e-12));
            CHECK(std::fabs(r.var[0][i][g]) <= 1e-12);
            const double exact = reference::ou_gaussian_mean(grid[g], 1.0, obs[i].center);
            const double sd = std::sqrt(reference::ou_gaussian_variance(grid[g], 1.0, obs[i].center));
            CHECK(std::fabs(r.mean[10][i][g] - exact) < 4 * sd / std::sqrt(double(n)) + 2e-3);
            CHECK(r.var[10][i][g] == doctest::Approx(sd * sd).epsilon(0.08));
        }
}
