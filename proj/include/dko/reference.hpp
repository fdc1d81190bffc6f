#pragma once

// Ground-truth generator for prediction experiments. It simulates many
// trajectories from every grid point and is used only to score fitted
// operators, never to fit them.

#include "dko/observables.hpp"
#include "dko/rds.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dko::reference {

// Conditional moments of the base state observables of a bank given X_0 = x.
// mean[l][i][g] = E[h_i(X_{l dt}) | X_0 = grid[g]], var likewise, l = 0..steps.
struct ConditionalMoments {
    std::vector<std::vector<std::vector<double>>> mean;
    std::vector<std::vector<std::vector<double>>> var;
};

ConditionalMoments conditional_moments(const RdsModel& model, std::span<const StateObservable> observables,
                                       std::span<const double> grid, std::size_t steps, std::size_t n_samples,
                                       std::uint64_t seed);

// Exact OU (a = -x, b = sqrt(2)) moments of a unit-width Gaussian bump
// exp(-(y - c)^2 / 2) under X_t ~ N(x e^{-t}, 1 - e^{-2t}).
double ou_gaussian_mean(double x, double t, double center);
double ou_gaussian_variance(double x, double t, double center);

}  // namespace dko::reference
