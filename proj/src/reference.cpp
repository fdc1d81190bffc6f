#include "dko/reference.hpp"

#include "dko/measures.hpp"
#include "dko/parallel.hpp"

#include <cmath>
#include <stdexcept>

namespace dko::reference {

ConditionalMoments conditional_moments(const RdsModel& model, std::span<const StateObservable> observables,
                                       std::span<const double> grid, std::size_t steps, std::size_t n_samples,
                                       std::uint64_t seed) {
    if (n_samples == 0) throw std::invalid_argument("reference needs at least one sample per grid point");
    const std::size_t n = observables.size(), g_count = grid.size();
    ConditionalMoments out;
    out.mean.assign(steps + 1, std::vector<std::vector<double>>(n, std::vector<double>(g_count)));
    out.var = out.mean;
    parallel_for(g_count, [&](std::size_t g) {
        const std::vector<double> x0(n_samples, grid[g]);
        const auto ens = generate_ensemble(model, x0, std::max<std::size_t>(steps, 1), derive_seed(seed, 0x52454630, g));
        for (std::size_t l = 0; l <= steps; ++l) {
            const auto mu = EmpiricalMeasure::from_points(ens.column(l));
            for (std::size_t i = 0; i < n; ++i) {
                const auto& h = observables[i];
                const StateFunction f = [&h](std::span<const double> x) { return h(x[0]); };
                out.mean[l][i][g] = expectation(mu, f);
                out.var[l][i][g] = variance_of(mu, f);
            }
        }
    });
    return out;
}

namespace {

// E[exp(-a (Y - c)^2)] for Y ~ N(m, s2).
double gaussian_bump_moment(double m, double s2, double c, double a) {
    const double denom = 1.0 + 2.0 * a * s2;
    return std::exp(-a * (m - c) * (m - c) / denom) / std::sqrt(denom);
}

}  // namespace

double ou_gaussian_mean(double x, double t, double center) {
    const double m = x * std::exp(-t);
    const double s2 = 1.0 - std::exp(-2.0 * t);
    return gaussian_bump_moment(m, s2, center, 0.5);
}

double ou_gaussian_variance(double x, double t, double center) {
    const double m = x * std::exp(-t);
    const double s2 = 1.0 - std::exp(-2.0 * t);
    const double first = gaussian_bump_moment(m, s2, center, 0.5);
    const double second = gaussian_bump_moment(m, s2, center, 1.0);
    return second - first * first;
}

}  // namespace dko::reference
