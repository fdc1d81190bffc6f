#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dko::stats {

// Compensated (Kahan-Babuska) running sum.
class KahanSum {
public:
    void add(double v) noexcept;
    double value() const noexcept { return sum_ + carry_; }

private:
    double sum_ = 0.0;
    double carry_ = 0.0;
};

double mean(std::span<const double> xs);
// Sample standard deviation (n - 1 denominator); 0 for n < 2.
double sample_std(std::span<const double> xs);
// sample_std / sqrt(n)
double standard_error(std::span<const double> xs);

// Composite trapezoidal rule on a (possibly nonuniform) grid.
double trapezoid(std::span<const double> x, std::span<const double> y);

// Least-squares slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

// Energy distance 2E|X-Y| - E|X-X'| - E|Y-Y'| between two 1-D samples.
// The direct route sums all pairs with the SIMD kernel; the sorted route is
// O(N log N) via prefix sums. They agree up to rounding.
double energy_distance_direct(std::span<const double> x, std::span<const double> y);
double energy_distance_sorted(std::span<const double> x, std::span<const double> y);

struct TwoSampleTest {
    double statistic = 0.0;
    double p_value = 1.0;
};

// Permutation test on the energy distance with `permutations` relabellings.
// p = (1 + #{perm >= observed}) / (1 + permutations).
TwoSampleTest energy_test(std::span<const double> x, std::span<const double> y, std::size_t permutations,
                          std::uint64_t seed);

}  // namespace dko::stats
