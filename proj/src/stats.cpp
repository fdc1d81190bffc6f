#include "dko/stats.hpp"

#include "dko/kernels.hpp"
#include "dko/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dko::stats {

void KahanSum::add(double v) noexcept {
    const double t = sum_ + v;
    if (std::fabs(sum_) >= std::fabs(v))
        carry_ += (sum_ - t) + v;
    else
        carry_ += (v - t) + sum_;
    sum_ = t;
}

double mean(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("mean of an empty sample");
    KahanSum s;
    for (double x : xs) s.add(x);
    return s.value() / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double m = mean(xs);
    KahanSum s;
    for (double x : xs) s.add((x - m) * (x - m));
    return std::sqrt(s.value() / static_cast<double>(xs.size() - 1));
}

double standard_error(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    return sample_std(xs) / std::sqrt(static_cast<double>(xs.size()));
}

double trapezoid(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("trapezoid: grid and values differ in length");
    if (x.size() < 2) throw std::invalid_argument("trapezoid needs at least two grid points");
    KahanSum s;
    for (std::size_t i = 1; i < x.size(); ++i) s.add(0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]));
    return s.value();
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("loglog_slope needs >= 2 paired points");
    std::vector<double> lx(x.size()), ly(y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw std::invalid_argument("loglog_slope needs positive data");
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    const double mx = mean(lx), my = mean(ly);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return sxy / sxx;
}

double energy_distance_direct(std::span<const double> x, std::span<const double> y) {
    if (x.empty() || y.empty()) throw std::invalid_argument("energy distance of an empty sample");
    const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
    return 2.0 * kernels::sum_abs_diff(x, y) / (nx * ny) - kernels::sum_abs_diff(x, x) / (nx * nx) -
           kernels::sum_abs_diff(y, y) / (ny * ny);
}

namespace {

// Full double sums sum_{a,b}|z_a - z_b| within and across two labelled
// groups of an already sorted pooled sample.
struct PairSums {
    double xx = 0.0, yy = 0.0, xy = 0.0;
};

PairSums pair_sums_sorted(std::span<const double> z, const std::vector<unsigned char>& in_x) {
    PairSums s;
    double sum_x = 0.0, sum_y = 0.0;
    double cnt_x = 0.0, cnt_y = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double v = z[i];
        if (in_x[i]) {
            s.xx += cnt_x * v - sum_x;
            s.xy += cnt_y * v - sum_y;
            sum_x += v;
            cnt_x += 1.0;
        } else {
            s.yy += cnt_y * v - sum_y;
            s.xy += cnt_x * v - sum_x;
            sum_y += v;
            cnt_y += 1.0;
        }
    }
    // Ordered pairs count each unordered pair twice.
    s.xx *= 2.0;
    s.yy *= 2.0;
    return s;
}

double energy_from(const PairSums& s, double nx, double ny) {
    return 2.0 * s.xy / (nx * ny) - s.xx / (nx * nx) - s.yy / (ny * ny);
}

}  // namespace

double energy_distance_sorted(std::span<const double> x, std::span<const double> y) {
    if (x.empty() || y.empty()) throw std::invalid_argument("energy distance of an empty sample");
    std::vector<std::pair<double, unsigned char>> pooled;
    pooled.reserve(x.size() + y.size());
    for (double v : x) pooled.emplace_back(v, 1);
    for (double v : y) pooled.emplace_back(v, 0);
    std::sort(pooled.begin(), pooled.end());
    std::vector<double> z(pooled.size());
    std::vector<unsigned char> lab(pooled.size());
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        z[i] = pooled[i].first;
        lab[i] = pooled[i].second;
    }
    return energy_from(pair_sums_sorted(z, lab), static_cast<double>(x.size()), static_cast<double>(y.size()));
}

TwoSampleTest energy_test(std::span<const double> x, std::span<const double> y, std::size_t permutations,
                          std::uint64_t seed) {
    if (x.empty() || y.empty()) throw std::invalid_argument("energy test of an empty sample");
    const std::size_t n = x.size() + y.size();
    std::vector<double> z;
    z.reserve(n);
    z.insert(z.end(), x.begin(), x.end());
    z.insert(z.end(), y.begin(), y.end());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return z[a] < z[b]; });
    std::vector<double> sorted(n);
    std::vector<unsigned char> lab(n);
    for (std::size_t i = 0; i < n; ++i) {
        sorted[i] = z[order[i]];
        lab[i] = order[i] < x.size() ? 1 : 0;
    }
    const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
    TwoSampleTest out;
    out.statistic = energy_from(pair_sums_sorted(sorted, lab), nx, ny);

    // Relabel by Fisher-Yates over the pooled label vector.
    std::size_t exceed = 0;
    NoiseStream noise(seed, 0, 0);
    for (std::size_t p = 0; p < permutations; ++p) {
        for (std::size_t i = n - 1; i > 0; --i) {
            auto j = static_cast<std::size_t>(noise.uniform() * static_cast<double>(i + 1));
            if (j > i) j = i;
            std::swap(lab[i], lab[j]);
        }
        if (energy_from(pair_sums_sorted(sorted, lab), nx, ny) >= out.statistic) ++exceed;
    }
    out.p_value = static_cast<double>(1 + exceed) / static_cast<double>(1 + permutations);
    return out;
}

}  // namespace dko::stats
