#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

namespace dko {

class RdsModel;

// A point of the state space. Circle states carry one coordinate in [0, 2*pi).
class State {
public:
    State() = default;
    State(double x) : coords_{x} {}  // NOLINT: scalar states are the common case
    explicit State(std::vector<double> coords) : coords_(std::move(coords)) {}

    std::size_t dim() const noexcept { return coords_.size(); }
    double operator[](std::size_t i) const { return coords_[i]; }
    std::span<const double> coords() const noexcept { return coords_; }

    friend bool operator==(const State&, const State&) = default;

private:
    std::vector<double> coords_;
};

using StateFunction = std::function<double(std::span<const double>)>;
using StateMap = std::function<State(std::span<const double>)>;

// Finite weighted sample set standing for a probability distribution.
// Samples are stored flat, sample-major.
class EmpiricalMeasure {
public:
    // Throws std::invalid_argument unless weights are nonnegative, sum to 1
    // within 1e-12 and match the sample count.
    EmpiricalMeasure(std::size_t dim, std::vector<double> coords, std::vector<double> weights);
    // Uniform weights 1/K.
    EmpiricalMeasure(std::size_t dim, std::vector<double> coords);
    static EmpiricalMeasure from_points(std::span<const double> xs);
    static EmpiricalMeasure from_states(std::span<const State> states);

    std::size_t size() const noexcept { return weights_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    std::span<const double> coords() const noexcept { return coords_; }
    std::span<const double> weights() const noexcept { return weights_; }
    std::span<const double> sample(std::size_t k) const { return {coords_.data() + k * dim_, dim_}; }

    // alpha * a + (1 - alpha) * b, realized by concatenating weighted samples.
    static EmpiricalMeasure mixture(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double alpha);

    friend bool operator==(const EmpiricalMeasure&, const EmpiricalMeasure&) = default;

private:
    std::size_t dim_;
    std::vector<double> coords_;
    std::vector<double> weights_;
};

EmpiricalMeasure dirac(const State& x);

// sum_k w_k f(x_k). Non-finite f values raise EvaluationError naming the sample.
double expectation(const EmpiricalMeasure& mu, const StateFunction& f);
// E[f^2] - E[f]^2, with round-off negatives down to -1e-12 clamped to zero.
double variance_of(const EmpiricalMeasure& mu, const StateFunction& f);
EmpiricalMeasure pushforward(const EmpiricalMeasure& mu, const StateMap& f);

// Monte Carlo transfer operator: every sample is advanced independently,
// with noise for sample k at step s drawn from the stream (seed, k, s).
// `t` must be a nonnegative multiple of the model's snapshot step.
EmpiricalMeasure evolve_measure(const EmpiricalMeasure& mu, const RdsModel& model, double t, std::uint64_t seed);

// Concrete generator of training distributions.
struct MeasureSampler {
    enum class Kind {
        sub_arc_uniform,  // uniform on one of `count` equal arcs of the circle
        gaussian_init,    // N(mean, std^2)
        grid_bins,        // uniform on one of `count` equal bins of [lo, hi)
        random_gaussian,  // N(m, s^2) with m ~ U[mean_lo, mean_hi], s ~ U[std_lo, std_hi]
    };

    Kind kind = Kind::sub_arc_uniform;
    std::size_t count = 1;
    double lo = 0.0, hi = 1.0;
    double mean = 0.0, std = 1.0;
    double mean_lo = 0.0, mean_hi = 0.0, std_lo = 1.0, std_hi = 1.0;
    std::size_t samples_per_measure = 1;
    // Jittered stratification inside the arc/bin instead of i.i.d. draws.
    bool stratified = false;

    static MeasureSampler sub_arc(std::size_t arcs, std::size_t samples, bool stratified = false);
    static MeasureSampler gaussian(double mean, double std, std::size_t samples);
    static MeasureSampler bins(double lo, double hi, std::size_t count, std::size_t samples, bool stratified = false);
    static MeasureSampler random_gaussians(double mean_lo, double mean_hi, double std_lo, double std_hi,
                                           std::size_t samples);

    // The j-th member of an enumerable family (arc/bin j, 0-based). Gaussian
    // kinds ignore j beyond seeding.
    EmpiricalMeasure member(std::size_t j, std::uint64_t seed) const;
    // i.i.d. draw number `index` from the random measure this sampler defines.
    EmpiricalMeasure draw(std::uint64_t seed, std::uint64_t index) const;
};

// CSV with header `weight,x1,...,xd`.
void write_measure_csv(const std::filesystem::path& path, const EmpiricalMeasure& mu);
// Rejects files whose weights miss the sum-to-one invariant by more than 1e-9.
EmpiricalMeasure read_measure_csv(const std::filesystem::path& path);

}  // namespace dko
