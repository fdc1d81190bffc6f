#pragma once

#include "dko/measures.hpp"
#include "dko/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dko {

// Reduces an angle into [0, 2*pi).
double reduce_angle(double x) noexcept;

// One rotation step with explicit noise: (x + nu + omega + eps) mod 2*pi.
double rotate(double x, double nu, double omega, double eps) noexcept;

// Drift and diffusion coefficients are looked up by name so a model can be
// written to and read from a config file.
struct NamedCoefficient {
    std::string name;
    double (*fn)(double);
};

// Known names: drift {zero, neg_identity, neg_sin}; diffusion {zero, sqrt2, bump}.
const NamedCoefficient& drift_coefficient(const std::string& name);
const NamedCoefficient& diffusion_coefficient(const std::string& name);
std::vector<std::string> drift_names();
std::vector<std::string> diffusion_names();

// Random dynamical system with a one-step stochastic evolution kernel.
class RdsModel {
public:
    enum class Kind { rotation, sde };

    // x <- (x + nu + U[-half_width, half_width] + N(0, sigma^2)) mod 2*pi per snapshot step.
    static RdsModel rotation(double nu, double half_width = 0.5, double sigma = 0.0, double snapshot_dt = 1.0);
    // Euler-Maruyama integration of dX = a(X) dt + b(X) dW with `dt_internal`
    // substeps per snapshot (default snapshot_dt / 10).
    static RdsModel sde(const std::string& drift, const std::string& diffusion, double snapshot_dt,
                        std::optional<double> dt_internal = std::nullopt);
    // a(x) = -x, b(x) = sqrt(2)
    static RdsModel ou(double snapshot_dt = 0.1, std::optional<double> dt_internal = std::nullopt);
    // a(x) = -sin(x), b(x) = exp(-(x-1)^2 / 2)
    static RdsModel sinexp(double snapshot_dt = 0.1, std::optional<double> dt_internal = std::nullopt);

    Kind kind() const noexcept { return kind_; }
    bool on_circle() const noexcept { return kind_ == Kind::rotation; }
    double nu() const noexcept { return nu_; }
    double half_width() const noexcept { return half_width_; }
    double sigma() const noexcept { return sigma_; }
    const std::string& drift_name() const noexcept { return drift_.name; }
    const std::string& diffusion_name() const noexcept { return diffusion_.name; }
    double snapshot_dt() const noexcept { return snapshot_dt_; }
    double dt_internal() const noexcept { return dt_internal_; }
    std::size_t substeps() const noexcept { return substeps_; }

    // Same model with a different additive noise level (rotation only).
    RdsModel with_sigma(double sigma) const;

    // Number of snapshot steps in duration t; rejects negative t or t that is
    // not a multiple of snapshot_dt within 1e-12.
    std::size_t steps_for(double t) const;

    // Advances x by one snapshot step using draws from `noise`. `step_index`
    // only labels errors.
    double step(double x, NoiseStream& noise, std::size_t step_index = 0) const;

private:
    RdsModel() = default;

    Kind kind_ = Kind::rotation;
    double nu_ = 0.0, half_width_ = 0.0, sigma_ = 0.0;
    NamedCoefficient drift_{}, diffusion_{};
    double snapshot_dt_ = 1.0, dt_internal_ = 1.0;
    std::size_t substeps_ = 1;
};

// K trajectories of m+1 snapshots each, row-major (member, time).
struct TrajectoryEnsemble {
    std::size_t members = 0;
    std::size_t columns = 0;
    std::vector<double> states;
    double snapshot_dt = 0.0;
    std::uint64_t seed = 0;

    double at(std::size_t member, std::size_t time) const { return states[member * columns + time]; }
    std::vector<double> column(std::size_t time) const;
    std::vector<double> trajectory(std::size_t member) const;
};

// Single trajectory x0, x1, ..., xm with noise stream (seed, 0, j) for step j.
TrajectoryEnsemble generate_trajectory(const RdsModel& model, double x0, std::size_t m, std::uint64_t seed);
// One trajectory per initial state; member k uses noise streams (seed, k, j).
TrajectoryEnsemble generate_ensemble(const RdsModel& model, std::span<const double> x0, std::size_t m,
                                     std::uint64_t seed);

struct MeasurePair {
    EmpiricalMeasure initial;
    EmpiricalMeasure evolved;
};

// (pi_j, T_dt pi_j) with independent noise per pair.
std::vector<MeasurePair> generate_pairs(const RdsModel& model, std::span<const EmpiricalMeasure> initial,
                                        std::uint64_t seed);
// pi_0 and m successive one-step evolutions; consecutive entries form the pairs.
std::vector<EmpiricalMeasure> generate_chain(const RdsModel& model, const EmpiricalMeasure& start, std::size_t m,
                                             std::uint64_t seed);

}  // namespace dko
