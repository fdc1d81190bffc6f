#include "dko/rds.hpp"

#include "dko/errors.hpp"
#include "dko/parallel.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dko {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::uint64_t kPairsTag = 0x50414952;  // "PAIR"
constexpr std::uint64_t kChainTag = 0x43484149;  // "CHAI"

double zero(double) { return 0.0; }
double neg_identity(double x) { return -x; }
double neg_sin(double x) { return -std::sin(x); }
double sqrt2(double) { return std::numbers::sqrt2; }
double bump(double x) { return std::exp(-0.5 * (x - 1.0) * (x - 1.0)); }

const std::array<NamedCoefficient, 3> kDrifts{{{"zero", &zero}, {"neg_identity", &neg_identity}, {"neg_sin", &neg_sin}}};
const std::array<NamedCoefficient, 3> kDiffusions{{{"zero", &zero}, {"sqrt2", &sqrt2}, {"bump", &bump}}};

template <std::size_t N>
const NamedCoefficient& lookup(const std::array<NamedCoefficient, N>& table, const std::string& name,
                               const char* what) {
    for (const auto& c : table)
        if (c.name == name) return c;
    throw std::invalid_argument(std::string("unknown ") + what + " '" + name + "'");
}

}  // namespace

double reduce_angle(double x) noexcept {
    double r = std::fmod(x, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    if (r >= kTwoPi) r = 0.0;
    return r;
}

double rotate(double x, double nu, double omega, double eps) noexcept { return reduce_angle(x + nu + omega + eps); }

const NamedCoefficient& drift_coefficient(const std::string& name) { return lookup(kDrifts, name, "drift"); }
const NamedCoefficient& diffusion_coefficient(const std::string& name) {
    return lookup(kDiffusions, name, "diffusion");
}

std::vector<std::string> drift_names() {
    std::vector<std::string> out;
    for (const auto& c : kDrifts) out.push_back(c.name);
    return out;
}

std::vector<std::string> diffusion_names() {
    std::vector<std::string> out;
    for (const auto& c : kDiffusions) out.push_back(c.name);
    return out;
}

RdsModel RdsModel::rotation(double nu, double half_width, double sigma, double snapshot_dt) {
    if (!std::isfinite(nu)) throw std::invalid_argument("rotation nu must be finite");
    if (!(half_width >= 0.0)) throw std::invalid_argument("rotation half_width must be >= 0");
    if (!(sigma >= 0.0)) throw std::invalid_argument("rotation sigma must be >= 0");
    if (!(snapshot_dt > 0.0)) throw std::invalid_argument("snapshot_dt must be > 0");
    RdsModel m;
    m.kind_ = Kind::rotation;
    m.nu_ = nu;
    m.half_width_ = half_width;
    m.sigma_ = sigma;
    m.snapshot_dt_ = snapshot_dt;
    m.dt_internal_ = snapshot_dt;
    m.substeps_ = 1;
    return m;
}

RdsModel RdsModel::sde(const std::string& drift, const std::string& diffusion, double snapshot_dt,
                       std::optional<double> dt_internal) {
    if (!(snapshot_dt > 0.0)) throw std::invalid_argument("snapshot_dt must be > 0");
    const double dt = dt_internal.value_or(snapshot_dt / 10.0);
    if (!(dt > 0.0)) throw std::invalid_argument("dt_internal must be > 0");
    const double ratio = snapshot_dt / dt;
    const double n = std::round(ratio);
    if (n < 1.0 || std::fabs(n * dt - snapshot_dt) > 1e-12)
        throw std::invalid_argument("dt_internal must divide snapshot_dt");
    RdsModel m;
    m.kind_ = Kind::sde;
    m.drift_ = drift_coefficient(drift);
    m.diffusion_ = diffusion_coefficient(diffusion);
    m.snapshot_dt_ = snapshot_dt;
    m.dt_internal_ = dt;
    m.substeps_ = static_cast<std::size_t>(n);
    return m;
}

RdsModel RdsModel::ou(double snapshot_dt, std::optional<double> dt_internal) {
    return sde("neg_identity", "sqrt2", snapshot_dt, dt_internal);
}

RdsModel RdsModel::sinexp(double snapshot_dt, std::optional<double> dt_internal) {
    return sde("neg_sin", "bump", snapshot_dt, dt_internal);
}

RdsModel RdsModel::with_sigma(double sigma) const {
    if (kind_ != Kind::rotation) throw std::invalid_argument("additive noise level applies to rotation models only");
    return rotation(nu_, half_width_, sigma, snapshot_dt_);
}

std::size_t RdsModel::steps_for(double t) const {
    if (!(t >= 0.0)) throw std::invalid_argument("evolution time must be >= 0");
    const double n = std::round(t / snapshot_dt_);
    if (std::fabs(n * snapshot_dt_ - t) > 1e-12)
        throw std::invalid_argument("evolution time is not a multiple of the snapshot step");
    return static_cast<std::size_t>(n);
}

double RdsModel::step(double x, NoiseStream& noise, std::size_t step_index) const {
    if (kind_ == Kind::rotation) {
        const double omega = half_width_ > 0.0 ? half_width_ * (2.0 * noise.uniform() - 1.0) : 0.0;
        const double eps = sigma_ > 0.0 ? sigma_ * noise.normal() : 0.0;
        return rotate(x, nu_, omega, eps);
    }
    const double sqrt_dt = std::sqrt(dt_internal_);
    for (std::size_t s = 0; s < substeps_; ++s) {
        const double b = diffusion_.fn(x);
        const double xi = b != 0.0 ? noise.normal() : 0.0;
        x = x + drift_.fn(x) * dt_internal_ + b * sqrt_dt * xi;
        if (!std::isfinite(x))
            throw IntegrationError("non-finite state at step " + std::to_string(step_index) + ", substep " +
                                   std::to_string(s));
    }
    return x;
}

std::vector<double> TrajectoryEnsemble::column(std::size_t time) const {
    std::vector<double> out(members);
    for (std::size_t k = 0; k < members; ++k) out[k] = at(k, time);
    return out;
}

std::vector<double> TrajectoryEnsemble::trajectory(std::size_t member) const {
    return {states.begin() + static_cast<std::ptrdiff_t>(member * columns),
            states.begin() + static_cast<std::ptrdiff_t>((member + 1) * columns)};
}

TrajectoryEnsemble generate_ensemble(const RdsModel& model, std::span<const double> x0, std::size_t m,
                                     std::uint64_t seed) {
    if (m == 0) throw std::invalid_argument("trajectory length m must be >= 1");
    if (x0.empty()) throw std::invalid_argument("ensemble needs at least one initial state");
    TrajectoryEnsemble ens;
    ens.members = x0.size();
    ens.columns = m + 1;
    ens.states.assign(ens.members * ens.columns, 0.0);
    ens.snapshot_dt = model.snapshot_dt();
    ens.seed = seed;
    parallel_for(ens.members, [&](std::size_t k) {
        double x = model.on_circle() ? reduce_angle(x0[k]) : x0[k];
        double* row = ens.states.data() + k * ens.columns;
        row[0] = x;
        for (std::size_t j = 0; j < m; ++j) {
            NoiseStream noise(seed, k, static_cast<std::uint32_t>(j));
            x = model.step(x, noise, j);
            row[j + 1] = x;
        }
    });
    return ens;
}

TrajectoryEnsemble generate_trajectory(const RdsModel& model, double x0, std::size_t m, std::uint64_t seed) {
    const double start[1] = {x0};
    return generate_ensemble(model, start, m, seed);
}

std::vector<MeasurePair> generate_pairs(const RdsModel& model, std::span<const EmpiricalMeasure> initial,
                                        std::uint64_t seed) {
    if (initial.empty()) throw std::invalid_argument("generate_pairs needs at least one measure");
    std::vector<MeasurePair> out;
    out.reserve(initial.size());
    for (std::size_t j = 0; j < initial.size(); ++j)
        out.push_back({initial[j], evolve_measure(initial[j], model, model.snapshot_dt(), derive_seed(seed, kPairsTag, j))});
    return out;
}

std::vector<EmpiricalMeasure> generate_chain(const RdsModel& model, const EmpiricalMeasure& start, std::size_t m,
                                             std::uint64_t seed) {
    if (m == 0) throw std::invalid_argument("chain length m must be >= 1");
    std::vector<EmpiricalMeasure> out;
    out.reserve(m + 1);
    out.push_back(start);
    for (std::size_t j = 0; j < m; ++j)
        out.push_back(evolve_measure(out.back(), model, model.snapshot_dt(), derive_seed(seed, kChainTag, j)));
    return out;
}

}  // namespace dko
