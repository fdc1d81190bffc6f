#include "dko/measures.hpp"

#include "dko/errors.hpp"
#include "dko/io.hpp"
#include "dko/kernels.hpp"
#include "dko/parallel.hpp"
#include "dko/rds.hpp"
#include "dko/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

namespace dko {

namespace {

constexpr std::uint64_t kSamplerTag = 0x53414d50;  // "SAMP"

void check_weights(std::span<const double> w, double tol) {
    // Neumaier summation: K copies of 1/K must land within 1e-12 of one.
    double total = 0.0, carry = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        if (!(w[k] >= 0.0) || !std::isfinite(w[k]))
            throw std::invalid_argument("measure weight " + std::to_string(k) + " is negative or not finite");
        const double t = total + w[k];
        carry += std::fabs(total) >= w[k] ? (total - t) + w[k] : (w[k] - t) + total;
        total = t;
    }
    total += carry;
    if (std::fabs(total - 1.0) > tol)
        throw std::invalid_argument("measure weights sum to " + io::format_double(total) + ", not 1");
}

}  // namespace

EmpiricalMeasure::EmpiricalMeasure(std::size_t dim, std::vector<double> coords, std::vector<double> weights)
    : dim_(dim), coords_(std::move(coords)), weights_(std::move(weights)) {
    if (dim_ == 0) throw std::invalid_argument("measure dimension must be >= 1");
    if (weights_.empty()) throw std::invalid_argument("measure needs at least one sample");
    if (coords_.size() != weights_.size() * dim_)
        throw std::invalid_argument("measure has " + std::to_string(weights_.size()) + " weights but " +
                                    std::to_string(coords_.size()) + " coordinates");
    check_weights(weights_, 1e-12);
}

EmpiricalMeasure::EmpiricalMeasure(std::size_t dim, std::vector<double> coords)
    : EmpiricalMeasure(dim, coords,
                       std::vector<double>(dim == 0 ? 0 : coords.size() / dim,
                                           dim == 0 || coords.size() < dim ? 0.0 : dim / double(coords.size()))) {}

EmpiricalMeasure EmpiricalMeasure::from_points(std::span<const double> xs) {
    return EmpiricalMeasure(1, std::vector<double>(xs.begin(), xs.end()));
}

EmpiricalMeasure EmpiricalMeasure::from_states(std::span<const State> states) {
    if (states.empty()) throw std::invalid_argument("measure needs at least one sample");
    const std::size_t d = states.front().dim();
    std::vector<double> coords;
    coords.reserve(states.size() * d);
    for (const auto& s : states) {
        if (s.dim() != d) throw std::invalid_argument("states of mixed dimension");
        coords.insert(coords.end(), s.coords().begin(), s.coords().end());
    }
    return EmpiricalMeasure(d, std::move(coords));
}

EmpiricalMeasure EmpiricalMeasure::mixture(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double alpha) {
    if (a.dim() != b.dim()) throw std::invalid_argument("mixture of measures with different dimensions");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("mixture weight outside [0, 1]");
    std::vector<double> coords(a.coords_);
    coords.insert(coords.end(), b.coords_.begin(), b.coords_.end());
    std::vector<double> w;
    w.reserve(a.size() + b.size());
    for (double x : a.weights_) w.push_back(alpha * x);
    for (double x : b.weights_) w.push_back((1.0 - alpha) * x);
    return EmpiricalMeasure(a.dim(), std::move(coords), std::move(w));
}

EmpiricalMeasure dirac(const State& x) {
    if (x.dim() == 0) throw std::invalid_argument("dirac of an empty state");
    return EmpiricalMeasure(x.dim(), std::vector<double>(x.coords().begin(), x.coords().end()), {1.0});
}

double expectation(const EmpiricalMeasure& mu, const StateFunction& f) {
    std::vector<double> values(mu.size());
    for (std::size_t k = 0; k < mu.size(); ++k) {
        values[k] = f(mu.sample(k));
        if (!std::isfinite(values[k]))
            throw EvaluationError("non-finite observable value at sample " + std::to_string(k));
    }
    return kernels::dot(mu.weights(), values);
}

double variance_of(const EmpiricalMeasure& mu, const StateFunction& f) {
    const double mean = expectation(mu, f);
    const double second = expectation(mu, [&f](std::span<const double> x) {
        const double v = f(x);
        return v * v;
    });
    const double var = second - mean * mean;
    return var < 0.0 && var >= -1e-12 ? 0.0 : var;
}

EmpiricalMeasure pushforward(const EmpiricalMeasure& mu, const StateMap& f) {
    std::vector<double> coords;
    std::size_t dim = 0;
    for (std::size_t k = 0; k < mu.size(); ++k) {
        State y;
        try {
            y = f(mu.sample(k));
        } catch (const std::exception& e) {
            throw EvaluationError("pushforward map failed at sample " + std::to_string(k) + ": " + e.what());
        }
        if (k == 0) {
            dim = y.dim();
            coords.reserve(mu.size() * dim);
        } else if (y.dim() != dim) {
            throw EvaluationError("pushforward map changed output dimension at sample " + std::to_string(k));
        }
        coords.insert(coords.end(), y.coords().begin(), y.coords().end());
    }
    return EmpiricalMeasure(dim, std::move(coords), std::vector<double>(mu.weights().begin(), mu.weights().end()));
}

EmpiricalMeasure evolve_measure(const EmpiricalMeasure& mu, const RdsModel& model, double t, std::uint64_t seed) {
    const std::size_t steps = model.steps_for(t);
    if (steps == 0) return mu;
    if (mu.dim() != 1) throw std::invalid_argument("models act on one-dimensional states");
    std::vector<double> coords(mu.coords().begin(), mu.coords().end());
    parallel_for(coords.size(), [&](std::size_t k) {
        double x = coords[k];
        for (std::size_t s = 0; s < steps; ++s) {
            NoiseStream noise(seed, k, static_cast<std::uint32_t>(s));
            x = model.step(x, noise, s);
        }
        coords[k] = x;
    });
    return EmpiricalMeasure(1, std::move(coords), std::vector<double>(mu.weights().begin(), mu.weights().end()));
}

MeasureSampler MeasureSampler::sub_arc(std::size_t arcs, std::size_t samples, bool stratified) {
    MeasureSampler s;
    s.kind = Kind::sub_arc_uniform;
    s.count = arcs;
    s.lo = 0.0;
    s.hi = 2.0 * std::numbers::pi;
    s.samples_per_measure = samples;
    s.stratified = stratified;
    return s;
}

MeasureSampler MeasureSampler::gaussian(double mean, double std, std::size_t samples) {
    MeasureSampler s;
    s.kind = Kind::gaussian_init;
    s.mean = mean;
    s.std = std;
    s.samples_per_measure = samples;
    return s;
}

MeasureSampler MeasureSampler::bins(double lo, double hi, std::size_t count, std::size_t samples, bool stratified) {
    MeasureSampler s;
    s.kind = Kind::grid_bins;
    s.lo = lo;
    s.hi = hi;
    s.count = count;
    s.samples_per_measure = samples;
    s.stratified = stratified;
    return s;
}

MeasureSampler MeasureSampler::random_gaussians(double mean_lo, double mean_hi, double std_lo, double std_hi,
                                                std::size_t samples) {
    MeasureSampler s;
    s.kind = Kind::random_gaussian;
    s.mean_lo = mean_lo;
    s.mean_hi = mean_hi;
    s.std_lo = std_lo;
    s.std_hi = std_hi;
    s.samples_per_measure = samples;
    return s;
}

namespace {

EmpiricalMeasure interval_measure(double lo, double hi, std::size_t k_samples, bool stratified, NoiseStream& noise) {
    std::vector<double> xs(k_samples);
    const double width = hi - lo;
    for (std::size_t k = 0; k < k_samples; ++k) {
        const double u = noise.uniform();
        xs[k] = stratified ? lo + width * ((static_cast<double>(k) + u) / static_cast<double>(k_samples))
                           : lo + width * u;
        if (xs[k] >= hi) xs[k] = lo;  // rounding guard for half-open intervals
    }
    return EmpiricalMeasure::from_points(xs);
}

EmpiricalMeasure gaussian_measure(double mean, double std, std::size_t k_samples, NoiseStream& noise) {
    std::vector<double> xs(k_samples);
    for (auto& x : xs) x = mean + std * noise.normal();
    return EmpiricalMeasure::from_points(xs);
}

}  // namespace

EmpiricalMeasure MeasureSampler::member(std::size_t j, std::uint64_t seed) const {
    if (samples_per_measure == 0) throw std::invalid_argument("sampler needs samples_per_measure >= 1");
    NoiseStream noise(derive_seed(seed, kSamplerTag, j), 0, 0);
    switch (kind) {
        case Kind::sub_arc_uniform:
        case Kind::grid_bins: {
            if (count == 0) throw std::invalid_argument("sampler needs count >= 1");
            if (j >= count) throw std::invalid_argument("member index beyond sampler family");
            const double width = (hi - lo) / static_cast<double>(count);
            const double a = lo + width * static_cast<double>(j);
            const double b = j + 1 == count ? hi : lo + width * static_cast<double>(j + 1);
            return interval_measure(a, b, samples_per_measure, stratified, noise);
        }
        case Kind::gaussian_init:
            return gaussian_measure(mean, std, samples_per_measure, noise);
        case Kind::random_gaussian: {
            const double m = mean_lo + (mean_hi - mean_lo) * noise.uniform();
            const double s = std_lo + (std_hi - std_lo) * noise.uniform();
            return gaussian_measure(m, s, samples_per_measure, noise);
        }
    }
    throw std::logic_error("unhandled sampler kind");
}

EmpiricalMeasure MeasureSampler::draw(std::uint64_t seed, std::uint64_t index) const {
    const std::uint64_t child = derive_seed(seed, kSamplerTag + 1, index);
    if (kind == Kind::sub_arc_uniform || kind == Kind::grid_bins) {
        if (count == 0) throw std::invalid_argument("sampler needs count >= 1");
        NoiseStream pick(child, 1, 0);
        auto j = static_cast<std::size_t>(pick.uniform() * static_cast<double>(count));
        if (j >= count) j = count - 1;
        return member(j, child);
    }
    return member(0, child);
}

void write_measure_csv(const std::filesystem::path& path, const EmpiricalMeasure& mu) {
    std::ostringstream out;
    out << "weight";
    for (std::size_t d = 0; d < mu.dim(); ++d) out << ",x" << d + 1;
    out << '\n';
    for (std::size_t k = 0; k < mu.size(); ++k) {
        out << io::format_double(mu.weights()[k]);
        for (double c : mu.sample(k)) out << ',' << io::format_double(c);
        out << '\n';
    }
    io::write_text(path, out.str());
}

EmpiricalMeasure read_measure_csv(const std::filesystem::path& path) {
    std::istringstream in(io::read_text(path));
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": empty measure file");
    const auto header = io::split(line, ',');
    if (header.size() < 2 || header[0] != "weight")
        throw FormatError(path.string() + ": header must be weight,x1,...,xd");
    for (std::size_t d = 1; d < header.size(); ++d)
        if (header[d] != "x" + std::to_string(d)) throw FormatError(path.string() + ": bad header column " + header[d]);
    const std::size_t dim = header.size() - 1;
    std::vector<double> coords, weights;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (io::trim(line).empty()) continue;
        const auto cells = io::split(line, ',');
        if (cells.size() != dim + 1) throw FormatError(path.string() + ": wrong column count on line " + std::to_string(row));
        weights.push_back(io::parse_double(cells[0]));
        for (std::size_t d = 1; d <= dim; ++d) coords.push_back(io::parse_double(cells[d]));
    }
    if (weights.empty()) throw FormatError(path.string() + ": no samples");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw FormatError(path.string() + ": negative weight");
        total += w;
    }
    if (std::fabs(total - 1.0) > 1e-9)
        throw FormatError(path.string() + ": weights sum to " + io::format_double(total));
    for (double& w : weights) w /= total;
    return EmpiricalMeasure(dim, std::move(coords), std::move(weights));
}

}  // namespace dko
