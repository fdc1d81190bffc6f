#include "dko/observables.hpp"

#include "dko/errors.hpp"
#include "dko/kernels.hpp"
#include "dko/parallel.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dko {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int parse_frequency(const std::string& name, std::size_t prefix) {
    int k = -1;
    const char* first = name.data() + prefix;
    const char* last = name.data() + name.size();
    const auto res = std::from_chars(first, last, k);
    if (first == last || res.ec != std::errc{} || res.ptr != last || k < 0)
        throw std::invalid_argument("unknown custom observable '" + name + "'");
    return k;
}

}  // namespace

StateObservable StateObservable::indicator(std::size_t i, std::size_t n) {
    if (n == 0 || i == 0 || i > n) throw std::invalid_argument("indicator bin index must satisfy 1 <= i <= n");
    StateObservable o;
    o.kind = Kind::indicator_bin;
    o.index = i;
    o.bins = n;
    return o;
}

StateObservable StateObservable::gaussian(double center, double width) {
    if (!(width > 0.0)) throw std::invalid_argument("gaussian width must be > 0");
    StateObservable o;
    o.kind = Kind::gaussian;
    o.center = center;
    o.width = width;
    return o;
}

StateObservable StateObservable::monomial(int degree) {
    if (degree < 0) throw std::invalid_argument("monomial degree must be >= 0");
    StateObservable o;
    o.kind = Kind::monomial;
    o.degree = degree;
    return o;
}

StateObservable StateObservable::custom(const std::string& name) {
    StateObservable o;
    o.kind = Kind::custom;
    o.name = name;
    if (name.rfind("cos", 0) == 0 || name.rfind("sin", 0) == 0)
        o.frequency = parse_frequency(name, 3);
    else
        throw std::invalid_argument("unknown custom observable '" + name + "'");
    return o;
}

double StateObservable::operator()(double x) const {
    switch (kind) {
        case Kind::indicator_bin: {
            // Half-open bins; reduce first so 2*pi lands in bin 1.
            double r = std::fmod(x, kTwoPi);
            if (r < 0.0) r += kTwoPi;
            if (r >= kTwoPi) r = 0.0;
            const double lo = kTwoPi * static_cast<double>(index - 1) / static_cast<double>(bins);
            const double hi = kTwoPi * static_cast<double>(index) / static_cast<double>(bins);
            return (r >= lo && r < hi) ? 1.0 : 0.0;
        }
        case Kind::gaussian: {
            const double z = (x - center) / width;
            return std::exp(-0.5 * z * z);
        }
        case Kind::monomial: {
            double v = 1.0;
            for (int p = 0; p < degree; ++p) v *= x;
            return v;
        }
        case Kind::custom:
            return name[0] == 'c' ? std::cos(frequency * x) : std::sin(frequency * x);
    }
    throw std::logic_error("unhandled observable kind");
}

std::string StateObservable::label() const {
    switch (kind) {
        case Kind::indicator_bin:
            return "bin" + std::to_string(index) + "/" + std::to_string(bins);
        case Kind::gaussian:
            return "gauss(" + std::to_string(center) + ")";
        case Kind::monomial:
            return "x^" + std::to_string(degree);
        case Kind::custom:
            return name;
    }
    return {};
}

ObservableBank::ObservableBank(std::vector<StateObservable> base, std::vector<DistObservable> observables,
                               std::vector<std::string> labels)
    : base_(std::move(base)), observables_(std::move(observables)), labels_(std::move(labels)) {
    if (observables_.empty()) throw std::invalid_argument("observable bank must not be empty");
    if (labels_.size() != observables_.size()) throw std::invalid_argument("one label per observable required");
    for (const auto& o : observables_)
        if (o.first >= base_.size() || (o.kind != DistObservable::Kind::linear && o.second >= base_.size()))
            throw std::invalid_argument("observable refers to a missing base function");
}

bool ObservableBank::is_linear() const noexcept {
    for (const auto& o : observables_)
        if (o.kind != DistObservable::Kind::linear) return false;
    return true;
}

Eigen::VectorXd ObservableBank::evaluate(const EmpiricalMeasure& mu) const {
    if (mu.dim() != 1) throw std::invalid_argument("observables act on one-dimensional measures");
    const std::size_t k_samples = mu.size();
    const auto xs = mu.coords();
    // Base values, one row per base observable.
    std::vector<std::vector<double>> values(base_.size(), std::vector<double>(k_samples));
    std::vector<double> means(base_.size());
    for (std::size_t b = 0; b < base_.size(); ++b) {
        for (std::size_t k = 0; k < k_samples; ++k) {
            const double v = base_[b](xs[k]);
            if (!std::isfinite(v))
                throw EvaluationError("non-finite value of observable '" + base_[b].label() + "' at sample " +
                                      std::to_string(k));
            values[b][k] = v;
        }
        means[b] = kernels::dot(mu.weights(), values[b]);
    }
    Eigen::VectorXd out(static_cast<Eigen::Index>(observables_.size()));
    for (std::size_t i = 0; i < observables_.size(); ++i) {
        const auto& o = observables_[i];
        switch (o.kind) {
            case DistObservable::Kind::linear:
                out[static_cast<Eigen::Index>(i)] = means[o.first];
                break;
            case DistObservable::Kind::product_p:
                out[static_cast<Eigen::Index>(i)] = kernels::dot3(mu.weights(), values[o.first], values[o.second]);
                break;
            case DistObservable::Kind::product_q:
                out[static_cast<Eigen::Index>(i)] = means[o.first] * means[o.second];
                break;
        }
    }
    return out;
}

Eigen::VectorXd ObservableBank::evaluate_state(double x) const {
    if (!is_linear()) throw std::invalid_argument("state evaluation needs a linear bank");
    Eigen::VectorXd out(static_cast<Eigen::Index>(observables_.size()));
    for (std::size_t i = 0; i < observables_.size(); ++i) {
        const double v = base_[observables_[i].first](x);
        if (!std::isfinite(v)) throw EvaluationError("non-finite value of observable " + std::to_string(i));
        out[static_cast<Eigen::Index>(i)] = v;
    }
    return out;
}

namespace {

nlohmann::json base_json(const StateObservable& o) {
    switch (o.kind) {
        case StateObservable::Kind::indicator_bin:
            return {{"kind", "indicator_bin"}, {"index", o.index}, {"bins", o.bins}};
        case StateObservable::Kind::gaussian:
            return {{"kind", "gaussian"}, {"center", o.center}, {"width", o.width}};
        case StateObservable::Kind::monomial:
            return {{"kind", "monomial"}, {"degree", o.degree}};
        case StateObservable::Kind::custom:
            return {{"kind", "custom"}, {"name", o.name}};
    }
    return {};
}

StateObservable base_from_json(const nlohmann::json& j) {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "indicator_bin") return StateObservable::indicator(j.at("index"), j.at("bins"));
    if (kind == "gaussian") return StateObservable::gaussian(j.at("center"), j.value("width", 1.0));
    if (kind == "monomial") return StateObservable::monomial(j.at("degree"));
    if (kind == "custom") return StateObservable::custom(j.at("name"));
    throw FormatError("unknown state observable kind '" + kind + "'");
}

}  // namespace

nlohmann::json ObservableBank::descriptor() const {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t i = 0; i < observables_.size(); ++i) {
        const auto& o = observables_[i];
        nlohmann::json entry;
        entry["label"] = labels_[i];
        if (o.kind == DistObservable::Kind::linear) {
            entry["kind"] = "linear";
            entry["params"] = base_json(base_[o.first]);
        } else {
            entry["kind"] = o.kind == DistObservable::Kind::product_p ? "product_p" : "product_q";
            entry["params"] = {{"first", base_json(base_[o.first])}, {"second", base_json(base_[o.second])}};
        }
        out.push_back(std::move(entry));
    }
    return out;
}

ObservableBank ObservableBank::from_descriptor(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) throw FormatError("bank descriptor must be a nonempty array");
    std::vector<StateObservable> base;
    std::vector<nlohmann::json> base_keys;
    auto intern = [&](const nlohmann::json& spec) {
        for (std::size_t b = 0; b < base_keys.size(); ++b)
            if (base_keys[b] == spec) return b;
        base.push_back(base_from_json(spec));
        base_keys.push_back(spec);
        return base.size() - 1;
    };
    std::vector<DistObservable> obs;
    std::vector<std::string> labels;
    for (const auto& entry : j) {
        const auto kind = entry.at("kind").get<std::string>();
        DistObservable o;
        if (kind == "linear") {
            o.kind = DistObservable::Kind::linear;
            o.first = intern(entry.at("params"));
        } else if (kind == "product_p" || kind == "product_q") {
            o.kind = kind == "product_p" ? DistObservable::Kind::product_p : DistObservable::Kind::product_q;
            o.first = intern(entry.at("params").at("first"));
            o.second = intern(entry.at("params").at("second"));
        } else {
            throw FormatError("unknown observable kind '" + kind + "'");
        }
        obs.push_back(o);
        labels.push_back(entry.at("label").get<std::string>());
    }
    return ObservableBank(std::move(base), std::move(obs), std::move(labels));
}

ObservableBank linear_bank(std::vector<StateObservable> base) {
    std::vector<DistObservable> obs;
    std::vector<std::string> labels;
    for (std::size_t i = 0; i < base.size(); ++i) {
        obs.push_back({DistObservable::Kind::linear, i, 0});
        labels.push_back(base[i].label());
    }
    return ObservableBank(std::move(base), std::move(obs), std::move(labels));
}

ObservableBank indicator_bank(std::size_t n) {
    if (n == 0) throw std::invalid_argument("indicator bank needs n >= 1");
    std::vector<StateObservable> base;
    for (std::size_t i = 1; i <= n; ++i) base.push_back(StateObservable::indicator(i, n));
    return linear_bank(std::move(base));
}

ObservableBank gaussian_bank(std::span<const double> centers) {
    if (centers.empty()) throw std::invalid_argument("gaussian bank needs at least one center");
    std::vector<StateObservable> base;
    for (double c : centers) base.push_back(StateObservable::gaussian(c));
    return linear_bank(std::move(base));
}

ObservableBank monomial_bank(int max_degree) {
    std::vector<StateObservable> base;
    for (int d = 0; d <= max_degree; ++d) base.push_back(StateObservable::monomial(d));
    return linear_bank(std::move(base));
}

std::size_t pair_index(std::size_t i, std::size_t j, std::size_t n) {
    if (i > j || j >= n) throw std::invalid_argument("pair index needs i <= j < n");
    // Pairs before row i: n + (n-1) + ... + (n-i+1).
    return i * n - i * (i - 1) / 2 + (j - i);
}

ObservableBank pq_bank(std::span<const double> centers) {
    const std::size_t n = centers.size();
    if (n == 0) throw std::invalid_argument("pq bank needs at least one center");
    std::vector<StateObservable> base;
    for (double c : centers) base.push_back(StateObservable::gaussian(c));
    std::vector<DistObservable> obs;
    std::vector<std::string> labels;
    for (auto kind : {DistObservable::Kind::product_p, DistObservable::Kind::product_q}) {
        const char* tag = kind == DistObservable::Kind::product_p ? "p" : "q";
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i; j < n; ++j) {
                obs.push_back({kind, i, j});
                labels.push_back(std::string(tag) + "(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
            }
    }
    return ObservableBank(std::move(base), std::move(obs), std::move(labels));
}

std::vector<double> equispaced(double lo, double hi, std::size_t n) {
    if (n == 0) return {};
    if (n == 1) return {lo};
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return out;
}

Eigen::VectorXd variance_coeff(std::size_t i, std::size_t n_centers) {
    if (i == 0 || i > n_centers) throw std::invalid_argument("variance coefficient index out of range");
    const std::size_t pairs = n_centers * (n_centers + 1) / 2;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * pairs));
    const std::size_t k = pair_index(i - 1, i - 1, n_centers);
    w[static_cast<Eigen::Index>(k)] = 1.0;
    w[static_cast<Eigen::Index>(pairs + k)] = -1.0;
    return w;
}

Eigen::MatrixXd evaluate_bank(const ObservableBank& bank, std::span<const EmpiricalMeasure> measures) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(bank.size()), static_cast<Eigen::Index>(measures.size()));
    parallel_for(measures.size(), [&](std::size_t j) {
        try {
            out.col(static_cast<Eigen::Index>(j)) = bank.evaluate(measures[j]);
        } catch (const EvaluationError& e) {
            throw EvaluationError("measure " + std::to_string(j) + ": " + e.what());
        }
    });
    return out;
}

}  // namespace dko
