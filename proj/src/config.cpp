#include "dko/config.hpp"

#include "dko/errors.hpp"
#include "dko/grid_io.hpp"
#include "dko/io.hpp"
#include "dko/rds.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace dko::config {

namespace {

std::string squares(std::size_t from, std::size_t to) {
    std::string out;
    for (std::size_t r = from; r <= to; ++r) out += (out.empty() ? "" : ",") + std::to_string(r * r);
    return out;
}

std::vector<KeySpec> build_schema() {
    const std::string full_sigmas = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1";
    return {
        {"experiment.name", "circle_spectrum", "circle_spectrum", "experiment to run"},
        {"run.seed", "", "", "master seed (required)"},
        {"run.repeats", "20", "100", "independent repeats"},
        {"run.threads", "0", "0", "worker threads, 0 = hardware concurrency"},
        {"run.n_eigs", "5", "10", "eigenvalues matched against the reference"},
        {"run.svd_cutoff", "1e-10", "1e-10", "relative singular value cutoff of the pseudoinverse"},
        {"model.kind", "rotation", "rotation", "rotation | sde"},
        {"model.nu", "0.5", "0.5", "rotation angle per step"},
        {"model.half_width", "0.5", "0.5", "half width of the uniform angle noise"},
        {"model.sigma", "0", "0", "std of additive normal noise on the rotation"},
        {"model.drift", "neg_identity", "neg_identity", "sde drift: zero | neg_identity | neg_sin"},
        {"model.diffusion", "sqrt2", "sqrt2", "sde diffusion: zero | sqrt2 | bump"},
        {"model.snapshot_dt", "1", "1", "time between snapshots"},
        {"model.dt_internal", "0", "0", "Euler-Maruyama step, 0 = snapshot_dt / 10"},
        {"bank.kind", "indicator", "indicator", "indicator | gaussian | pq | monomial"},
        {"bank.n", "50", "100", "indicator bins on the circle"},
        {"bank.centers_lo", "-2", "-2", "first Gaussian center"},
        {"bank.centers_hi", "2", "2", "last Gaussian center"},
        {"bank.centers", "9", "9", "number of Gaussian centers"},
        {"bank.degree", "2", "2", "highest monomial degree"},
        {"data.mode", "dko", "dko", "simulate: dko (measure pairs) | sko (one trajectory)"},
        {"data.m", "20", "20", "training measures or snapshot steps"},
        {"data.K", "1000", "1000", "samples per measure"},
        {"data.N", "20000", "20000", "single trajectory length"},
        {"data.stratified", "false", "false", "jittered stratified samples inside arcs and bins"},
        {"data.init_mean", "0", "0", "mean of the sde training initial law"},
        {"data.init_std", "1", "1", "std of the sde training initial law"},
        {"prediction.t_pred", "10", "10", "prediction horizon"},
        {"prediction.grid_lo", "-2", "-2", "lower end of the initial state grid"},
        {"prediction.grid_hi", "2", "2", "upper end of the initial state grid"},
        {"prediction.grid_points", "101", "101", "initial state grid points"},
        {"prediction.n_reference_samples", "100", "100", "Monte Carlo paths per grid point for the reference"},
        {"sweep.n_values", "1,4,25,100,400,2500,10000", squares(1, 100), "data budgets, perfect squares"},
        {"sweep.sigmas", "0,0.25,0.5,0.75,1", full_sigmas, "noise levels"},
        {"convergence.m_grid", "100,200,400,800,1600,3200,6400,12800", "100,200,400,800,1600,3200,6400,12800",
         "training sizes"},
        {"convergence.m_oracle", "50000", "640000", "measures behind the Galerkin limit"},
        {"convergence.arcs", "20", "20", "sub-arcs of the training sampler"},
        {"convergence.samples_per_measure", "100", "100", "samples per training measure"},
        {"grid.input", "", "", "raster directory, empty = synthetic toy field"},
        {"grid.format", "csv_frames_dir", "csv_frames_dir", "csv_frames_dir | flat_binary"},
        {"grid.pr", "10", "50", "patch rows"},
        {"grid.pc", "10", "50", "patch columns"},
        {"grid.train_frames", "60", "672", "training frames"},
        {"grid.horizon", "5", "5", "forecast steps"},
    };
}

const KeySpec* find_key(const std::string& key) {
    for (const auto& k : schema())
        if (k.key == key) return &k;
    return nullptr;
}

void check_known(const std::string& key) {
    if (!find_key(key)) throw ConfigError(key, "unknown configuration key");
}

Settings sde_preset(const std::string& bank) {
    Settings s{{"model.kind", "sde"},  {"model.snapshot_dt", "0.1"}, {"bank.kind", bank},
               {"data.m", "60"},       {"data.K", "100"},            {"prediction.t_pred", "10"}};
    return s;
}

}  // namespace

const std::vector<KeySpec>& schema() {
    static const std::vector<KeySpec> s = build_schema();
    return s;
}

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> n = {"circle_spectrum", "sensitivity",  "noise_sweep", "sde_predict",
                                               "variance_predict", "convergence", "grid_forecast"};
    return n;
}

Settings defaults(bool paper_scale) {
    Settings s;
    for (const auto& k : schema()) s[k.key] = paper_scale ? k.paper_default : k.desk_default;
    return s;
}

Settings experiment_preset(const std::string& experiment, bool paper_scale) {
    if (experiment == "circle_spectrum") return {};
    if (experiment == "sensitivity") return {{"run.repeats", paper_scale ? "100" : "10"}};
    if (experiment == "noise_sweep")
        return {{"data.N", "10000"}, {"data.m", "100"}, {"data.K", "100"}, {"run.repeats", paper_scale ? "100" : "10"}};
    if (experiment == "sde_predict") return sde_preset("gaussian");
    if (experiment == "variance_predict") return sde_preset("pq");
    if (experiment == "convergence") return {{"bank.n", "10"}, {"run.repeats", paper_scale ? "20" : "5"}};
    if (experiment == "grid_forecast") return {};
    throw ConfigError("experiment.name", "unknown experiment '" + experiment + "'");
}

Settings parse_ini(std::string_view text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in{std::string(text)};
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("", "config file line " + std::to_string(e.line()) + ": " + e.message());
    }
    Settings s;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) throw ConfigError(section, "key outside of a [section]");
        for (const auto& [name, value] : body) {
            const std::string key = section + "." + name;
            check_known(key);
            s[key] = std::string(io::trim(value.data()));
        }
    }
    return s;
}

Settings parse_overrides(const std::vector<std::string>& items) {
    Settings s;
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError(item, "override must look like section.key=value");
        const std::string key{io::trim(std::string_view(item).substr(0, eq))};
        check_known(key);
        s[key] = std::string(io::trim(std::string_view(item).substr(eq + 1)));
    }
    return s;
}

Settings resolve(const std::optional<std::string>& experiment, bool paper_scale, const Settings& file,
                 const Settings& overrides) {
    Settings s = defaults(paper_scale);
    std::string name = s["experiment.name"];
    if (auto it = file.find("experiment.name"); it != file.end()) name = it->second;
    if (auto it = overrides.find("experiment.name"); it != overrides.end()) name = it->second;
    if (experiment) name = *experiment;
    for (const auto& [k, v] : experiment_preset(name, paper_scale)) s[k] = v;
    for (const auto& [k, v] : file) s[k] = v;
    for (const auto& [k, v] : overrides) s[k] = v;
    s["experiment.name"] = name;
    return s;
}

std::string get_string(const Settings& s, const std::string& key) {
    const auto it = s.find(key);
    if (it == s.end()) throw ConfigError(key, "missing");
    return it->second;
}

double get_double(const Settings& s, const std::string& key) {
    const std::string v = get_string(s, key);
    try {
        return io::parse_double(v);
    } catch (const Error&) {
        throw ConfigError(key, "expected a number, got '" + v + "'");
    }
}

std::uint64_t get_u64(const Settings& s, const std::string& key) {
    const std::string v = get_string(s, key);
    std::uint64_t out = 0;
    const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || ec != std::errc{} || end != v.data() + v.size())
        throw ConfigError(key, "expected a nonnegative integer, got '" + v + "'");
    return out;
}

std::size_t get_size(const Settings& s, const std::string& key) { return static_cast<std::size_t>(get_u64(s, key)); }

bool get_bool(const Settings& s, const std::string& key) {
    const std::string v = get_string(s, key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key, "expected true or false, got '" + v + "'");
}

std::vector<std::size_t> get_size_list(const Settings& s, const std::string& key) {
    std::vector<std::size_t> out;
    for (const auto& part : io::split(get_string(s, key), ',')) {
        Settings one{{key, std::string(io::trim(part))}};
        out.push_back(get_size(one, key));
    }
    return out;
}

std::vector<double> get_double_list(const Settings& s, const std::string& key) {
    std::vector<double> out;
    for (const auto& part : io::split(get_string(s, key), ',')) {
        Settings one{{key, std::string(io::trim(part))}};
        out.push_back(get_double(one, key));
    }
    return out;
}

namespace {

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key, what);
}

std::size_t positive_size(const Settings& s, const std::string& key) {
    const std::size_t v = get_size(s, key);
    require(v > 0, key, "must be positive");
    return v;
}

double positive_double(const Settings& s, const std::string& key) {
    const double v = get_double(s, key);
    require(v > 0.0, key, "must be positive");
    return v;
}

void one_of(const std::string& key, const std::string& v, const std::vector<std::string>& allowed) {
    if (std::find(allowed.begin(), allowed.end(), v) != allowed.end()) return;
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    throw ConfigError(key, "'" + v + "' is not one of " + list);
}

}  // namespace

experiments::ExperimentConfig to_experiment_config(const Settings& s, bool experiment_checks) {
    experiments::ExperimentConfig c;
    c.experiment = get_string(s, "experiment.name");
    one_of("experiment.name", c.experiment, experiment_names());
    require(!get_string(s, "run.seed").empty(), "run.seed", "a seed is required (set run.seed or pass --seed)");
    c.seed = get_u64(s, "run.seed");
    c.repeats = positive_size(s, "run.repeats");
    c.n_eigs = positive_size(s, "run.n_eigs");
    c.svd_cutoff = get_double(s, "run.svd_cutoff");
    require(c.svd_cutoff >= 0.0 && c.svd_cutoff < 1.0, "run.svd_cutoff", "must lie in [0, 1)");

    auto& m = c.model;
    m.kind = get_string(s, "model.kind");
    one_of("model.kind", m.kind, {"rotation", "sde"});
    m.nu = get_double(s, "model.nu");
    m.half_width = get_double(s, "model.half_width");
    require(m.half_width >= 0.0, "model.half_width", "must be >= 0");
    m.sigma = get_double(s, "model.sigma");
    require(m.sigma >= 0.0, "model.sigma", "must be >= 0");
    m.drift = get_string(s, "model.drift");
    one_of("model.drift", m.drift, drift_names());
    m.diffusion = get_string(s, "model.diffusion");
    one_of("model.diffusion", m.diffusion, diffusion_names());
    m.snapshot_dt = positive_double(s, "model.snapshot_dt");
    m.dt_internal = get_double(s, "model.dt_internal");
    require(m.dt_internal >= 0.0, "model.dt_internal", "must be >= 0");
    if (m.kind == "sde" && m.dt_internal > 0.0) {
        const double n = std::round(m.snapshot_dt / m.dt_internal);
        require(n >= 1.0 && std::fabs(n * m.dt_internal - m.snapshot_dt) <= 1e-12, "model.dt_internal",
                "must divide model.snapshot_dt");
    }

    auto& b = c.bank;
    b.kind = get_string(s, "bank.kind");
    one_of("bank.kind", b.kind, {"indicator", "gaussian", "pq", "monomial"});
    b.n = positive_size(s, "bank.n");
    b.centers_lo = get_double(s, "bank.centers_lo");
    b.centers_hi = get_double(s, "bank.centers_hi");
    require(b.centers_hi >= b.centers_lo, "bank.centers_hi", "must be >= bank.centers_lo");
    b.centers = positive_size(s, "bank.centers");
    b.degree = static_cast<int>(get_size(s, "bank.degree"));

    auto& d = c.data;
    d.mode = get_string(s, "data.mode");
    one_of("data.mode", d.mode, {"dko", "sko"});
    d.m = positive_size(s, "data.m");
    d.K = positive_size(s, "data.K");
    d.N = positive_size(s, "data.N");
    d.stratified = get_bool(s, "data.stratified");
    d.init_mean = get_double(s, "data.init_mean");
    d.init_std = get_double(s, "data.init_std");
    require(d.init_std >= 0.0, "data.init_std", "must be >= 0");

    auto& p = c.prediction;
    p.t_pred = positive_double(s, "prediction.t_pred");
    p.grid_lo = get_double(s, "prediction.grid_lo");
    p.grid_hi = get_double(s, "prediction.grid_hi");
    require(p.grid_hi > p.grid_lo, "prediction.grid_hi", "must exceed prediction.grid_lo");
    p.grid_points = get_size(s, "prediction.grid_points");
    require(p.grid_points >= 2, "prediction.grid_points", "needs at least 2 points");
    p.n_reference_samples = positive_size(s, "prediction.n_reference_samples");

    c.sweep.n_values = get_size_list(s, "sweep.n_values");
    for (auto v : c.sweep.n_values) {
        const auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(v))));
        require(v > 0 && r * r == v, "sweep.n_values", std::to_string(v) + " is not a positive perfect square");
    }
    c.sweep.sigmas = get_double_list(s, "sweep.sigmas");
    for (auto v : c.sweep.sigmas) require(v >= 0.0, "sweep.sigmas", "noise levels must be >= 0");

    auto& cv = c.convergence;
    cv.m_grid = get_size_list(s, "convergence.m_grid");
    for (auto v : cv.m_grid) require(v > 0, "convergence.m_grid", "sizes must be positive");
    cv.m_oracle = positive_size(s, "convergence.m_oracle");
    cv.arcs = positive_size(s, "convergence.arcs");
    cv.samples_per_measure = positive_size(s, "convergence.samples_per_measure");

    auto& g = c.grid;
    g.input = get_string(s, "grid.input");
    g.format = get_string(s, "grid.format");
    try {
        (void)grid::parse_format(g.format);
    } catch (const std::exception& e) {
        throw ConfigError("grid.format", e.what());
    }
    g.pr = positive_size(s, "grid.pr");
    g.pc = positive_size(s, "grid.pc");
    g.train_frames = get_size(s, "grid.train_frames");
    require(g.train_frames >= 2, "grid.train_frames", "needs at least 2 frames");
    g.horizon = get_size(s, "grid.horizon");

    if (!experiment_checks) return c;
    const bool circle = c.experiment == "circle_spectrum" || c.experiment == "sensitivity" || c.experiment == "noise_sweep";
    if (circle) {
        require(m.kind == "rotation", "model.kind", c.experiment + " needs the rotation model");
        require(c.n_eigs <= b.n, "run.n_eigs", "exceeds bank.n");
    }
    if (c.experiment == "sde_predict" || c.experiment == "variance_predict")
        require(m.kind == "sde", "model.kind", c.experiment + " needs an sde model");
    if (c.experiment == "convergence" && m.kind == "rotation")
        require(b.kind == "indicator", "bank.kind", "the circle needs the indicator bank");
    return c;
}

std::string echo(const Settings& s) {
    std::string out;
    std::string section;
    for (const auto& k : schema()) {
        const auto it = s.find(k.key);
        if (it == s.end()) continue;
        const auto dot = k.key.find('.');
        const std::string sec = k.key.substr(0, dot);
        if (sec != section) {
            out += (out.empty() ? "[" : "\n[") + sec + "]\n";
            section = sec;
        }
        out += k.key.substr(dot + 1) + " = " + it->second + "\n";
    }
    return out;
}

}  // namespace dko::config
