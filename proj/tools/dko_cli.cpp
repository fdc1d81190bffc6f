// dko: simulate, fit, analyse and forecast with distributional Koopman operators.

#include "dko/config.hpp"
#include "dko/dmd.hpp"
#include "dko/errors.hpp"
#include "dko/experiments.hpp"
#include "dko/grid_io.hpp"
#include "dko/io.hpp"
#include "dko/kernels.hpp"
#include "dko/parallel.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <Eigen/Core>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifndef DKO_VERSION
#define DKO_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using dko::io::format_double;

namespace {

// Tracks files written by this invocation so a failure can remove them.
class OutputDir {
public:
    explicit OutputDir(fs::path dir) : dir_(std::move(dir)) {}

    void open() {
        if (!fs::exists(dir_)) {
            fs::create_directories(dir_);
            created_ = true;
        }
    }
    fs::path file(const std::string& name) {
        written_.push_back(name);
        return dir_ / name;
    }
    void write(const std::string& name, const std::string& text) { dko::io::write_text(file(name), text); }
    const std::vector<std::string>& written() const { return written_; }

    void discard() noexcept {
        std::error_code ec;
        for (const auto& name : written_) fs::remove(dir_ / name, ec);
        if (created_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
    }

private:
    fs::path dir_;
    bool created_ = false;
    std::vector<std::string> written_;
};

struct Shared {
    std::string config_path;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    bool paper_scale = false;
    std::vector<std::string> overrides;
};

std::string csv_line(const std::vector<std::string>& cells) {
    std::string s;
    for (std::size_t i = 0; i < cells.size(); ++i) s += (i ? "," : "") + cells[i];
    return s + "\n";
}

std::string curve_csv(const std::string& x_name, const dko::experiments::MseCurve& c) {
    std::string s = csv_line({x_name, "mse_mean", "mse_stderr"});
    for (std::size_t i = 0; i < c.times.size(); ++i)
        s += csv_line({format_double(c.times[i]), format_double(c.mean[i]), format_double(c.stderr_[i])});
    return s;
}

std::string arms_csv(const std::string& x_name, const dko::experiments::ArmCurves& a) {
    std::string s = csv_line({x_name, "sko_mean", "sko_stderr", "dko_mean", "dko_stderr"});
    for (std::size_t i = 0; i < a.sko.times.size(); ++i)
        s += csv_line({format_double(a.sko.times[i]), format_double(a.sko.mean[i]), format_double(a.sko.stderr_[i]),
                       format_double(a.dko.mean[i]), format_double(a.dko.stderr_[i])});
    return s;
}

std::string spectra_csv(const std::vector<std::pair<std::string, const dko::SpectralDecomposition*>>& parts) {
    std::string s = csv_line({"method", "index", "re", "im", "modulus"});
    for (const auto& [name, sp] : parts)
        for (Eigen::Index k = 0; k < sp->eigenvalues.size(); ++k) {
            const auto z = sp->eigenvalues[k];
            s += csv_line({name, std::to_string(k), format_double(z.real()), format_double(z.imag()),
                           format_double(std::abs(z))});
        }
    return s;
}

class Session {
public:
    Session(const Shared& shared, std::string command, std::optional<std::string> experiment = std::nullopt)
        : shared_(shared), command_(std::move(command)), out_(shared.out) {
        dko::config::Settings file;
        if (!shared.config_path.empty()) {
            if (!fs::exists(shared.config_path))
                throw dko::ConfigError("--config", "file not found: " + shared.config_path);
            file = dko::config::parse_ini(dko::io::read_text(shared.config_path));
        }
        auto overrides = dko::config::parse_overrides(shared.overrides);
        if (shared.seed) overrides["run.seed"] = std::to_string(*shared.seed);
        if (shared.threads) overrides["run.threads"] = std::to_string(*shared.threads);
        settings_ = dko::config::resolve(experiment, shared.paper_scale, file, overrides);
        cfg_ = dko::config::to_experiment_config(settings_, experiment.has_value());
        dko::set_max_threads(static_cast<unsigned>(dko::config::get_size(settings_, "run.threads")));
    }

    const dko::experiments::ExperimentConfig& cfg() const { return cfg_; }
    OutputDir& out() { return out_; }

    // Echo the resolved config before any computation.
    void begin() {
        out_.open();
        out_.write("config.echo", dko::config::echo(settings_));
    }

    void finish(json extra = json::object()) {
        json m;
        m["tool"] = "dko";
        m["version"] = DKO_VERSION;
        m["command"] = command_;
        m["experiment"] = cfg_.experiment;
        m["seed"] = cfg_.seed;
        std::vector<std::uint64_t> repeat_seeds;
        for (std::size_t r = 0; r < cfg_.repeats; ++r) repeat_seeds.push_back(dko::experiments::repeat_seed(cfg_.seed, r));
        m["repeat_seeds"] = repeat_seeds;
        m["paper_scale"] = shared_.paper_scale;
        m["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                             std::to_string(EIGEN_MINOR_VERSION);
        m["kernels"] = dko::kernels::isa_name(dko::kernels::active_isa());
        m["files"] = out_.written();
        m["results"] = std::move(extra);
        out_.write("manifest.json", m.dump(2) + "\n");
    }

private:
    const Shared& shared_;
    std::string command_;
    OutputDir out_;
    dko::config::Settings settings_;
    dko::experiments::ExperimentConfig cfg_;
};

void run_simulate(Session& s) {
    s.begin();
    const auto& cfg = s.cfg();
    const auto model = cfg.model.build();
    const auto bank = cfg.bank.build();
    const auto snap = dko::experiments::training_snapshots(cfg, model, bank, cfg.seed);
    dko::save_snapshots(s.out().file("snapshots.json"), snap, {{"bank", bank.descriptor()}, {"mode", cfg.data.mode}});
    s.finish({{"columns", snap.psi.cols()}, {"observables", snap.psi.rows()}});
}

void run_fit(Session& s, const std::string& input) {
    json extra;
    const auto snap = dko::load_snapshots(input, &extra);
    s.begin();
    const auto k = dko::fit_dko(snap, s.cfg().svd_cutoff);
    json side = {{"source", fs::path(input).filename().string()}};
    if (extra.contains("bank")) side["bank"] = extra["bank"];
    const auto csv = s.out().file("operator.csv");
    s.out().file("operator.json");
    dko::save_operator(csv, k, side);
    dko::write_spectrum_csv(s.out().file("spectrum.csv"), dko::spectrum(k));
    s.finish({{"rank", k.fit_report.rank}, {"residual_fro", k.fit_report.residual_fro}});
}

void run_spectrum(Session& s, const std::string& op) {
    const auto k = dko::load_operator(op);
    s.begin();
    const auto sp = dko::spectrum(k);
    dko::write_spectrum_csv(s.out().file("spectrum.csv"), sp);
    s.finish({{"max_residual", sp.max_residual}});
}

void run_predict(Session& s, const std::string& op) {
    json side;
    const auto k = dko::load_operator(op, &side);
    if (!side.contains("bank")) throw dko::FormatError(op + ": operator sidecar has no bank descriptor");
    const auto bank = dko::ObservableBank::from_descriptor(side["bank"]);
    if (static_cast<Eigen::Index>(bank.size()) != k.d.rows())
        throw dko::FormatError(op + ": bank size does not match the operator");
    s.begin();
    const auto& p = s.cfg().prediction;
    const auto steps = static_cast<std::size_t>(std::floor(p.t_pred / k.dt + 1e-9));
    const auto grid = dko::equispaced(p.grid_lo, p.grid_hi, p.grid_points);
    std::vector<std::string> header = {"step", "t", "x"};
    for (const auto& l : bank.labels()) header.push_back(l);
    std::string text = csv_line(header);
    std::vector<std::vector<Eigen::VectorXd>> paths;
    for (double x : grid) paths.push_back(dko::predict(k, bank.evaluate(dko::dirac(x)), steps));
    for (std::size_t l = 0; l <= steps; ++l)
        for (std::size_t g = 0; g < grid.size(); ++g) {
            std::vector<std::string> row = {std::to_string(l), format_double(static_cast<double>(l) * k.dt),
                                            format_double(grid[g])};
            for (Eigen::Index i = 0; i < paths[g][l].size(); ++i) row.push_back(format_double(paths[g][l][i]));
            text += csv_line(row);
        }
    s.out().write("results.csv", text);
    s.finish({{"steps", steps}, {"grid_points", grid.size()}});
}

void run_experiment(Session& s) {
    namespace ex = dko::experiments;
    s.begin();
    const auto& cfg = s.cfg();
    auto& out = s.out();
    const std::string& name = cfg.experiment;
    if (name == "circle_spectrum") {
        const auto r = ex::run_circle_spectrum(cfg);
        std::string t = csv_line({"repeat", "mse_sko", "mse_dko"});
        for (std::size_t i = 0; i < r.mse_sko.size(); ++i)
            t += csv_line({std::to_string(i), format_double(r.mse_sko[i]), format_double(r.mse_dko[i])});
        out.write("results.csv", t);
        dko::SpectralDecomposition ref;
        ref.eigenvalues = Eigen::Map<const Eigen::VectorXcd>(r.reference.data(), static_cast<Eigen::Index>(r.reference.size()));
        out.write("spectrum.csv", spectra_csv({{"reference", &ref}, {"sko", &r.sko_spectrum}, {"dko", &r.dko_spectrum}}));
        std::string e = csv_line({"k", "x", "ref_re", "ref_im", "sko_re", "sko_im", "dko_re", "dko_im"});
        json errors = json::array();
        for (const auto& tab : r.eigenfunctions) {
            errors.push_back({{"k", tab.k}, {"sko_error", tab.sko_error}, {"dko_error", tab.dko_error}});
            for (const auto& row : tab.rows)
                e += csv_line({std::to_string(tab.k), format_double(row.x), format_double(row.reference.real()),
                               format_double(row.reference.imag()), format_double(row.sko.real()),
                               format_double(row.sko.imag()), format_double(row.dko.real()),
                               format_double(row.dko.imag())});
        }
        out.write("eigenfunctions.csv", e);
        s.finish({{"mse_sko_mean", r.mse_sko_mean}, {"mse_dko_mean", r.mse_dko_mean}, {"eigenfunctions", errors}});
    } else if (name == "sensitivity") {
        out.write("results.csv", arms_csv("N", ex::run_sensitivity(cfg)));
        s.finish();
    } else if (name == "noise_sweep") {
        out.write("results.csv", arms_csv("sigma", ex::run_noise_sweep(cfg)));
        s.finish();
    } else if (name == "sde_predict" || name == "variance_predict") {
        const auto r = name == "sde_predict" ? ex::run_sde_predict(cfg) : ex::run_variance_predict(cfg);
        out.write("results.csv", curve_csv("t", r.curve));
        s.finish();
    } else if (name == "convergence") {
        const auto r = ex::run_convergence(cfg);
        std::string t = csv_line({"m", "frobenius", "weighted"});
        for (const auto& row : r.rows)
            t += csv_line({std::to_string(row.m), format_double(row.frobenius), format_double(row.weighted)});
        out.write("results.csv", t);
        s.finish({{"slope", r.slope}, {"oracle_condition", r.oracle_condition}, {"oracle_budget_ok", r.oracle_budget_ok}});
    } else if (name == "grid_forecast") {
        const auto r = ex::run_grid_forecast(cfg);
        std::string t = csv_line({"step", "relative_error"});
        for (std::size_t i = 0; i < r.forecast.errors_per_step.size(); ++i)
            t += csv_line({std::to_string(i + 1), format_double(r.forecast.errors_per_step[i])});
        out.write("results.csv", t);
        dko::io::write_matrix_csv(out.file("forecast.csv"), r.forecast.predicted);
        out.write("spectrum.csv", spectra_csv({{"dko", &r.spectrum}}));
        s.finish({{"patches", r.patches}, {"rank", r.forecast.koopman.fit_report.rank}});
    }
}

std::string keys_footer() {
    std::ostringstream os;
    os << "\nConfig keys (section.key: desk default | paper-scale default):\n";
    for (const auto& k : dko::config::schema()) {
        const auto show = [](const std::string& v) { return v.empty() ? std::string("<none>") : v; };
        os << "  " << k.key << ": " << show(k.desk_default);
        if (k.paper_default != k.desk_default) os << " | " << show(k.paper_default);
        os << "\n      " << k.description << "\n";
    }
    os << "\nOverrides are given as trailing section.key=value arguments.\n";
    return os.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributional Koopman operator toolkit"};
    app.set_version_flag("--version", DKO_VERSION);
    app.footer(keys_footer());
    app.require_subcommand(1);
    app.fallthrough();

    Shared shared;
    app.add_option("--config", shared.config_path, "INI config file");
    app.add_option("--out", shared.out, "output directory")->capture_default_str();
    app.add_option("--seed", shared.seed, "master seed (sets run.seed)");
    app.add_option("--threads", shared.threads, "worker threads (sets run.threads)");
    app.add_flag("--paper-scale{true}", shared.paper_scale, "use the published budgets");

    auto add_overrides = [&](CLI::App* sub) { sub->add_option("overrides", shared.overrides, "section.key=value"); };

    auto* sim = app.add_subcommand("simulate", "generate training snapshots (snapshots.json)");
    add_overrides(sim);

    std::string input;
    auto* fit = app.add_subcommand("fit", "fit an operator to saved snapshots");
    fit->add_option("--input", input, "snapshots.json from simulate")->required()->check(CLI::ExistingFile);
    add_overrides(fit);

    std::string op;
    auto* spec = app.add_subcommand("spectrum", "eigen-decompose a saved operator");
    spec->add_option("--operator", op, "operator.csv from fit")->required()->check(CLI::ExistingFile);
    add_overrides(spec);

    auto* pred = app.add_subcommand("predict", "propagate Dirac initial states with a saved operator");
    pred->add_option("--operator", op, "operator.csv from fit")->required()->check(CLI::ExistingFile);
    add_overrides(pred);

    std::string experiment;
    auto* exp = app.add_subcommand("experiment", "run a scripted experiment");
    exp->add_option("name", experiment, "experiment name")
        ->required()
        ->check(CLI::IsMember(dko::config::experiment_names()));
    add_overrides(exp);

    auto* grid = app.add_subcommand("grid", "gridded field tools");
    grid->require_subcommand(1);
    auto* forecast = grid->add_subcommand("forecast", "coarse-grain, fit and forecast a raster sequence");
    add_overrides(forecast);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    std::optional<Session> session;
    try {
        if (*sim) {
            session.emplace(shared, "simulate");
            run_simulate(*session);
        } else if (*fit) {
            session.emplace(shared, "fit");
            run_fit(*session, input);
        } else if (*spec) {
            session.emplace(shared, "spectrum");
            run_spectrum(*session, op);
        } else if (*pred) {
            session.emplace(shared, "predict");
            run_predict(*session, op);
        } else if (*exp) {
            session.emplace(shared, "experiment", experiment);
            run_experiment(*session);
        } else if (*forecast) {
            session.emplace(shared, "grid forecast", std::string("grid_forecast"));
            run_experiment(*session);
        }
    } catch (const dko::ConfigError& e) {
        if (session) session->out().discard();
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        if (session) session->out().discard();
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
