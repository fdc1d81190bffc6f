#include "dko/experiments.hpp"

#include "dko/errors.hpp"
#include "dko/parallel.hpp"
#include "dko/reference.hpp"
#include "dko/rng.hpp"
#include "dko/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dko::experiments {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr std::uint64_t kRepeatTag = 0x52455054;  // "REPT"
constexpr std::uint64_t kSkoTag = 0x534b4f30;
constexpr std::uint64_t kDkoTag = 0x444b4f30;
constexpr std::uint64_t kTrainTag = 0x5452414e;
constexpr std::uint64_t kRefTag = 0x52454630;
constexpr std::uint64_t kOracleTag = 0x4f52434c;
constexpr std::uint64_t kFitTag = 0x46495430;
constexpr std::uint64_t kSweepTag = 0x53574550;

MseCurve summarize(const std::vector<double>& times, const std::vector<std::vector<double>>& per_repeat) {
    MseCurve c;
    c.times = times;
    for (std::size_t t = 0; t < times.size(); ++t) {
        std::vector<double> col;
        col.reserve(per_repeat.size());
        for (const auto& r : per_repeat) col.push_back(r[t]);
        c.mean.push_back(stats::mean(col));
        c.stderr_.push_back(stats::standard_error(col));
    }
    return c;
}

std::vector<std::complex<double>> as_vector(const Eigen::VectorXcd& v) {
    return {v.data(), v.data() + v.size()};
}

std::size_t integer_sqrt(std::size_t n) {
    auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
    while (r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

// Eigenvector of d^T (a left eigenvector of d) whose eigenvalue is closest to
// `target`; its entries are the eigenfunction's values on the bins.
Eigen::VectorXcd left_eigenvector_near(const Eigen::MatrixXd& d, std::complex<double> target) {
    const auto s = spectrum(Eigen::MatrixXd(d.transpose()));
    Eigen::Index best = 0;
    for (Eigen::Index k = 1; k < s.eigenvalues.size(); ++k)
        if (std::abs(s.eigenvalues[k] - target) < std::abs(s.eigenvalues[best] - target)) best = k;
    return s.eigenvectors.col(best);
}

// Multiplies v by the unit complex scalar that best aligns it with ref and
// returns the relative L2 error of the normalized vectors.
double align_phase(Eigen::VectorXcd& v, const Eigen::VectorXcd& ref) {
    const Eigen::VectorXcd r = ref / ref.norm();
    v /= v.norm();
    const std::complex<double> inner = v.dot(r);  // v^H r
    if (std::abs(inner) > 0.0) v *= inner / std::abs(inner);
    return (v - r).norm();
}

}  // namespace

RdsModel ModelSpec::build() const {
    if (kind == "rotation") return RdsModel::rotation(nu, half_width, sigma, snapshot_dt);
    if (kind == "sde")
        return RdsModel::sde(drift, diffusion, snapshot_dt,
                             dt_internal > 0.0 ? std::optional<double>(dt_internal) : std::nullopt);
    throw std::invalid_argument("unknown model kind '" + kind + "'");
}

std::vector<double> BankSpec::center_values() const { return equispaced(centers_lo, centers_hi, centers); }

ObservableBank BankSpec::build() const {
    if (kind == "indicator") return indicator_bank(n);
    if (kind == "gaussian") {
        const auto c = center_values();
        return gaussian_bank(c);
    }
    if (kind == "pq") {
        const auto c = center_values();
        return pq_bank(c);
    }
    if (kind == "monomial") return monomial_bank(degree);
    throw std::invalid_argument("unknown bank kind '" + kind + "'");
}

void ExperimentConfig::validate() const {
    if (data.m == 0 || data.K == 0 || data.N == 0) throw std::invalid_argument("data budgets must be positive");
    if (prediction.grid_points < 2) throw std::invalid_argument("prediction grid needs at least 2 points");
    if (repeats == 0) throw std::invalid_argument("repeats must be >= 1");
    if (n_eigs == 0) throw std::invalid_argument("n_eigs must be >= 1");
    if (prediction.n_reference_samples == 0) throw std::invalid_argument("n_reference_samples must be >= 1");
    if (!(prediction.t_pred > 0.0)) throw std::invalid_argument("t_pred must be > 0");
}

std::uint64_t repeat_seed(std::uint64_t seed, std::size_t r) { return derive_seed(seed, kRepeatTag, r); }

std::vector<std::complex<double>> rotation_eigenvalues(double nu, double half_width, std::size_t count) {
    std::vector<std::complex<double>> out;
    for (std::size_t k = 1; k <= count; ++k) {
        const double kk = static_cast<double>(k);
        const double damp = half_width > 0.0 ? std::sin(kk * half_width) / (kk * half_width) : 1.0;
        out.push_back(std::polar(1.0, kk * nu) * damp);
    }
    return out;
}

ArmErrors circle_arm_errors(const RdsModel& model, std::size_t n_bins, std::size_t sko_length,
                            std::size_t dko_measures, std::size_t dko_samples, bool stratified,
                            const std::vector<std::complex<double>>& reference, double svd_cutoff,
                            std::uint64_t seed) {
    const auto bank = indicator_bank(n_bins);
    ArmErrors e;
    const auto traj = generate_trajectory(model, 0.0, sko_length, derive_seed(seed, kSkoTag, 0));
    const auto sko = fit_sko(traj, bank, svd_cutoff);
    e.sko = match_eigenvalues(as_vector(spectrum(sko).eigenvalues), reference).mse;

    const auto sampler = MeasureSampler::sub_arc(dko_measures, dko_samples, stratified);
    std::vector<EmpiricalMeasure> initial;
    for (std::size_t j = 0; j < dko_measures; ++j) initial.push_back(sampler.member(j, derive_seed(seed, kDkoTag, 0)));
    const auto pairs = generate_pairs(model, initial, derive_seed(seed, kDkoTag, 1));
    const auto dko = fit_dko(dko_snapshots(pairs, bank, model.snapshot_dt()), svd_cutoff);
    e.dko = match_eigenvalues(as_vector(spectrum(dko).eigenvalues), reference).mse;
    return e;
}

CircleSpectrumResult run_circle_spectrum(const ExperimentConfig& cfg) {
    cfg.validate();
    const RdsModel model = cfg.model.build();
    if (model.kind() != RdsModel::Kind::rotation) throw std::invalid_argument("circle_spectrum needs a rotation model");
    const std::size_t n = cfg.bank.n;
    if (cfg.n_eigs > n) throw std::invalid_argument("n_eigs exceeds the number of bins");
    const auto bank = indicator_bank(n);

    CircleSpectrumResult res;
    res.reference = rotation_eigenvalues(model.nu(), model.half_width(), cfg.n_eigs);
    res.mse_sko.resize(cfg.repeats);
    res.mse_dko.resize(cfg.repeats);

    for (std::size_t r = 0; r < cfg.repeats; ++r) {
        const std::uint64_t seed = repeat_seed(cfg.seed, r);
        const auto traj = generate_trajectory(model, 0.0, cfg.data.N, derive_seed(seed, kSkoTag, 0));
        const auto sko = fit_sko(traj, bank, cfg.svd_cutoff);

        const auto sampler = MeasureSampler::sub_arc(cfg.data.m, cfg.data.K, cfg.data.stratified);
        std::vector<EmpiricalMeasure> initial;
        for (std::size_t j = 0; j < cfg.data.m; ++j)
            initial.push_back(sampler.member(j, derive_seed(seed, kDkoTag, 0)));
        const auto pairs = generate_pairs(model, initial, derive_seed(seed, kDkoTag, 1));
        const auto dko = fit_dko(dko_snapshots(pairs, bank, model.snapshot_dt()), cfg.svd_cutoff);

        const auto s_sko = spectrum(sko);
        const auto s_dko = spectrum(dko);
        const auto m_sko = match_eigenvalues(as_vector(s_sko.eigenvalues), res.reference);
        const auto m_dko = match_eigenvalues(as_vector(s_dko.eigenvalues), res.reference);
        res.mse_sko[r] = m_sko.mse;
        res.mse_dko[r] = m_dko.mse;
        if (r != 0) continue;

        res.sko_spectrum = s_sko;
        res.dko_spectrum = s_dko;
        res.sko_match = m_sko;
        res.dko_match = m_dko;
        for (int k : {1, 3}) {
            if (static_cast<std::size_t>(k) > res.reference.size()) continue;
            const auto target = res.reference[static_cast<std::size_t>(k - 1)];
            EigenfunctionTable table;
            table.k = k;
            Eigen::VectorXcd ref(static_cast<Eigen::Index>(n));
            for (std::size_t b = 0; b < n; ++b) {
                const double x = kTwoPi * (static_cast<double>(b) + 0.5) / static_cast<double>(n);
                ref[static_cast<Eigen::Index>(b)] = std::polar(1.0, k * x);
            }
            Eigen::VectorXcd vs = left_eigenvector_near(sko.d, target);
            Eigen::VectorXcd vd = left_eigenvector_near(dko.d, target);
            table.sko_error = align_phase(vs, ref);
            table.dko_error = align_phase(vd, ref);
            const double scale = std::sqrt(static_cast<double>(n));
            for (std::size_t b = 0; b < n; ++b) {
                const auto bi = static_cast<Eigen::Index>(b);
                table.rows.push_back({kTwoPi * (static_cast<double>(b) + 0.5) / static_cast<double>(n), ref[bi],
                                      vs[bi] * scale, vd[bi] * scale});
            }
            res.eigenfunctions.push_back(std::move(table));
        }
    }
    res.mse_sko_mean = stats::mean(res.mse_sko);
    res.mse_dko_mean = stats::mean(res.mse_dko);
    return res;
}

// Both sweeps reuse one noise stream per repeat across all sweep points.
ArmCurves run_sensitivity(const ExperimentConfig& cfg) {
    cfg.validate();
    const RdsModel model = cfg.model.build();
    if (model.kind() != RdsModel::Kind::rotation) throw std::invalid_argument("sensitivity needs a rotation model");
    const auto reference = rotation_eigenvalues(model.nu(), model.half_width(), cfg.n_eigs);
    std::vector<double> times;
    std::vector<std::vector<double>> sko(cfg.repeats), dko(cfg.repeats);
    for (std::size_t i = 0; i < cfg.sweep.n_values.size(); ++i) {
        const std::size_t budget = cfg.sweep.n_values[i];
        const std::size_t root = integer_sqrt(budget);
        if (budget == 0 || root * root != budget)
            throw std::invalid_argument("data budget " + std::to_string(budget) + " is not a perfect square");
        times.push_back(static_cast<double>(budget));
        for (std::size_t r = 0; r < cfg.repeats; ++r) {
            const auto e = circle_arm_errors(model, cfg.bank.n, budget, root, root, cfg.data.stratified, reference,
                                             cfg.svd_cutoff, derive_seed(repeat_seed(cfg.seed, r), kSweepTag, 0));
            sko[r].push_back(e.sko);
            dko[r].push_back(e.dko);
        }
    }
    return {summarize(times, sko), summarize(times, dko)};
}

ArmCurves run_noise_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    const RdsModel base = cfg.model.build();
    if (base.kind() != RdsModel::Kind::rotation) throw std::invalid_argument("noise_sweep needs a rotation model");
    const auto reference = rotation_eigenvalues(base.nu(), base.half_width(), cfg.n_eigs);
    std::vector<double> times;
    std::vector<std::vector<double>> sko(cfg.repeats), dko(cfg.repeats);
    for (std::size_t i = 0; i < cfg.sweep.sigmas.size(); ++i) {
        const double sigma = cfg.sweep.sigmas[i];
        if (!(sigma >= 0.0)) throw std::invalid_argument("noise level sigma must be >= 0");
        times.push_back(sigma);
        const RdsModel model = base.with_sigma(sigma);
        for (std::size_t r = 0; r < cfg.repeats; ++r) {
            const auto e = circle_arm_errors(model, cfg.bank.n, cfg.data.N, cfg.data.m, cfg.data.K, cfg.data.stratified,
                                             reference, cfg.svd_cutoff,
                                             derive_seed(repeat_seed(cfg.seed, r), kSweepTag, 0));
            sko[r].push_back(e.sko);
            dko[r].push_back(e.dko);
        }
    }
    return {summarize(times, sko), summarize(times, dko)};
}

SnapshotMatrices training_snapshots(const ExperimentConfig& cfg, const RdsModel& model, const ObservableBank& bank,
                                    std::uint64_t seed) {
    if (cfg.data.mode == "sko") {
        const double x0 = model.on_circle() ? 0.0 : cfg.data.init_mean;
        const auto traj = generate_trajectory(model, x0, cfg.data.N, derive_seed(seed, kSkoTag, 0));
        return sko_snapshots(traj.trajectory(0), bank, model.snapshot_dt());
    }
    if (cfg.data.mode != "dko") throw std::invalid_argument("unknown data mode '" + cfg.data.mode + "'");
    if (model.on_circle()) {
        const auto sampler = MeasureSampler::sub_arc(cfg.data.m, cfg.data.K, cfg.data.stratified);
        std::vector<EmpiricalMeasure> initial;
        for (std::size_t j = 0; j < cfg.data.m; ++j)
            initial.push_back(sampler.member(j, derive_seed(seed, kDkoTag, 0)));
        return dko_snapshots(generate_pairs(model, initial, derive_seed(seed, kDkoTag, 1)), bank,
                             model.snapshot_dt());
    }
    NoiseStream init(derive_seed(seed, kTrainTag, 0), 0, 0);
    std::vector<double> x0(cfg.data.K);
    for (auto& x : x0) x = cfg.data.init_mean + cfg.data.init_std * init.normal();
    const auto ens = generate_ensemble(model, x0, cfg.data.m, derive_seed(seed, kTrainTag, 1));
    std::vector<EmpiricalMeasure> columns;
    columns.reserve(ens.columns);
    for (std::size_t j = 0; j < ens.columns; ++j) columns.push_back(EmpiricalMeasure::from_points(ens.column(j)));
    const Eigen::MatrixXd all = evaluate_bank(bank, columns);
    SnapshotMatrices snap;
    snap.psi = all.leftCols(static_cast<Eigen::Index>(cfg.data.m));
    snap.phi = all.rightCols(static_cast<Eigen::Index>(cfg.data.m));
    snap.bank_labels = bank.labels();
    snap.dt = model.snapshot_dt();
    return snap;
}

KoopmanMatrix fit_sde_training(const ExperimentConfig& cfg, const RdsModel& model, const ObservableBank& bank,
                               std::uint64_t seed) {
    ExperimentConfig dko_cfg = cfg;
    dko_cfg.data.mode = "dko";
    return fit_dko(training_snapshots(dko_cfg, model, bank, seed), cfg.svd_cutoff);
}

namespace {

enum class PredictTarget { mean, variance };

PredictionResult run_prediction(const ExperimentConfig& cfg, PredictTarget target) {
    cfg.validate();
    const RdsModel model = cfg.model.build();
    if (model.kind() != RdsModel::Kind::sde) throw std::invalid_argument("prediction experiments need an sde model");
    const auto centers = cfg.bank.center_values();
    const ObservableBank bank = target == PredictTarget::mean ? gaussian_bank(centers) : pq_bank(centers);
    const auto& base = bank.base();
    const std::size_t steps = model.steps_for(std::floor(cfg.prediction.t_pred / model.snapshot_dt() + 1e-9) *
                                              model.snapshot_dt());
    const auto grid = equispaced(cfg.prediction.grid_lo, cfg.prediction.grid_hi, cfg.prediction.grid_points);
    std::vector<Eigen::VectorXd> weights;
    if (target == PredictTarget::variance)
        for (std::size_t i = 1; i <= centers.size(); ++i) weights.push_back(variance_coeff(i, centers.size()));

    PredictionResult res;
    res.per_repeat.resize(cfg.repeats);
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
        const std::uint64_t seed = repeat_seed(cfg.seed, r);
        const auto d = fit_sde_training(cfg, model, bank, seed);
        const auto ref = reference::conditional_moments(model, base, grid, steps, cfg.prediction.n_reference_samples,
                                                        derive_seed(seed, kRefTag, 0));
        // predicted[l](i, g)
        std::vector<Eigen::MatrixXd> predicted(steps + 1, Eigen::MatrixXd(centers.size(), grid.size()));
        for (std::size_t g = 0; g < grid.size(); ++g) {
            const auto path = predict(d, bank.evaluate(dirac(grid[g])), steps);
            for (std::size_t l = 0; l <= steps; ++l)
                for (std::size_t i = 0; i < centers.size(); ++i) {
                    const double v = target == PredictTarget::mean ? path[l][static_cast<Eigen::Index>(i)]
                                                                    : weights[i].dot(path[l]);
                    predicted[l](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(g)) = v;
                }
        }
        auto& mse = res.per_repeat[r];
        for (std::size_t l = 1; l <= steps; ++l) {
            double total = 0.0;
            for (std::size_t i = 0; i < centers.size(); ++i) {
                const auto& truth = target == PredictTarget::mean ? ref.mean[l][i] : ref.var[l][i];
                std::vector<double> sq(grid.size());
                for (std::size_t g = 0; g < grid.size(); ++g) {
                    const double e = truth[g] - predicted[l](static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(g));
                    sq[g] = e * e;
                }
                total += stats::trapezoid(grid, sq);
            }
            mse.push_back(total / static_cast<double>(centers.size()));
        }
    }
    std::vector<double> times;
    for (std::size_t l = 1; l <= steps; ++l) times.push_back(static_cast<double>(l) * model.snapshot_dt());
    res.curve = summarize(times, res.per_repeat);
    return res;
}

}  // namespace

PredictionResult run_sde_predict(const ExperimentConfig& cfg) { return run_prediction(cfg, PredictTarget::mean); }

PredictionResult run_variance_predict(const ExperimentConfig& cfg) {
    return run_prediction(cfg, PredictTarget::variance);
}

ConvergenceResult run_convergence(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto& cv = cfg.convergence;
    if (cv.m_grid.empty()) throw std::invalid_argument("convergence needs a nonempty m grid");
    const RdsModel model = cfg.model.build();
    const ObservableBank bank = cfg.bank.build();
    const MeasureSampler sampler = model.on_circle()
                                       ? MeasureSampler::sub_arc(cv.arcs, cv.samples_per_measure, cfg.data.stratified)
                                       : MeasureSampler::random_gaussians(cfg.prediction.grid_lo, cfg.prediction.grid_hi,
                                                                          0.0, cfg.data.init_std, cv.samples_per_measure);
    const std::size_t m_max = *std::max_element(cv.m_grid.begin(), cv.m_grid.end());

    ConvergenceResult res;
    res.oracle_budget_ok = cv.m_oracle >= 50 * m_max;
    const auto oracle = build_galerkin_oracle(bank, sampler, model, cv.m_oracle, derive_seed(cfg.seed, kOracleTag, 0));
    res.oracle_condition = oracle.condition;

    std::vector<double> fro(cv.m_grid.size(), 0.0), wtd(cv.m_grid.size(), 0.0);
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
        const auto data = draw_snapshots(bank, sampler, model, m_max, derive_seed(cfg.seed, kFitTag, r));
        for (std::size_t i = 0; i < cv.m_grid.size(); ++i) {
            const auto m = static_cast<Eigen::Index>(cv.m_grid[i]);
            SnapshotMatrices prefix{data.psi.leftCols(m), data.phi.leftCols(m), data.bank_labels, data.dt};
            const auto hs = hilbert_schmidt_residual(fit_dko(prefix, cfg.svd_cutoff), oracle);
            fro[i] += hs.frobenius / static_cast<double>(cfg.repeats);
            wtd[i] += hs.weighted / static_cast<double>(cfg.repeats);
        }
    }
    std::vector<double> ms;
    for (std::size_t i = 0; i < cv.m_grid.size(); ++i) {
        res.rows.push_back({cv.m_grid[i], fro[i], wtd[i]});
        ms.push_back(static_cast<double>(cv.m_grid[i]));
    }
    res.slope = ms.size() >= 2 ? stats::loglog_slope(ms, fro) : 0.0;
    return res;
}

grid::RasterSequence advection_diffusion_field(std::size_t rows, std::size_t cols, std::size_t frames,
                                               std::uint64_t seed) {
    if (rows < 2 || cols < 2 || frames == 0) throw std::invalid_argument("toy field needs rows, cols >= 2");
    grid::RasterSequence r;
    r.rows = rows;
    r.cols = cols;
    r.frames = frames;
    r.data.assign(rows * cols * frames, 0.0);
    std::vector<double> f(rows * cols, 0.0), next(rows * cols);
    NoiseStream noise(seed, 0, 0);
    for (int blob = 0; blob < 4; ++blob) {
        const double cr = noise.uniform() * static_cast<double>(rows);
        const double cc = noise.uniform() * static_cast<double>(cols);
        const double amp = 0.5 + noise.uniform();
        const double w = 1.5 + 2.0 * noise.uniform();
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) {
                const double dr = std::min(std::fabs(i - cr), rows - std::fabs(i - cr));
                const double dc = std::min(std::fabs(j - cc), cols - std::fabs(j - cc));
                f[i * cols + j] += amp * std::exp(-(dr * dr + dc * dc) / (2.0 * w * w));
            }
    }
    // Upwind advection (velocity +x, +y) and diffusion; Courant numbers keep
    // the explicit update a convex combination, hence non-expansive.
    const double cx = 0.3, cy = 0.15, kappa = 0.1, decay = 0.995;
    for (std::size_t t = 0; t < frames; ++t) {
        std::copy(f.begin(), f.end(), r.data.begin() + static_cast<std::ptrdiff_t>(t * rows * cols));
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) {
                const std::size_t up = ((i + rows - 1) % rows) * cols + j;
                const std::size_t down = ((i + 1) % rows) * cols + j;
                const std::size_t left = i * cols + (j + cols - 1) % cols;
                const std::size_t right = i * cols + (j + 1) % cols;
                const double c = f[i * cols + j];
                next[i * cols + j] = decay * (c - cx * (c - f[left]) - cy * (c - f[up]) +
                                              kappa * (f[up] + f[down] + f[left] + f[right] - 4.0 * c));
            }
        f.swap(next);
    }
    return r;
}

GridForecastResult run_grid_forecast(const ExperimentConfig& cfg) {
    const auto& g = cfg.grid;
    const grid::RasterSequence raster =
        g.input.empty() ? advection_diffusion_field(40, 40, g.train_frames + g.horizon, cfg.seed)
                        : grid::ingest(g.input, grid::parse_format(g.format));
    const auto series = grid::coarse_grain(raster, g.pr, g.pc);
    GridForecastResult res;
    res.forecast = grid::forecast_grid(series, g.train_frames, g.horizon, cfg.svd_cutoff);
    res.spectrum = spectrum(res.forecast.koopman);
    res.patches = series.patches();
    return res;
}

}  // namespace dko::experiments
