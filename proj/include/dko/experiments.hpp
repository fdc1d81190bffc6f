#pragma once

#include "dko/dmd.hpp"
#include "dko/grid_io.hpp"
#include "dko/observables.hpp"
#include "dko/rds.hpp"

#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace dko::experiments {

struct ModelSpec {
    std::string kind = "rotation";  // rotation | sde
    double nu = 0.5;
    double half_width = 0.5;
    double sigma = 0.0;
    std::string drift = "neg_identity";
    std::string diffusion = "sqrt2";
    double snapshot_dt = 1.0;
    double dt_internal = 0.0;  // 0 selects snapshot_dt / 10

    RdsModel build() const;
};

struct BankSpec {
    std::string kind = "indicator";  // indicator | gaussian | pq | monomial
    std::size_t n = 50;              // indicator bins
    double centers_lo = -2.0;
    double centers_hi = 2.0;
    std::size_t centers = 9;
    int degree = 2;

    ObservableBank build() const;
    std::vector<double> center_values() const;
};

struct DataBudget {
    std::string mode = "dko";  // dko: measure pairs | sko: one trajectory
    std::size_t m = 20;     // training measures (DKO)
    std::size_t K = 1000;   // samples per measure
    std::size_t N = 20000;  // single-trajectory length (SKO)
    bool stratified = false;
    // Training ensemble initial law for SDE experiments: N(init_mean, init_std^2).
    double init_mean = 0.0;
    double init_std = 1.0;
};

struct PredictionSpec {
    double t_pred = 10.0;
    double grid_lo = -2.0;
    double grid_hi = 2.0;
    std::size_t grid_points = 101;
    std::size_t n_reference_samples = 100;
};

struct SweepSpec {
    std::vector<std::size_t> n_values;  // data budgets N, perfect squares
    std::vector<double> sigmas;
};

struct ConvergenceSpec {
    std::vector<std::size_t> m_grid;
    std::size_t m_oracle = 50000;
    std::size_t arcs = 20;  // sampler: uniform on a random one of `arcs` sub-arcs
    std::size_t samples_per_measure = 100;
};

struct GridSpec {
    std::string input;  // raster directory; empty selects a synthetic toy field
    std::string format = "csv_frames_dir";
    std::size_t pr = 10;
    std::size_t pc = 10;
    std::size_t train_frames = 60;
    std::size_t horizon = 5;
};

struct ExperimentConfig {
    std::string experiment = "circle_spectrum";
    ModelSpec model;
    BankSpec bank;
    DataBudget data;
    PredictionSpec prediction;
    SweepSpec sweep;
    ConvergenceSpec convergence;
    GridSpec grid;
    std::size_t n_eigs = 5;
    double svd_cutoff = 1e-10;
    std::size_t repeats = 10;
    std::uint64_t seed = 0;

    // Throws std::invalid_argument on non-positive budgets, a prediction grid
    // with fewer than two points or zero repeats.
    void validate() const;
};

// times[k] is the abscissa (time, data budget or noise level).
struct MseCurve {
    std::vector<double> times;
    std::vector<double> mean;
    std::vector<double> stderr_;  // sample std / sqrt(repeats)
};

// Seed of repeat r; repeats are independent of each other and of their count.
std::uint64_t repeat_seed(std::uint64_t seed, std::size_t r);

// Eigenvalues of the one-step Koopman operator of the rotation
// x -> x + nu + U[-hw, hw]: lambda_k = e^{i k nu} sin(k hw) / (k hw), k = 1..count.
std::vector<std::complex<double>> rotation_eigenvalues(double nu, double half_width, std::size_t count);

struct EigenfunctionRow {
    double x = 0.0;
    std::complex<double> reference, sko, dko;
};

struct EigenfunctionTable {
    int k = 0;
    std::vector<EigenfunctionRow> rows;
    double sko_error = 0.0;  // relative L2 error after optimal phase alignment
    double dko_error = 0.0;
};

struct CircleSpectrumResult {
    std::vector<std::complex<double>> reference;
    SpectralDecomposition sko_spectrum, dko_spectrum;  // first repeat
    EigenvalueMatch sko_match, dko_match;              // first repeat
    std::vector<double> mse_sko, mse_dko;              // one per repeat
    double mse_sko_mean = 0.0, mse_dko_mean = 0.0;
    std::vector<EigenfunctionTable> eigenfunctions;     // k = 1 and 3, first repeat
};

CircleSpectrumResult run_circle_spectrum(const ExperimentConfig& cfg);

// One SKO and one DKO eigenvalue MSE for a rotation model at the given
// budgets. Shared by the circle experiments.
struct ArmErrors {
    double sko = 0.0;
    double dko = 0.0;
};
ArmErrors circle_arm_errors(const RdsModel& model, std::size_t n_bins, std::size_t sko_length,
                            std::size_t dko_measures, std::size_t dko_samples, bool stratified,
                            const std::vector<std::complex<double>>& reference, double svd_cutoff,
                            std::uint64_t seed);

struct ArmCurves {
    MseCurve sko;
    MseCurve dko;
};

ArmCurves run_sensitivity(const ExperimentConfig& cfg);
ArmCurves run_noise_sweep(const ExperimentConfig& cfg);

struct PredictionResult {
    MseCurve curve;
    std::vector<std::vector<double>> per_repeat;  // MSE(t) of each repeat
};

PredictionResult run_sde_predict(const ExperimentConfig& cfg);
PredictionResult run_variance_predict(const ExperimentConfig& cfg);

// Training data for cfg's model and bank. sko mode: one trajectory of length
// N. dko mode on the circle: m sub-arc measures of K samples, each evolved one
// step. dko mode for an sde: K samples from the initial law followed for m
// steps, consecutive empirical measures forming the pairs.
SnapshotMatrices training_snapshots(const ExperimentConfig& cfg, const RdsModel& model, const ObservableBank& bank,
                                    std::uint64_t seed);

// Fits D_m on the SDE training ensemble described by cfg (K initial samples,
// m snapshot steps) for the given bank.
KoopmanMatrix fit_sde_training(const ExperimentConfig& cfg, const RdsModel& model, const ObservableBank& bank,
                               std::uint64_t seed);

struct ConvergenceRow {
    std::size_t m = 0;
    double frobenius = 0.0;
    double weighted = 0.0;
};

struct ConvergenceResult {
    std::vector<ConvergenceRow> rows;  // means over repeats
    double slope = 0.0;                // log-log slope of frobenius vs m
    double oracle_condition = 0.0;
    bool oracle_budget_ok = true;      // m_oracle >= 50 * max(m)
};

ConvergenceResult run_convergence(const ExperimentConfig& cfg);

struct GridForecastResult {
    grid::GridForecast forecast;
    SpectralDecomposition spectrum;
    std::size_t patches = 0;
};

GridForecastResult run_grid_forecast(const ExperimentConfig& cfg);

// Dissipative toy field: upwind advection plus diffusion of a few Gaussian
// blobs on a periodic rows x cols grid.
grid::RasterSequence advection_diffusion_field(std::size_t rows, std::size_t cols, std::size_t frames,
                                               std::uint64_t seed);

}  // namespace dko::experiments
