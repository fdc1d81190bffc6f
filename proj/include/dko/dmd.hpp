#pragma once

#include "dko/measures.hpp"
#include "dko/observables.hpp"
#include "dko/rds.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dko {

// psi(i, j) = h_i(pi_j), phi(i, j) = h_i(mu_j) with mu_j the evolved pi_j.
struct SnapshotMatrices {
    Eigen::MatrixXd psi;
    Eigen::MatrixXd phi;
    std::vector<std::string> bank_labels;
    double dt = 0.0;
};

struct FitReport {
    // ||phi psi^T - D psi psi^T||_F / max(1, ||phi psi^T||_F)
    double residual_fro = 0.0;
    std::size_t rank = 0;
    double svd_cutoff = 0.0;
};

// Finite-dimensional approximation of the Koopman-type operator on the span
// of a bank; observable vectors evolve as v <- d v.
struct KoopmanMatrix {
    Eigen::MatrixXd d;
    double dt = 0.0;
    std::vector<std::string> bank_labels;
    FitReport fit_report;
};

struct SpectralDecomposition {
    // Sorted by descending modulus, then imaginary part, then real part, each
    // compared after rounding to 1e-10.
    Eigen::VectorXcd eigenvalues;
    // Unit-norm columns; first entry above 1e-12 in modulus made real positive.
    Eigen::MatrixXcd eigenvectors;
    // max_k ||D v_k - lambda_k v_k||_2 / ||D||_2
    double max_residual = 0.0;
};

struct GalerkinOracle {
    Eigen::MatrixXd g;  // Gram matrix (1/m) psi psi^T, symmetrized
    Eigen::MatrixXd y;  // cross matrix (1/m) phi psi^T
    Eigen::MatrixXd d_infinity;
    MeasureSampler sampler;
    std::size_t m_oracle = 0;
    double condition = 0.0;
};

struct HilbertSchmidtResidual {
    double frobenius = 0.0;
    double weighted = 0.0;
};

struct EigenvalueMatch {
    // pairing[r] = index into `computed` matched to reference r
    std::vector<std::size_t> pairing;
    double mse = 0.0;
};

// Minimum-norm least-squares D = phi psi^+ with singular values below
// svd_rel_cutoff * sigma_max discarded. Throws DegenerateDataError on an
// all-zero psi and NumericalError if the normal-equation residual exceeds 1e-8.
KoopmanMatrix fit_dko(const SnapshotMatrices& snap, double svd_rel_cutoff = 1e-10);

// Snapshot matrices from a single trajectory: psi columns at x_0..x_{m-1},
// phi columns at x_1..x_m.
SnapshotMatrices sko_snapshots(const std::vector<double>& trajectory, const ObservableBank& bank, double dt);
KoopmanMatrix fit_sko(const TrajectoryEnsemble& traj, const ObservableBank& bank, double svd_rel_cutoff = 1e-10);

// Snapshot matrices for measure pairs.
SnapshotMatrices dko_snapshots(const std::vector<MeasurePair>& pairs, const ObservableBank& bank, double dt);

SpectralDecomposition spectrum(const Eigen::MatrixXd& d);
inline SpectralDecomposition spectrum(const KoopmanMatrix& k) { return spectrum(k.d); }

// Greedy nearest-neighbour pairing, reference order, without replacement.
EigenvalueMatch match_eigenvalues(const std::vector<std::complex<double>>& computed,
                                  const std::vector<std::complex<double>>& reference);

// [v0, D v0, D^2 v0, ...], steps + 1 vectors.
std::vector<Eigen::VectorXd> predict(const KoopmanMatrix& k, const Eigen::VectorXd& v0, std::size_t steps);

// Fresh i.i.d. snapshot data: m measures from `sampler`, each evolved one
// snapshot step. Shared by the oracle and by finite-m fits so both can be
// drawn from one stream.
SnapshotMatrices draw_snapshots(const ObservableBank& bank, const MeasureSampler& sampler, const RdsModel& model,
                                std::size_t m, std::uint64_t seed);

// Large-sample Galerkin limit D_inf solving Y = D_inf G. Requires
// m_oracle >= 20 n; throws IllConditionedError when cond(G) > max_condition.
GalerkinOracle build_galerkin_oracle(const ObservableBank& bank, const MeasureSampler& sampler,
                                     const RdsModel& model, std::size_t m_oracle, std::uint64_t seed,
                                     double max_condition = 1e12);
GalerkinOracle galerkin_oracle_from(const SnapshotMatrices& snap, const MeasureSampler& sampler,
                                    double max_condition = 1e12);

HilbertSchmidtResidual hilbert_schmidt_residual(const KoopmanMatrix& k, const GalerkinOracle& oracle);

// Operator persistence: matrix CSV plus JSON sidecar `<stem>.json`.
void save_operator(const std::filesystem::path& csv_path, const KoopmanMatrix& k, const nlohmann::json& extra = {});
KoopmanMatrix load_operator(const std::filesystem::path& csv_path, nlohmann::json* sidecar = nullptr);

void save_snapshots(const std::filesystem::path& json_path, const SnapshotMatrices& snap,
                    const nlohmann::json& extra = {});
SnapshotMatrices load_snapshots(const std::filesystem::path& json_path, nlohmann::json* extra = nullptr);

// CSV `index,re,im,modulus`.
void write_spectrum_csv(const std::filesystem::path& path, const SpectralDecomposition& s);

}  // namespace dko
