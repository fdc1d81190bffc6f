#include "dko/dmd.hpp"

#include "dko/errors.hpp"
#include "dko/io.hpp"
#include "dko/parallel.hpp"
#include "dko/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace dko {

namespace {

constexpr std::uint64_t kDrawTag = 0x44524157;  // "DRAW"
constexpr std::uint64_t kEvolveTag = 0x45564f4c;  // "EVOL"

}  // namespace

KoopmanMatrix fit_dko(const SnapshotMatrices& snap, double svd_rel_cutoff) {
    const auto& psi = snap.psi;
    const auto& phi = snap.phi;
    if (psi.rows() != phi.rows() || psi.cols() != phi.cols())
        throw std::invalid_argument("psi and phi must have the same shape");
    if (psi.cols() < 1 || psi.rows() < 1) throw std::invalid_argument("snapshot matrices need m >= 1 columns");
    if (!psi.allFinite() || !phi.allFinite()) throw NumericalError("snapshot matrices contain non-finite entries");
    if (psi.isZero(0.0)) throw DegenerateDataError("psi is identically zero");

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(psi, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cutoff = svd_rel_cutoff * sv[0];
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv[rank] > cutoff) ++rank;

    const Eigen::MatrixXd u = svd.matrixU().leftCols(rank);
    const Eigen::MatrixXd v = svd.matrixV().leftCols(rank);
    const Eigen::VectorXd inv = sv.head(rank).cwiseInverse();
    // D = phi V diag(1/s) U^T
    const Eigen::MatrixXd d = ((phi * v) * inv.asDiagonal()) * u.transpose();

    const Eigen::MatrixXd cross = phi * psi.transpose();
    const double residual =
        (cross - d * (psi * psi.transpose())).norm() / std::max(1.0, cross.norm());

    KoopmanMatrix k;
    k.d = d;
    k.dt = snap.dt;
    k.bank_labels = snap.bank_labels;
    k.fit_report = {residual, static_cast<std::size_t>(rank), svd_rel_cutoff};
    if (!(residual <= 1e-8))
        throw NumericalError("normal-equation residual " + io::format_double(residual) + " exceeds 1e-8");
    return k;
}

SnapshotMatrices sko_snapshots(const std::vector<double>& trajectory, const ObservableBank& bank, double dt) {
    if (trajectory.size() < 2) throw std::invalid_argument("trajectory needs at least two snapshots");
    const auto m = static_cast<Eigen::Index>(trajectory.size() - 1);
    const auto n = static_cast<Eigen::Index>(bank.size());
    SnapshotMatrices snap;
    snap.psi.resize(n, m);
    snap.phi.resize(n, m);
    // Column j of phi is column j+1 of psi's sequence; evaluate each point once.
    Eigen::VectorXd prev = bank.evaluate_state(trajectory[0]);
    for (Eigen::Index j = 0; j < m; ++j) {
        const Eigen::VectorXd next = bank.evaluate_state(trajectory[static_cast<std::size_t>(j) + 1]);
        snap.psi.col(j) = prev;
        snap.phi.col(j) = next;
        prev = next;
    }
    snap.bank_labels = bank.labels();
    snap.dt = dt;
    return snap;
}

KoopmanMatrix fit_sko(const TrajectoryEnsemble& traj, const ObservableBank& bank, double svd_rel_cutoff) {
    if (traj.members != 1) throw std::invalid_argument("fit_sko expects a single trajectory");
    return fit_dko(sko_snapshots(traj.trajectory(0), bank, traj.snapshot_dt), svd_rel_cutoff);
}

SnapshotMatrices dko_snapshots(const std::vector<MeasurePair>& pairs, const ObservableBank& bank, double dt) {
    if (pairs.empty()) throw std::invalid_argument("need at least one measure pair");
    std::vector<EmpiricalMeasure> initial, evolved;
    initial.reserve(pairs.size());
    evolved.reserve(pairs.size());
    for (const auto& p : pairs) {
        initial.push_back(p.initial);
        evolved.push_back(p.evolved);
    }
    SnapshotMatrices snap;
    snap.psi = evaluate_bank(bank, initial);
    snap.phi = evaluate_bank(bank, evolved);
    snap.bank_labels = bank.labels();
    snap.dt = dt;
    return snap;
}

SpectralDecomposition spectrum(const Eigen::MatrixXd& d) {
    if (d.rows() != d.cols()) throw std::invalid_argument("spectrum needs a square matrix");
    const Eigen::Index n = d.rows();
    SpectralDecomposition out;
    if (n == 0) return out;
    if (!d.allFinite()) throw NumericalError("matrix has non-finite entries");
    Eigen::EigenSolver<Eigen::MatrixXd> solver(d, true);
    if (solver.info() != Eigen::Success) throw NumericalError("eigensolver did not converge");
    const Eigen::VectorXcd vals = solver.eigenvalues();
    const Eigen::MatrixXcd vecs = solver.eigenvectors();

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    // Keys rounded to 1e-10 so that round-off does not decide between ties.
    const auto q = [](double v) { return std::round(v * 1e10); };
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        const auto ka = std::make_tuple(q(std::abs(vals[a])), q(vals[a].imag()), q(vals[a].real()));
        const auto kb = std::make_tuple(q(std::abs(vals[b])), q(vals[b].imag()), q(vals[b].real()));
        return ka > kb;
    });

    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n, n);
    const double norm2 = std::max(d.operatorNorm(), std::numeric_limits<double>::min());
    for (Eigen::Index k = 0; k < n; ++k) {
        const Eigen::Index src = order[static_cast<std::size_t>(k)];
        Eigen::VectorXcd v = vecs.col(src);
        v /= v.norm();
        const double vmax = v.cwiseAbs().maxCoeff();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(v[i]) > 1e-12 * vmax) {
                v *= std::conj(v[i]) / std::abs(v[i]);
                v[i] = std::abs(v[i]);
                break;
            }
        }
        out.eigenvalues[k] = vals[src];
        out.eigenvectors.col(k) = v;
        const double r = (d.cast<std::complex<double>>() * v - vals[src] * v).norm() / norm2;
        out.max_residual = std::max(out.max_residual, r);
    }
    if (!(out.max_residual <= 1e-8))
        throw NumericalError("eigenpair residual " + io::format_double(out.max_residual) + " exceeds 1e-8");
    return out;
}

EigenvalueMatch match_eigenvalues(const std::vector<std::complex<double>>& computed,
                                  const std::vector<std::complex<double>>& reference) {
    if (computed.size() < reference.size())
        throw std::invalid_argument("fewer computed eigenvalues than reference values");
    EigenvalueMatch out;
    std::vector<bool> used(computed.size(), false);
    double total = 0.0;
    for (const auto& ref : reference) {
        std::size_t best = computed.size();
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < computed.size(); ++c) {
            if (used[c]) continue;
            const double dist = std::norm(computed[c] - ref);
            if (dist < best_d) {
                best_d = dist;
                best = c;
            }
        }
        used[best] = true;
        out.pairing.push_back(best);
        total += best_d;
    }
    out.mse = reference.empty() ? 0.0 : total / static_cast<double>(reference.size());
    return out;
}

std::vector<Eigen::VectorXd> predict(const KoopmanMatrix& k, const Eigen::VectorXd& v0, std::size_t steps) {
    if (v0.size() != k.d.cols()) throw std::invalid_argument("initial vector length does not match operator size");
    std::vector<Eigen::VectorXd> out;
    out.reserve(steps + 1);
    out.push_back(v0);
    for (std::size_t l = 0; l < steps; ++l) out.push_back(k.d * out.back());
    return out;
}

SnapshotMatrices draw_snapshots(const ObservableBank& bank, const MeasureSampler& sampler, const RdsModel& model,
                                std::size_t m, std::uint64_t seed) {
    if (m == 0) throw std::invalid_argument("need at least one snapshot pair");
    const auto n = static_cast<Eigen::Index>(bank.size());
    SnapshotMatrices snap;
    snap.psi.resize(n, static_cast<Eigen::Index>(m));
    snap.phi.resize(n, static_cast<Eigen::Index>(m));
    parallel_for(m, [&](std::size_t j) {
        const EmpiricalMeasure pi = sampler.draw(derive_seed(seed, kDrawTag, 0), j);
        const EmpiricalMeasure mu = evolve_measure(pi, model, model.snapshot_dt(), derive_seed(seed, kEvolveTag, j));
        snap.psi.col(static_cast<Eigen::Index>(j)) = bank.evaluate(pi);
        snap.phi.col(static_cast<Eigen::Index>(j)) = bank.evaluate(mu);
    });
    snap.bank_labels = bank.labels();
    snap.dt = model.snapshot_dt();
    return snap;
}

GalerkinOracle galerkin_oracle_from(const SnapshotMatrices& snap, const MeasureSampler& sampler,
                                    double max_condition) {
    const double m = static_cast<double>(snap.psi.cols());
    GalerkinOracle o;
    o.sampler = sampler;
    o.m_oracle = static_cast<std::size_t>(snap.psi.cols());
    Eigen::MatrixXd g = snap.psi * snap.psi.transpose() / m;
    o.g = 0.5 * (g + g.transpose());
    o.y = snap.phi * snap.psi.transpose() / m;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(o.g, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    const double lmax = eig.eigenvalues().maxCoeff();
    o.condition = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
    if (!(o.condition <= max_condition))
        throw IllConditionedError("Gram matrix is ill-conditioned (condition estimate " +
                                      io::format_double(o.condition) + ")",
                                  o.condition);
    // D G = Y with G symmetric  <=>  G D^T = Y^T.
    o.d_infinity = o.g.ldlt().solve(o.y.transpose()).transpose();
    return o;
}

GalerkinOracle build_galerkin_oracle(const ObservableBank& bank, const MeasureSampler& sampler,
                                     const RdsModel& model, std::size_t m_oracle, std::uint64_t seed,
                                     double max_condition) {
    if (m_oracle < 20 * bank.size())
        throw std::invalid_argument("m_oracle must be at least 20 times the bank size");
    return galerkin_oracle_from(draw_snapshots(bank, sampler, model, m_oracle, seed), sampler, max_condition);
}

HilbertSchmidtResidual hilbert_schmidt_residual(const KoopmanMatrix& k, const GalerkinOracle& oracle) {
    if (k.d.rows() != oracle.d_infinity.rows() || k.d.cols() != oracle.d_infinity.cols())
        throw std::invalid_argument("operator and oracle shapes differ");
    const Eigen::MatrixXd diff = oracle.d_infinity - k.d;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(oracle.g);
    if (!lu.isInvertible()) throw IllConditionedError("Gram matrix is singular", std::numeric_limits<double>::infinity());
    HilbertSchmidtResidual r;
    r.frobenius = diff.norm();
    r.weighted = (lu.solve(diff) * oracle.g).norm();
    return r;
}

namespace {

nlohmann::json report_json(const FitReport& r) {
    return {{"residual_fro", r.residual_fro}, {"rank", r.rank}, {"svd_cutoff", r.svd_cutoff}};
}

}  // namespace

void save_operator(const std::filesystem::path& csv_path, const KoopmanMatrix& k, const nlohmann::json& extra) {
    io::write_matrix_csv(csv_path, k.d);
    nlohmann::json meta = extra.is_object() ? extra : nlohmann::json::object();
    meta["dt"] = k.dt;
    meta["bank_labels"] = k.bank_labels;
    meta["fit_report"] = report_json(k.fit_report);
    meta["rows"] = k.d.rows();
    auto side = csv_path;
    side.replace_extension(".json");
    io::write_text(side, meta.dump(2) + "\n");
}

KoopmanMatrix load_operator(const std::filesystem::path& csv_path, nlohmann::json* sidecar) {
    KoopmanMatrix k;
    k.d = io::read_matrix_csv(csv_path);
    if (k.d.rows() != k.d.cols()) throw FormatError(csv_path.string() + ": operator matrix is not square");
    auto side = csv_path;
    side.replace_extension(".json");
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(io::read_text(side));
        k.dt = meta.at("dt");
        k.bank_labels = meta.at("bank_labels").get<std::vector<std::string>>();
        const auto& r = meta.at("fit_report");
        k.fit_report = {r.at("residual_fro"), r.at("rank"), r.at("svd_cutoff")};
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(side.string() + ": " + e.what());
    }
    if (static_cast<Eigen::Index>(k.bank_labels.size()) != k.d.rows())
        throw FormatError(side.string() + ": label count does not match operator size");
    if (sidecar) *sidecar = std::move(meta);
    return k;
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> row(static_cast<std::size_t>(m.cols()));
        for (Eigen::Index j = 0; j < m.cols(); ++j) row[static_cast<std::size_t>(j)] = m(i, j);
        rows.push_back(row);
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    const auto r = static_cast<Eigen::Index>(rows.size());
    const auto c = rows.empty() ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.front().size());
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != c)
            throw FormatError("ragged matrix row " + std::to_string(i));
        for (Eigen::Index k = 0; k < c; ++k) m(i, k) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    }
    return m;
}

}  // namespace

void save_snapshots(const std::filesystem::path& json_path, const SnapshotMatrices& snap, const nlohmann::json& extra) {
    nlohmann::json j = extra.is_object() ? extra : nlohmann::json::object();
    j["dt"] = snap.dt;
    j["bank_labels"] = snap.bank_labels;
    j["psi"] = matrix_json(snap.psi);
    j["phi"] = matrix_json(snap.phi);
    io::write_text(json_path, j.dump() + "\n");
}

SnapshotMatrices load_snapshots(const std::filesystem::path& json_path, nlohmann::json* extra) {
    SnapshotMatrices snap;
    try {
        auto j = nlohmann::json::parse(io::read_text(json_path));
        snap.dt = j.at("dt");
        snap.bank_labels = j.at("bank_labels").get<std::vector<std::string>>();
        snap.psi = matrix_from_json(j.at("psi"));
        snap.phi = matrix_from_json(j.at("phi"));
        if (extra) {
            j.erase("psi");
            j.erase("phi");
            *extra = std::move(j);
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(json_path.string() + ": " + e.what());
    }
    if (snap.psi.rows() != snap.phi.rows() || snap.psi.cols() != snap.phi.cols())
        throw FormatError(json_path.string() + ": psi and phi shapes differ");
    return snap;
}

void write_spectrum_csv(const std::filesystem::path& path, const SpectralDecomposition& s) {
    std::ostringstream out;
    out << "index,re,im,modulus\n";
    for (Eigen::Index k = 0; k < s.eigenvalues.size(); ++k) {
        const auto l = s.eigenvalues[k];
        out << k << ',' << io::format_double(l.real()) << ',' << io::format_double(l.imag()) << ','
            << io::format_double(std::abs(l)) << '\n';
    }
    io::write_text(path, out.str());
}

}  // namespace dko
