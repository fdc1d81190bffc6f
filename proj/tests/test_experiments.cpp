#include "doctest.h"
#include "dko/experiments.hpp"
#include "dko/reference.hpp"
#include "dko/stats.hpp"

#include <cmath>
#include <complex>

using namespace dko;
using namespace dko::experiments;

namespace {

ExperimentConfig small_circle() {
    ExperimentConfig c;
    c.experiment = "circle_spectrum";
    c.bank.n = 20;
    c.data.m = 20;
    c.data.K = 200;
    c.data.N = 4000;
    c.repeats = 3;
    c.n_eigs = 3;
    c.seed = 17;
    return c;
}

ExperimentConfig small_sde() {
    ExperimentConfig c;
    c.experiment = "sde_predict";
    c.model.kind = "sde";
    c.model.snapshot_dt = 0.1;
    c.bank.kind = "gaussian";
    c.bank.centers = 5;
    c.data.m = 30;
    c.data.K = 200;
    c.prediction.t_pred = 0.5;
    c.prediction.grid_points = 11;
    c.prediction.n_reference_samples = 50;
    c.repeats = 3;
    c.seed = 5;
    return c;
}

}  // namespace

TEST_CASE("rotation reference eigenvalues") {
    const auto ev = rotation_eigenvalues(0.5, 0.5, 6);
    CHECK(ev[0].real() == doctest::Approx(0.841470984807897));
    CHECK(ev[0].imag() == doctest::Approx(0.459697694131860));
    for (std::size_t k = 1; k <= 6; ++k) {
        const double kk = double(k);
        const std::complex<double> i(0, 1);
        const auto closed = (i - i * std::exp(i * kk)) / kk;
        CHECK(std::abs(ev[k - 1] - closed) < 1e-14);
        CHECK(std::abs(ev[k - 1]) < 1.0);
    }
    CHECK(std::abs(rotation_eigenvalues(0.3, 0.0, 1)[0]) == doctest::Approx(1.0));
}

TEST_CASE("repeat seeds are distinct and count independent") {
    CHECK(repeat_seed(1, 0) != repeat_seed(1, 1));
    CHECK(repeat_seed(1, 0) != repeat_seed(2, 0));
    CHECK(repeat_seed(9, 3) == repeat_seed(9, 3));
}

TEST_CASE("circle spectrum is deterministic and sane") {
    const auto cfg = small_circle();
    const auto a = run_circle_spectrum(cfg);
    const auto b = run_circle_spectrum(cfg);
    CHECK(a.mse_dko == b.mse_dko);
    CHECK(a.mse_sko == b.mse_sko);
    CHECK(a.mse_dko.size() == 3);
    CHECK(a.reference.size() == 3);
    CHECK(a.eigenfunctions.size() == 2);
    CHECK(a.eigenfunctions[0].rows.size() == 20);
    for (double v : a.mse_dko) CHECK(std::isfinite(v));
    // more repeats keep the earlier ones
    auto more = cfg;
    more.repeats = 4;
    const auto c = run_circle_spectrum(more);
    for (std::size_t r = 0; r < 3; ++r) CHECK(c.mse_dko[r] == a.mse_dko[r]);
}

TEST_CASE("sensitivity sweep") {
    auto cfg = small_circle();
    cfg.sweep.n_values = {1, 100, 400};
    const auto s = run_sensitivity(cfg);
    REQUIRE(s.sko.times.size() == 3);
    CHECK(s.sko.times[0] == 1.0);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(std::isfinite(s.sko.mean[i]));
        CHECK(std::isfinite(s.dko.mean[i]));
        CHECK(s.dko.stderr_[i] >= 0.0);
    }
    cfg.sweep.n_values = {1, 10};
    CHECK_THROWS_AS(run_sensitivity(cfg), std::invalid_argument);
}

TEST_CASE("noise sweep at zero noise equals the sensitivity endpoint") {
    auto cfg = small_circle();
    cfg.sweep.n_values = {25, 400};
    cfg.data.N = 400;
    cfg.data.m = 20;
    cfg.data.K = 20;
    cfg.sweep.sigmas = {0.0, 0.5};
    const auto s = run_sensitivity(cfg);
    const auto n = run_noise_sweep(cfg);
    CHECK(n.sko.mean[0] == s.sko.mean[1]);
    CHECK(n.dko.mean[0] == s.dko.mean[1]);
    cfg.sweep.sigmas = {-0.1};
    CHECK_THROWS_AS(run_noise_sweep(cfg), std::invalid_argument);
}

TEST_CASE("prediction curves") {
    const auto cfg = small_sde();
    const auto r = run_sde_predict(cfg);
    REQUIRE(r.curve.times.size() == 5);
    CHECK(r.curve.times[0] == doctest::Approx(0.1));
    CHECK(r.curve.times[4] == doctest::Approx(0.5));
    for (std::size_t l = 0; l < 5; ++l) {
        std::vector<double> col;
        for (const auto& rep : r.per_repeat) col.push_back(rep[l]);
        CHECK(r.curve.mean[l] == doctest::Approx(stats::mean(col)));
        CHECK(r.curve.stderr_[l] == doctest::Approx(stats::sample_std(col) / std::sqrt(3.0)));
        CHECK(r.curve.mean[l] >= 0.0);
    }
    CHECK(run_sde_predict(cfg).per_repeat == r.per_repeat);
    auto var = cfg;
    var.experiment = "variance_predict";
    var.bank.kind = "pq";
    var.bank.centers = 3;
    const auto v = run_variance_predict(var);
    for (double x : v.curve.mean) CHECK(std::isfinite(x));
    auto rot = cfg;
    rot.model.kind = "rotation";
    CHECK_THROWS_AS(run_sde_predict(rot), std::invalid_argument);
}

TEST_CASE("prediction grid quadrature converges") {
    // integral over the grid of the squared OU mean of a Gaussian bump
    auto integral = [](std::size_t points) {
        std::vector<double> x, y;
        for (std::size_t g = 0; g < points; ++g) {
            x.push_back(-2.0 + 4.0 * double(g) / double(points - 1));
            const double m = reference::ou_gaussian_mean(x.back(), 1.0, 0.5);
            y.push_back(m * m);
        }
        return stats::trapezoid(x, y);
    };
    const double coarse = integral(101), fine = integral(201);
    CHECK(std::fabs(coarse - fine) / fine < 0.05);
}

TEST_CASE("training snapshots") {
    auto cfg = small_sde();
    const auto model = cfg.model.build();
    const auto bank = cfg.bank.build();
    const auto dko = training_snapshots(cfg, model, bank, 3);
    CHECK(dko.psi.cols() == 30);
    CHECK(dko.psi.rows() == 5);
    CHECK(dko.phi.block(0, 0, 5, 29) == dko.psi.block(0, 1, 5, 29));
    cfg.data.mode = "sko";
    cfg.data.N = 50;
    const auto sko = training_snapshots(cfg, model, bank, 3);
    CHECK(sko.psi.cols() == 50);
    const auto circle = small_circle();
    const auto cs = training_snapshots(circle, circle.model.build(), circle.bank.build(), 3);
    CHECK(cs.psi.cols() == 20);
    for (Eigen::Index j = 0; j < cs.psi.cols(); ++j) CHECK(cs.psi.col(j).sum() == doctest::Approx(1.0));
}

TEST_CASE("convergence decreases with m") {
    ExperimentConfig cfg;
    cfg.experiment = "convergence";
    cfg.bank.n = 10;
    cfg.convergence.m_grid = {100, 400, 1600};
    cfg.convergence.m_oracle = 20000;
    cfg.repeats = 3;
    cfg.seed = 4;
    const auto r = run_convergence(cfg);
    REQUIRE(r.rows.size() == 3);
    CHECK(r.rows[2].frobenius < r.rows[0].frobenius);
    CHECK(r.slope < -0.2);
    CHECK_FALSE(r.oracle_budget_ok);
    CHECK(r.oracle_condition >= 1.0);
}

TEST_CASE("grid forecast on the toy field") {
    ExperimentConfig cfg;
    cfg.experiment = "grid_forecast";
    cfg.grid.train_frames = 60;
    cfg.grid.horizon = 5;
    cfg.seed = 2;
    const auto r = run_grid_forecast(cfg);
    CHECK(r.patches == 100);
    CHECK(r.forecast.errors_per_step.size() == 5);
    CHECK(std::abs(r.spectrum.eigenvalues[0]) <= 1.0 + 1e-6);
    for (double e : r.forecast.errors_per_step) CHECK(e < 0.5);
    cfg.grid.input = "/nonexistent/dir";
    CHECK_THROWS(run_grid_forecast(cfg));
}

TEST_CASE("validation") {
    auto cfg = small_circle();
    cfg.repeats = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_circle();
    cfg.data.K = 0;
    CHECK_THROWS_AS(run_circle_spectrum(cfg), std::invalid_argument);
}
