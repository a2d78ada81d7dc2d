#include <doctest.h>

#include <gddpc/gddpc.hpp>

#include "support.hpp"

#include <cmath>

using namespace gddpc;

TEST_SUITE("oracle_mpc") {

TEST_CASE("predictor update with zero innovation ignores K") {
    const SystemModel s = support::toy_plant();
    KalmanState ks{Vec::Constant(1, 2.0)};
    const Vec u = Vec::Constant(1, 0.5);
    const Vec y = s.C * ks.x_hat + s.D * u;  // exactly the predicted output
    const KalmanState next = kalman_step(s, ks, u, y);
    CHECK(next.x_hat[0] == doctest::Approx(0.5 * 2.0 + 0.5));
}

TEST_CASE("predictor tracks the true state exactly on innovation data") {
    const SystemModel s = support::benchmark_plant_innovation();
    GaussianStream g(12);
    const Index L = 60;
    const Mat u = g.normal_mat(1, L);
    const Mat e = std::sqrt(s.sigma2) * g.normal_mat(1, L);
    const SimResult sim = simulate(s, u, e);
    KalmanState ks{Vec::Zero(4)};
    for (Index t = 0; t < L; ++t) {
        CHECK((ks.x_hat - sim.x.col(t)).cwiseAbs().maxCoeff() <= 1e-12);
        ks = kalman_step(s, ks, u.col(t), sim.y.col(t));
    }
}

TEST_CASE("rest state and zero reference need no input") {
    const SystemModel s = support::benchmark_plant();
    const MpcSolution sol =
        solve_mpc(s, Vec::Zero(4), Vec::Zero(10), Mat::Identity(1, 1), Mat::Identity(1, 1));
    CHECK(sol.u_f.norm() == 0.0);
    CHECK(sol.y_hat.norm() == 0.0);
}

TEST_CASE("static scalar one-step by hand") {
    // y = u, cost 2000 (y - 1)^2 + 0.01 u^2: minimizer 2000 / 2000.01
    const SystemModel s = make_siso_from_tf({1}, {1}, 1.0);
    const Vec y_r = Vec::Constant(1, 1.0);
    const MpcSolution sol =
        solve_mpc(s, Vec(), y_r, Mat::Constant(1, 1, 2000.0), Mat::Constant(1, 1, 0.01));
    CHECK(sol.u_f[0] == doctest::Approx(2000.0 / 2000.01).epsilon(1e-12));
    CHECK(sol.y_hat[0] == doctest::Approx(sol.u_f[0]));
}

TEST_CASE("input box clamps the static example") {
    const SystemModel s = make_siso_from_tf({1}, {1}, 1.0);
    MpcBoxes boxes;
    boxes.u_hi = Vec::Constant(1, 0.5);
    const MpcSolution sol = solve_mpc(s, Vec(), Vec::Constant(1, 1.0),
                                      Mat::Constant(1, 1, 2000.0), Mat::Constant(1, 1, 0.01), boxes);
    CHECK(sol.u_f[0] == doctest::Approx(0.5));
}

TEST_CASE("conflicting output boxes are reported as infeasible") {
    const SystemModel s = make_siso_from_tf({1}, {1}, 1.0);
    MpcBoxes boxes;
    boxes.y_hi = Vec::Constant(1, -1.0);
    boxes.y_lo = Vec::Constant(1, 1.0);
    CHECK_THROWS_AS(solve_mpc(s, Vec(), Vec::Constant(1, 0.0), Mat::Identity(1, 1),
                              Mat::Identity(1, 1), boxes),
                    NumericError);
}

TEST_CASE("lift matrices agree with the markov parameters") {
    const SystemModel s = support::benchmark_plant();
    const Index T = 8;
    const Mat hd = toeplitz_hd(s, T);
    for (Index i = 0; i < T; ++i)
        for (Index j = 0; j <= i; ++j) {
            const double want = markov_parameter(s, i - j)(0, 0);
            CHECK(hd(i, j) == doctest::Approx(want).epsilon(1e-10));
        }
    // strictly upper part is zero
    for (Index i = 0; i < T; ++i)
        for (Index j = i + 1; j < T; ++j) CHECK(hd(i, j) == 0.0);

    const Mat gamma = extended_observability(s, T);
    Mat ca = s.C;
    for (Index i = 0; i < T; ++i) {
        CHECK((gamma.row(i) - ca.row(0)).cwiseAbs().maxCoeff() <= 1e-12);
        ca = ca * s.A;
    }
}

TEST_CASE("data-driven and model-based one-step plans coincide on clean data") {
    const SystemModel s = support::benchmark_plant();
    const Index rho = 4, T = 20;
    const DataSet d = generate_dataset(s, 250, 1.0, NoiseMode::None, 13.0, 1);
    const LqFactors f = lq_decompose(build_bundle(d, rho, T));

    GaussianStream g(33);
    const Mat u_hist = g.normal_mat(1, rho);
    Mat u_pad(1, rho + 1);
    u_pad << u_hist, Mat::Zero(1, 1);
    const SimResult sim = simulate(s, u_pad, Mat::Zero(1, rho + 1));
    const Vec z_init = make_init_window(u_hist, sim.y.leftCols(rho));
    const Vec x_end = sim.x.col(rho);

    const Vec y_r = g.normal_vec(T);
    const ControlWeights w{Mat::Constant(1, 1, 2000.0), Mat::Constant(1, 1, 0.01)};
    const Vec g1 = gamma1_star(f.L11, z_init);
    const StepSolution ddpc = solve_unregularized(f, g1, y_r, w);
    const MpcSolution mpc = solve_mpc(s, x_end, y_r, w.Q, w.R);

    const double scale = mpc.u_f.norm();
    CHECK((ddpc.u_f - mpc.u_f).norm() <= 1e-6 * scale);
    CHECK((ddpc.y_hat_f - mpc.y_hat).norm() <= 1e-6 * (1.0 + mpc.y_hat.norm()));
}

TEST_CASE("riccati gain is a fixed point with a stable predictor") {
    const SystemModel s = support::benchmark_plant();
    const Mat qw = 0.01 * Mat::Identity(4, 4);
    const Mat rv = Mat::Identity(1, 1);
    const RiccatiResult rr = riccati_kalman_gain(s.A, s.C, qw, rv);
    const Mat S = s.C * rr.P * s.C.transpose() + rv;
    const Mat K = s.A * rr.P * s.C.transpose() * S.inverse();
    const Mat P_next = s.A * rr.P * s.A.transpose() + qw - K * S * K.transpose();
    CHECK((P_next - rr.P).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + rr.P.cwiseAbs().maxCoeff()));
    CHECK((K - rr.K).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(spectral_radius(s.A - rr.K * s.C) < 1.0);
    CHECK(rr.sigma_e(0, 0) >= 1.0);  // innovation variance at least the measurement noise
}

}  // TEST_SUITE
