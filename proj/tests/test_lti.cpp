#include <doctest.h>

#include <gddpc/gddpc.hpp>

#include "support.hpp"

using namespace gddpc;
using support::rel_err;

TEST_SUITE("lti") {

TEST_CASE("pure feedthrough") {
    SystemModel s;
    s.A = Mat::Zero(1, 1);
    s.B = Mat::Zero(1, 1);
    s.C = Mat::Zero(1, 1);
    s.D = Mat::Constant(1, 1, 1.0);
    s.K = Mat::Zero(1, 1);
    Mat u(1, 3);
    u << 1, 2, 3;
    const SimResult r = simulate(s, u, Mat::Zero(1, 3));
    CHECK(r.y(0, 0) == 1.0);
    CHECK(r.y(0, 1) == 2.0);
    CHECK(r.y(0, 2) == 3.0);
}

TEST_CASE("zero innovations make K irrelevant") {
    SystemModel s = support::toy_plant();
    Mat u(1, 10);
    for (Index t = 0; t < 10; ++t) u(0, t) = std::sin(0.7 * static_cast<double>(t));
    const Mat e = Mat::Zero(1, 10);
    const Mat y_with_k = simulate(s, u, e).y;
    s.K = Mat::Constant(1, 1, 5.0);
    const Mat y_other_k = simulate(s, u, e).y;
    CHECK((y_with_k - y_other_k).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hand recursion, scalar A=0.5") {
    SystemModel s;
    s.A = Mat::Constant(1, 1, 0.5);
    s.B = Mat::Constant(1, 1, 1.0);
    s.C = Mat::Constant(1, 1, 1.0);
    s.D = Mat::Zero(1, 1);
    s.K = Mat::Zero(1, 1);
    Mat u(1, 3);
    u << 1, 0, 0;
    const SimResult r = simulate(s, u, Mat::Zero(1, 3));
    CHECK(r.y(0, 0) == doctest::Approx(0.0));
    CHECK(r.y(0, 1) == doctest::Approx(1.0));
    CHECK(r.y(0, 2) == doctest::Approx(0.5));
}

TEST_CASE("simulation is linear") {
    const SystemModel s = support::benchmark_plant();
    GaussianStream g(3);
    const Index L = 40;
    const Mat u1 = g.normal_mat(1, L), u2 = g.normal_mat(1, L);
    const Mat e1 = g.normal_mat(1, L), e2 = g.normal_mat(1, L);
    const Vec x1 = g.normal_vec(4), x2 = g.normal_vec(4);
    const double a = 1.7, b = -0.3;
    const Mat lhs = simulate(s, a * u1 + b * u2, a * e1 + b * e2, a * x1 + b * x2).y;
    const Mat rhs = a * simulate(s, u1, e1, x1).y + b * simulate(s, u2, e2, x2).y;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * rhs.cwiseAbs().maxCoeff());
}

TEST_CASE("markov parameters match the impulse response") {
    const SystemModel s = support::benchmark_plant();
    const Index L = 20;
    Mat u = Mat::Zero(1, L);
    u(0, 0) = 1.0;
    const Mat y = simulate(s, u, Mat::Zero(1, L)).y;
    double scale = y.cwiseAbs().maxCoeff();
    for (Index k = 0; k < L; ++k)
        CHECK(std::abs(markov_parameter(s, k)(0, 0) - y(0, k)) <= 1e-10 * scale);
}

TEST_CASE("simulate rejects dimension mismatches") {
    const SystemModel s = support::toy_plant();
    CHECK_THROWS_AS(simulate(s, Mat::Zero(2, 5), Mat::Zero(1, 5)), InputError);
    CHECK_THROWS_AS(simulate(s, Mat::Zero(1, 5), Mat::Zero(1, 4)), InputError);
    CHECK_THROWS_AS(simulate(s, Mat::Zero(1, 5), Mat::Zero(1, 5), Vec::Ones(3)), InputError);
}

TEST_CASE("dataset generation: noise disabled reproduces the noise-free run") {
    const SystemModel s = support::benchmark_plant();
    const DataSet d = generate_dataset(s, 100, 1.0, NoiseMode::None, 13.0, 42);
    const Mat y_free = simulate(s, d.u, Mat::Zero(1, 100)).y;
    CHECK((d.y - y_free).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dataset generation: 0 dB means equal powers") {
    const SystemModel s = support::benchmark_plant();
    const Index N = 10000;
    const DataSet noisy = generate_dataset(s, N, 1.0, NoiseMode::AdditiveOutput, 0.0, 9);
    const DataSet clean = generate_dataset(s, N, 1.0, NoiseMode::None, 0.0, 9);
    const double var_noise = row_variance(noisy.y - clean.y)[0];
    const double var_free = row_variance(clean.y)[0];
    CHECK(var_noise / var_free > 0.9);
    CHECK(var_noise / var_free < 1.1);
}

TEST_CASE("dataset generation is deterministic in the seed") {
    const SystemModel s = support::toy_plant();
    const DataSet a = generate_dataset(s, 200, 1.0, NoiseMode::Innovation, 0.0, 11);
    const DataSet b = generate_dataset(s, 200, 1.0, NoiseMode::Innovation, 0.0, 11);
    CHECK((a.u - b.u).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0.0);
    const DataSet c = generate_dataset(s, 200, 1.0, NoiseMode::Innovation, 0.0, 12);
    CHECK((a.y - c.y).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("dataset generation rejects bad parameters") {
    const SystemModel s = support::toy_plant();
    CHECK_THROWS_AS(generate_dataset(s, 0, 1.0, NoiseMode::None, 13.0, 1), InputError);
    CHECK_THROWS_AS(generate_dataset(s, 10, 0.0, NoiseMode::None, 13.0, 1), InputError);
    CHECK_THROWS_AS(generate_dataset(s, 10, -1.0, NoiseMode::None, 13.0, 1), InputError);
}

TEST_CASE("first-order transfer function realization") {
    const SystemModel s = make_siso_from_tf({0, 1}, {1, -0.5}, 1.0);
    CHECK(s.n() == 1);
    CHECK(s.A(0, 0) == doctest::Approx(0.5));
    // impulse response 0, 1, 0.5, 0.25, ...
    Mat u = Mat::Zero(1, 5);
    u(0, 0) = 1.0;
    const Mat y = simulate(s, u, Mat::Zero(1, 5)).y;
    CHECK(y(0, 0) == doctest::Approx(0.0));
    CHECK(y(0, 1) == doctest::Approx(1.0));
    CHECK(y(0, 2) == doctest::Approx(0.5));
    CHECK(y(0, 3) == doctest::Approx(0.25));
}

TEST_CASE("benchmark realization: order, delay, leading response") {
    const SystemModel s = support::benchmark_plant();
    CHECK(s.n() == 4);
    CHECK(markov_parameter(s, 0)(0, 0) == doctest::Approx(0.0));
    CHECK(markov_parameter(s, 1)(0, 0) == doctest::Approx(0.0));
    CHECK(markov_parameter(s, 2)(0, 0) == doctest::Approx(0.0));
    CHECK(markov_parameter(s, 3)(0, 0) == doctest::Approx(0.28261));
    const SystemChecks chk = check_system(s);
    CHECK(chk.reachable);
    CHECK(chk.observable);
    CHECK(chk.rho_A < 1.0);
}

TEST_CASE("identity feedthrough with no dynamics") {
    const SystemModel s = make_siso_from_tf({1}, {1}, 1.0);
    CHECK(s.n() == 0);
    Mat u(1, 4);
    u << 2, -1, 0.5, 3;
    const Mat y = simulate(s, u, Mat::Zero(1, 4)).y;
    CHECK((y - u).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("transfer function rejections") {
    // common factor (1 - 0.5 q^-1) in both: non-minimal
    CHECK_THROWS_AS(make_siso_from_tf({1, -0.5}, {1, -1.0, 0.25}, 1.0), ConfigError);
    // pole outside the unit circle
    CHECK_THROWS_AS(make_siso_from_tf({0, 1}, {1, -1.5}, 1.0), ConfigError);
    // degenerate denominator
    CHECK_THROWS_AS(make_siso_from_tf({1}, {0, 1}, 1.0), ConfigError);
}

}  // TEST_SUITE
