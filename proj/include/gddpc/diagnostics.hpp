#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "gddpc/hankel.hpp"
#include "gddpc/lq.hpp"
#include "gddpc/lti.hpp"
#include "gddpc/parallel.hpp"
#include "gddpc/predictor.hpp"
#include "gddpc/rng.hpp"
#include "gddpc/types.hpp"

namespace gddpc {

/// X = A X A^T + Q for rho(A) < 1, by doubling.
inline Mat solve_lyapunov(const Mat& A, const Mat& Q, double tol = 1e-14, int max_iter = 200) {
    require(A.rows() == A.cols() && Q.rows() == A.rows() && Q.cols() == A.cols(),
            "solve_lyapunov: dimension mismatch");
    Mat X = Q;
    Mat Ak = A;
    for (int it = 0; it < max_iter; ++it) {
        const Mat inc = Ak * X * Ak.transpose();
        X += inc;
        if (inc.norm() <= tol * std::max(X.norm(), 1e-300)) return X;
        Ak = (Ak * Ak).eval();
    }
    throw NumericError("solve_lyapunov: no convergence (is rho(A) < 1?)");
}

struct FinitePastResult {
    Vec y_star;  // pT, exact conditional mean of the future outputs
    Vec x_hat;   // filtered state at the end of the past window
    Mat P;       // its covariance
};

/// Conditional mean of y_f given a finite past window and the future inputs,
/// for the stationary process driven by white u ~ N(0, input_variance I) and
/// innovations e ~ N(0, sigma2 I). Time-varying filter with correlated process
/// and measurement noise (both are K e and e), prior = stationary covariance.
inline FinitePastResult finite_past_predictor(const SystemModel& s, double input_variance,
                                              const Mat& u_past, const Mat& y_past, const Vec& u_f,
                                              Index T) {
    const Index n = s.n(), m = s.m(), p = s.p();
    require(u_past.rows() == m && y_past.rows() == p && u_past.cols() == y_past.cols(),
            "finite_past_predictor: window shape mismatch");
    require(u_f.size() == m * T, "finite_past_predictor: u_f must have m*T entries");
    const Index rho = u_past.cols();

    // Inside the window the inputs are observed: the only process noise left
    // is K e. The input drive enters through the stationary prior alone.
    const Mat Qw = s.sigma2 * s.K * s.K.transpose();
    const Mat Rv = s.sigma2 * Mat::Identity(p, p);
    const Mat S = s.sigma2 * s.K;  // E[w v^T]

    Vec x = Vec::Zero(n);
    Mat P = solve_lyapunov(s.A, input_variance * s.B * s.B.transpose() + Qw);
    for (Index t = 0; t < rho; ++t) {
        const Vec innov = y_past.col(t) - s.C * x - s.D * u_past.col(t);
        const Mat Sy = s.C * P * s.C.transpose() + Rv;
        const Mat L = (s.A * P * s.C.transpose() + S) * Sy.inverse();
        x = s.A * x + s.B * u_past.col(t) + L * innov;
        P = s.A * P * s.A.transpose() + Qw - L * Sy * L.transpose();
        P = 0.5 * (P + P.transpose()).eval();
    }

    FinitePastResult out;
    out.x_hat = x;
    out.P = P;
    out.y_star = extended_observability(s, T) * x + toeplitz_hd(s, T) * u_f;
    return out;
}

namespace detail {

inline double median_of(std::vector<double> v) {
    require(!v.empty(), "median_of: empty");
    const size_t h = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + h, v.end());
    double hi = v[h];
    if (v.size() % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + h - 1, v.begin() + h);
    return 0.5 * (v[h - 1] + hi);
}

}  // namespace detail

struct Prop1Config {
    Index n_redraws = 500;
    Index N_data = 10000;
    Index rho = 20;
    Index T = 20;
    double input_variance = 1.0;
    Index sigma_q_redraws = 3;  // redraws averaged for the q-correlation estimate
    uint64_t seed = 1;
    int workers = 1;
};

struct Prop1Result {
    Mat sample_cov;       // covariance of sqrt(N) * e_f across redraws
    Mat predicted;        // lag-weighted innovation variance formula
    double rel_frobenius = 0;
    double trace_sample = 0;
    double trace_predicted = 0;
    double trace_simple = 0;  // p T sigma2 ||g12||^2, the in-sample trace identity
    Vec mean;
    Vec mean_limit;  // 3 sigma / sqrt(n) per component
    bool mean_ok = false;
    Index N = 0;
};

/// Monte-Carlo check of the predictor error variance formula: redraw the data,
/// rebuild the LQ factors, and push a fixed gamma_12 through the future
/// innovation Hankel. Compares the sample covariance of sqrt(N) * e_f against
/// the lag-weighted formula evaluated with the true sigma2.
inline Prop1Result prop1_montecarlo(const SystemModel& sys, const Prop1Config& cfg) {
    const Index m = sys.m(), p = sys.p();
    const Index rho = cfg.rho, T = cfg.T;
    const Index r12 = (m + p) * rho + m * T;
    const Index N = cfg.N_data - T - rho + 1;
    require(N >= (m + p) * rho + (m + p) * T, "prop1_montecarlo: N_data too small");
    require(cfg.n_redraws >= 2, "prop1_montecarlo: need at least 2 redraws");
    const Index n_sq = std::min(cfg.sigma_q_redraws, cfg.n_redraws);

    const double sqrtN = std::sqrt(static_cast<double>(N));
    const double su = std::sqrt(cfg.input_variance);
    const double se = std::sqrt(sys.sigma2);

    // The formula holds for every fixed gamma_12, but the direction decides
    // what the check can resolve: along a generic direction the lag weights
    // nearly vanish, the predicted covariance collapses to a multiple of the
    // identity, and with pT around 20 the sample covariance of a few hundred
    // redraws cannot beat 15 percent Frobenius against it. Project instead
    // onto the most lag-persistent direction of the q process, taken from a
    // pilot dataset the measurement redraws never see: the off-diagonal bands
    // then carry real weight and the redraw budget resolves them.
    Vec g12(r12);
    {
        const uint64_t sp = split_seed(cfg.seed, 0);
        GaussianStream gu(split_seed(sp, 0)), ge(split_seed(sp, 1));
        const Mat u = su * gu.normal_mat(m, cfg.N_data);
        const Mat e = se * ge.normal_mat(p, cfg.N_data);
        const SimResult sim = simulate(sys, u, e);
        DataSet d;
        d.u = u;
        d.y = sim.y;
        const LqFactors f = lq_decompose(build_bundle(d, rho, T));
        const Mat s1 = estimate_sigma_q(f, 1);
        const Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (s1 + s1.transpose()));
        const Index top = std::abs(es.eigenvalues()(0)) > std::abs(es.eigenvalues()(r12 - 1))
                              ? 0
                              : r12 - 1;
        g12 = es.eigenvectors().col(top);
    }

    Mat vs(p * T, cfg.n_redraws);
    std::vector<std::vector<Mat>> sq_parts(static_cast<size_t>(n_sq));

    parallel_for(cfg.n_redraws, cfg.workers, [&](Index r) {
        const uint64_t sr = split_seed(cfg.seed, static_cast<uint64_t>(r) + 1);
        GaussianStream gu(split_seed(sr, 0)), ge(split_seed(sr, 1));
        const Mat u = su * gu.normal_mat(m, cfg.N_data);
        const Mat e = se * ge.normal_mat(p, cfg.N_data);
        const SimResult sim = simulate(sys, u, e);

        DataSet d;
        d.u = u;
        d.y = sim.y;
        const HankelBundle b = build_bundle(d, rho, T);
        const LqFactors f = lq_decompose(b);

        const Vec w = f.Q1.transpose() * g12.head(f.r1()) + f.Q2.transpose() * g12.tail(f.r2());
        const Mat Ef = hankel(e, rho, rho + T - 1, N);
        vs.col(r) = sqrtN * (Ef * w);

        if (r < n_sq) {
            std::vector<Mat>& list = sq_parts[static_cast<size_t>(r)];
            list.reserve(static_cast<size_t>(2 * T + 1));
            for (Index k = -T; k <= T; ++k) list.push_back(estimate_sigma_q(f, k));
        }
    });

    std::vector<Mat> sq(static_cast<size_t>(2 * T + 1), Mat::Zero(r12, r12));
    for (Index r = 0; r < n_sq; ++r)
        for (size_t i = 0; i < sq.size(); ++i) sq[i] += sq_parts[static_cast<size_t>(r)][i];
    for (Mat& s : sq) s /= static_cast<double>(n_sq);

    Prop1Result out;
    out.N = N;
    const double n = static_cast<double>(cfg.n_redraws);
    out.mean = vs.rowwise().mean();
    const Mat centered = vs.colwise() - out.mean;
    out.sample_cov = centered * centered.transpose() / (n - 1.0);
    out.predicted = prop1_variance(g12, sys.sigma2, sq, T, N, p);
    out.rel_frobenius = (out.sample_cov - out.predicted).norm() / out.predicted.norm();
    out.trace_sample = out.sample_cov.trace();
    out.trace_predicted = out.predicted.trace();
    out.trace_simple = static_cast<double>(p * T) * sys.sigma2 * g12.squaredNorm();
    out.mean_limit = 3.0 * (out.sample_cov.diagonal().array() / n).sqrt().matrix();
    out.mean_ok = (out.mean.cwiseAbs().array() <= out.mean_limit.array()).all();
    return out;
}

struct LemmaPoint {
    Index N_data = 0;
    double median_rel_err = 0;
};

/// Relative error of L33 L33^T against sigma2 Hs Hs^T across data lengths,
/// median over independent datasets.
inline std::vector<LemmaPoint> lemma_convergence(const SystemModel& sys, Index rho, Index T,
                                                 double input_variance,
                                                 const std::vector<Index>& lengths, Index n_seeds,
                                                 uint64_t seed, int workers = 1) {
    require(n_seeds >= 1, "lemma_convergence: need at least one seed");
    const Mat Hs = toeplitz_hs(sys, T);
    const Mat target = sys.sigma2 * Hs * Hs.transpose();
    const double tnorm = target.norm();
    require(tnorm > 0, "lemma_convergence: degenerate target");

    std::vector<LemmaPoint> out;
    for (size_t i = 0; i < lengths.size(); ++i) {
        std::vector<double> errs(static_cast<size_t>(n_seeds), 0.0);
        parallel_for(n_seeds, workers, [&](Index j) {
            const uint64_t sj = split_seed(seed, static_cast<uint64_t>(i) * 1000 + 1 + static_cast<uint64_t>(j));
            const DataSet d = generate_dataset(sys, lengths[i], input_variance,
                                               NoiseMode::Innovation, 0.0, sj);
            const LqFactors f = lq_decompose(build_bundle(d, rho, T));
            errs[static_cast<size_t>(j)] = (f.L33 * f.L33.transpose() - target).norm() / tnorm;
        });
        out.push_back({lengths[i], detail::median_of(errs)});
    }
    return out;
}

struct Prop2Config {
    Index n_redraws = 200;
    Index N_data = 10000;
    Index rho = 20;
    Index T = 20;
    double input_variance = 1.0;
    Index burn_in = 500;  // settles the fixed window onto the stationary law
    uint64_t seed = 1;
    int workers = 1;
};

struct Prop2Result {
    double mean_norm2 = 0;   // average ||g3~||^2 across redraws
    double mean_target = 0;  // average T ||g12*||^2 / N
    double ratio = 0;
    Index N = 0;
};

/// Size check for the residual third block: with the initial window and the
/// future input held fixed, the matched g3~ = L33^-1 (y0_hat - y_star) should
/// average to about T ||g12||^2 / N across data redraws.
inline Prop2Result prop2_check(const SystemModel& sys, const Prop2Config& cfg) {
    const Index m = sys.m(), p = sys.p();
    const Index rho = cfg.rho, T = cfg.T;
    const Index N = cfg.N_data - T - rho + 1;
    require(N >= 1, "prop2_check: N_data too small");

    // Fixed window from one stationary run, plus a fixed future input.
    GaussianStream gw(split_seed(cfg.seed, 0));
    const double su = std::sqrt(cfg.input_variance);
    const double se = std::sqrt(sys.sigma2);
    const Index L = cfg.burn_in + rho;
    const Mat u_run = su * gw.normal_mat(m, L);
    const Mat e_run = se * gw.normal_mat(p, L);
    const SimResult sim = simulate(sys, u_run, e_run);
    const Mat u_past = u_run.rightCols(rho);
    const Mat y_past = sim.y.rightCols(rho);
    Vec u_f(m * T);
    for (Index k = 0; k < T; ++k) u_f.segment(k * m, m) = su * gw.normal_vec(m);

    const Vec y_star =
        finite_past_predictor(sys, cfg.input_variance, u_past, y_past, u_f, T).y_star;
    const Vec z_init = make_init_window(u_past, y_past);

    Vec norm2(cfg.n_redraws), target(cfg.n_redraws);
    parallel_for(cfg.n_redraws, cfg.workers, [&](Index r) {
        const uint64_t sr = split_seed(cfg.seed, 1000 + static_cast<uint64_t>(r));
        const DataSet d =
            generate_dataset(sys, cfg.N_data, cfg.input_variance, NoiseMode::Innovation, 0.0, sr);
        const LqFactors f = lq_decompose(build_bundle(d, rho, T));
        const Vec g1 = gamma1_star(f.L11, z_init);
        const Vec g2 = f.L22.triangularView<Eigen::Lower>().solve(u_f - f.L21 * g1);
        const Vec y0 = f.L31 * g1 + f.L32 * g2;
        const Vec g3 = f.L33.triangularView<Eigen::Lower>().solve(y0 - y_star);
        norm2(r) = g3.squaredNorm();
        target(r) = static_cast<double>(T) * (g1.squaredNorm() + g2.squaredNorm()) /
                    static_cast<double>(f.N);
    });

    Prop2Result out;
    out.N = N;
    out.mean_norm2 = norm2.mean();
    out.mean_target = target.mean();
    out.ratio = out.mean_norm2 / out.mean_target;
    return out;
}

}  // namespace gddpc
