#pragma once

#include "gddpc/lq.hpp"
#include "gddpc/types.hpp"

#include <cmath>
#include <cstdlib>
#include <string>
#include <utility>
#include <vector>

namespace gddpc {

// ---------------------------------------------------------------------------
// gamma coordinates
//
//   [Zp]      [L11  0    0 ] [g1]
//   [u_f]  =  [L21  L22  0 ] [g2]
//   [y_hat]   [L31  L32  L33] [g3]
//
// g1 is pinned by the measured past, g2 parametrizes the input plan, g3 the
// stochastic slack.
// ---------------------------------------------------------------------------

struct GammaVector {
    Vec g1, g2, g3;

    Vec g12() const {
        Vec v(g1.size() + g2.size());
        v << g1, g2;
        return v;
    }
};

/// z_init = [z(t-rho); ...; z(t-1)], oldest first, z = [u; y].
/// u_hist/y_hist hold the last rho samples in columns, oldest first.
inline Vec make_init_window(const Mat& u_hist, const Mat& y_hist) {
    require(u_hist.cols() == y_hist.cols(), "make_init_window: history lengths differ");
    const Index rho = u_hist.cols(), m = u_hist.rows(), p = y_hist.rows();
    Vec z((m + p) * rho);
    for (Index k = 0; k < rho; ++k) {
        z.segment(k * (m + p), m) = u_hist.col(k);
        z.segment(k * (m + p) + m, p) = y_hist.col(k);
    }
    return z;
}

/// gamma1* = L11^{-1} z_init by forward substitution.
/// Singular L11 means the past window cannot pin the initial condition
/// (insufficiently exciting data): hard error.
inline Vec gamma1_star(const Mat& L11, const Vec& z_init, double tol = 1e-12) {
    require(L11.rows() == L11.cols() && L11.rows() == z_init.size(),
            "gamma1_star: dimension mismatch");
    const double dmax = L11.diagonal().cwiseAbs().maxCoeff();
    const double dmin = L11.diagonal().cwiseAbs().minCoeff();
    if (dmin <= tol * dmax)
        throw NumericError("gamma1_star: L11 singular at tolerance (data insufficiently exciting)");
    return L11.triangularView<Eigen::Lower>().solve(z_init);
}

/// u_f = L21 g1 + L22 g2;  y_hat = L31 g1 + L32 g2 + L33 g3.
/// With g3 = 0 the output is the noise-free-optimal predictor y_hat0.
inline std::pair<Vec, Vec> predict(const LqFactors& f, const GammaVector& g) {
    require(g.g1.size() == f.r1() && g.g2.size() == f.r2() && g.g3.size() == f.r3(),
            "predict: gamma dimensions do not match factors");
    Vec u_f = f.L21 * g.g1 + f.L22 * g.g2;
    Vec y_hat = f.L31 * g.g1 + f.L32 * g.g2 + f.L33 * g.g3;
    return {std::move(u_f), std::move(y_hat)};
}

// ---------------------------------------------------------------------------
// Prediction-error statistics
// ---------------------------------------------------------------------------

/// Asymptotic scalar variance of the predictor error e~_f:
/// Trace[Var[sqrt(N) e~_f]] -> T sigma^2 ||g12||^2, so Var of e~_f itself
/// carries 1/N.
inline double variance_trace_bound(const GammaVector& g, Index T, Index N, double sigma2_hat) {
    require(N > 0, "variance_trace_bound: N must be positive");
    return static_cast<double>(T) * sigma2_hat * g.g12().squaredNorm() / static_cast<double>(N);
}

/// Shift matrix J_k of size T (ones on the k-th superdiagonal, k may be
/// negative), lifted to block form with identity p-blocks.
inline Mat shift_matrix(Index T, Index p, Index k) {
    Mat j = Mat::Zero(p * T, p * T);
    for (Index h = 0; h < T; ++h) {
        const Index kk = h + k;
        if (kk >= 0 && kk < T)
            j.block(h * p, kk * p, p, p).setIdentity();
    }
    return j;
}

/// Sample covariance Sigma_q(k) = (1/(N-|k|)) sum_t q(t+k) q(t)', with
/// q(t) = sqrt(N) * t-th column of [Q1; Q2]. In-sample Sigma_q(0) = I exactly.
inline Mat estimate_sigma_q(const LqFactors& f, Index k) {
    const Index N = f.N;
    require(std::abs(k) < N, "estimate_sigma_q: |k| must be below N");
    require(std::abs(k) <= f.T, "estimate_sigma_q: |k| must be at most T");
    const Index r = f.r1() + f.r2();
    Mat Qs(r, N);
    Qs << f.Q1, f.Q2;  // rows orthonormal; q(t) = sqrt(N) * column
    const Index a = std::abs(k);
    const double scale = static_cast<double>(N) / static_cast<double>(N - a);
    if (k >= 0)
        return scale * Qs.rightCols(N - a) * Qs.leftCols(N - a).transpose();
    return scale * Qs.leftCols(N - a) * Qs.rightCols(N - a).transpose();
}

///// Asymptotic Var[sqrt(N) e~_f]: sum over lags k = -T..T of
/// sigma^2 * (N-|k|)/N * (g12' Sigma_q(k)' g12) * J_k (block-lifted).
/// sigma_q_list[k + T] must hold Sigma_q(k).
inline Mat prop1_variance(const Vec& g12, double sigma2, const std::vector<Mat>& sigma_q_list,
                          Index T, Index N, Index p) {
    require(static_cast<Index>(sigma_q_list.size()) == 2 * T + 1,
            "prop1_variance: sigma_q_list must cover k = -T..T");
    Mat var = Mat::Zero(p * T, p * T);
    for (Index k = -T; k <= T; ++k) {
        const Mat& sq = sigma_q_list[static_cast<std::size_t>(k + T)];
        require(sq.rows() == g12.size() && sq.cols() == g12.size(),
                "prop1_variance: Sigma_q(" + std::to_string(k) + ") has wrong size");
        const double w = g12.dot(sq.transpose() * g12);
        const double fade = static_cast<double>(N - std::abs(k)) / static_cast<double>(N);
        var += (sigma2 * fade * w) * shift_matrix(T, p, k);
    }
    return var;
}

///// sigma^2 estimate from the leading p x p block of L33 L33': its limit is
/// sigma^2 times the identity (the first block column of H_s is I).
inline double estimate_sigma(const Mat& L33, Index p) {
    require(L33.rows() == L33.cols() && L33.rows() % p == 0, "estimate_sigma: L33 must be pT x pT");
    return L33.topRows(p).squaredNorm() / static_cast<double>(p);
}

/// Slack-norm target of the variance-matching rule: T (||g1||^2 + ||g2||^2) / N.
inline double gamma3_norm_target(const Vec& g1, const Vec& g2, Index T, Index N) {
    require(N > 0, "gamma3_norm_target: N must be positive");
    return static_cast<double>(T) * (g1.squaredNorm() + g2.squaredNorm()) / static_cast<double>(N);
}

}  // namespace gddpc
