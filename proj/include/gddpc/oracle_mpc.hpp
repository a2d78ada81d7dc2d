#pragma once

#include "gddpc/lti.hpp"
#include "gddpc/qp.hpp"
#include "gddpc/types.hpp"

#include <utility>
#include <vector>

namespace gddpc {

// ---------------------------------------------------------------------------
// Model-based benchmark controller: steady-state Kalman predictor (the K of
// the innovation form IS the steady-state gain) plus a condensed-QP MPC over
// the true model.
// ---------------------------------------------------------------------------

struct KalmanState {
    Vec x_hat;
};

/// One predictor update: x^+ = A x + B u + K (y - C x - D u).
inline KalmanState kalman_step(const SystemModel& s, const KalmanState& ks, const Vec& u,
                               const Vec& y) {
    require(ks.x_hat.size() == s.n(), "kalman_step: state dimension mismatch");
    require(u.size() == s.m() && y.size() == s.p(), "kalman_step: input/output dimension mismatch");
    const Vec innov = y - s.C * ks.x_hat - s.D * u;
    return {s.A * ks.x_hat + s.B * u + s.K * innov};
}

struct MpcSolution {
    Vec u_f;    // mT
    Vec y_hat;  // pT, noise-free prediction Gamma x + Hd u_f
    QpStatus status = QpStatus::Optimal;
    int iterations = 0;
};

/// Condensed MPC over the horizon T embedded in y_r's length: predictions
/// y = Gamma x_init + Hd u_f with e = 0, cost 1/2 sum ||y-y_r||_Q^2 + ||u||_R^2,
/// optional boxes on u. Infeasible boxes raise NumericError with the row count
/// of the certificate attached.
struct MpcBoxes {
    // empty vectors mean "absent"
    Vec u_lo, u_hi, y_lo, y_hi;
};

inline MpcSolution solve_mpc(const SystemModel& sys, const Vec& x_init, const Vec& y_r,
                             const Mat& Q, const Mat& R, const MpcBoxes& boxes = {}) {
    check_dimensions(sys);
    require(x_init.size() == sys.n(), "solve_mpc: x_init dimension mismatch");
    const Index p = sys.p(), m = sys.m();
    require(y_r.size() % p == 0, "solve_mpc: y_r length must be a multiple of p");
    const Index T = y_r.size() / p;
    require(Q.rows() == p && Q.cols() == p, "solve_mpc: Q must be p x p");
    require(R.rows() == m && R.cols() == m, "solve_mpc: R must be m x m");

    const Mat gamma = extended_observability(sys, T);
    const Mat hd = toeplitz_hd(sys, T);
    const Mat Qbar = kron(Mat::Identity(T, T), Q);
    const Mat Rbar = kron(Mat::Identity(T, T), R);

    QpProblem qp;
    qp.H = hd.transpose() * Qbar * hd + Rbar;
    qp.f = hd.transpose() * (Qbar * (gamma * x_init - y_r));

    const Index du = m * T;
    std::vector<std::pair<Mat, Vec>> rows;
    auto add_box = [&](const Mat& map, const Vec& offset, const Vec& lo, const Vec& hi, Index blk) {
        if (hi.size() > 0) {
            require(hi.size() == blk, "solve_mpc: box bound has wrong dimension");
            Vec rhs = hi.replicate(T, 1) - offset;
            rows.emplace_back(map, std::move(rhs));
        }
        if (lo.size() > 0) {
            require(lo.size() == blk, "solve_mpc: box bound has wrong dimension");
            Vec rhs = offset - lo.replicate(T, 1);
            rows.emplace_back(-map, std::move(rhs));
        }
    };
    add_box(Mat::Identity(du, du), Vec::Zero(du), boxes.u_lo, boxes.u_hi, m);
    add_box(hd, gamma * x_init, boxes.y_lo, boxes.y_hi, p);
    if (!rows.empty()) {
        Index total = 0;
        for (auto& [g, h] : rows) total += h.size();
        qp.G.resize(total, du);
        qp.h.resize(total);
        Index at = 0;
        for (auto& [g, h] : rows) {
            qp.G.middleRows(at, h.size()) = g;
            qp.h.segment(at, h.size()) = h;
            at += h.size();
        }
    } else {
        qp.G.resize(0, du);
        qp.h.resize(0);
    }

    const QpResult r = solve_qp(qp);
    if (r.status == QpStatus::Infeasible)
        throw NumericError("solve_mpc: constraint boxes are infeasible (certificate available)");
    MpcSolution out;
    out.u_f = r.z;
    out.y_hat = gamma * x_init + hd * r.z;
    out.status = r.status;
    out.iterations = r.iterations;
    return out;
}

// ---------------------------------------------------------------------------
// Riccati path for configs that specify process/measurement covariances
// (Qw, Rv) instead of K: steady-state predictor gain by fixed-point iteration.
// ---------------------------------------------------------------------------

struct RiccatiResult {
    Mat K;        // n x p predictor gain
    Mat P;        // n x n prediction-error covariance
    Mat sigma_e;  // p x p innovation covariance C P C' + Rv
    int iterations = 0;
};

inline RiccatiResult riccati_kalman_gain(const Mat& A, const Mat& C, const Mat& Qw, const Mat& Rv,
                                         double tol = 1e-13, int max_iter = 100000) {
    const Index n = A.rows(), p = C.rows();
    require(A.cols() == n && C.cols() == n, "riccati_kalman_gain: A/C dimensions");
    require(Qw.rows() == n && Qw.cols() == n, "riccati_kalman_gain: Qw must be n x n");
    require(Rv.rows() == p && Rv.cols() == p, "riccati_kalman_gain: Rv must be p x p");
    Mat P = Qw;
    RiccatiResult out;
    for (int it = 1; it <= max_iter; ++it) {
        const Mat S = C * P * C.transpose() + Rv;
        const Mat K = A * P * C.transpose() * S.inverse();
        const Mat Pn = A * P * A.transpose() + Qw - K * S * K.transpose();
        const double delta = (Pn - P).cwiseAbs().maxCoeff();
        P = 0.5 * (Pn + Pn.transpose());
        if (delta <= tol * (1.0 + P.cwiseAbs().maxCoeff())) {
            out.iterations = it;
            break;
        }
        out.iterations = it;
    }
    const Mat S = C * P * C.transpose() + Rv;
    out.K = A * P * C.transpose() * S.inverse();
    out.P = P;
    out.sigma_e = S;
    return out;
}

}  // namespace gddpc
