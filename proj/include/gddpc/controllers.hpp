#pragma once

#include "gddpc/lq.hpp"
#include "gddpc/predictor.hpp"
#include "gddpc/qp.hpp"
#include "gddpc/types.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace gddpc {

// ---------------------------------------------------------------------------
// Step problems
//
// All three controller variants minimize
//
//   1/2 sum_k ||y_hat(k) - y_r(k)||_Q^2 + ||u(k)||_R^2   ( + beta ||gamma||^2 )
//
// over the free gamma coordinates, subject to the linear predictor and
// optional boxes. Variants:
//   None  - gamma2 free, gamma3 = 0, no penalty
//   Beta2 - gamma2 free, gamma3 = 0, penalty beta2 ||gamma2||^2
//   Beta3 - (gamma2, gamma3) free,   penalty beta3 ||gamma3||^2
// Output boxes act on y_hat0 in the first two (their printed constraint) and
// on the slack predictor y_hat in the third.
// ---------------------------------------------------------------------------

struct ControlWeights {
    Mat Q;  // p x p, positive semidefinite
    Mat R;  // m x m, positive definite
};

inline void check_weights(const ControlWeights& w, double tol = 1e-10) {
    require(w.Q.rows() == w.Q.cols() && w.R.rows() == w.R.cols(), "weights must be square");
    Eigen::SelfAdjointEigenSolver<Mat> eq(w.Q), er(w.R);
    const double qscale = 1.0 + w.Q.cwiseAbs().maxCoeff();
    require(eq.eigenvalues().minCoeff() >= -tol * qscale, "Q must be positive semidefinite");
    require(er.eigenvalues().minCoeff() > 0.0, "R must be positive definite");
}

struct BoxConstraints {
    // Empty vector = bound absent.
    Vec u_lo, u_hi, y_lo, y_hi;

    bool any() const { return u_lo.size() || u_hi.size() || y_lo.size() || y_hi.size(); }
};

inline void check_boxes(const BoxConstraints& b) {
    if (b.u_lo.size() && b.u_hi.size())
        require((b.u_lo.array() <= b.u_hi.array()).all(), "u_lo must not exceed u_hi");
    if (b.y_lo.size() && b.y_hi.size())
        require((b.y_lo.array() <= b.y_hi.array()).all(), "y_lo must not exceed y_hi");
}

enum class RegMode { None, Beta2, Beta3 };

inline const char* to_string(RegMode m) {
    switch (m) {
        case RegMode::None: return "none";
        case RegMode::Beta2: return "beta2";
        case RegMode::Beta3: return "beta3";
    }
    return "?";
}

struct StepSolution {
    Vec g2, g3;      // optimizers (g3 identically zero in None/Beta2)
    Vec u_f, y_hat_f;
    double beta_used = 0.0;
    double objective = 0.0;  // includes the constant term of the lifted cost
    QpStatus qp_status = QpStatus::Optimal;
    int qp_iterations = 0;
    std::vector<int> active_set;
};

/// One assembled step instance: quadratic data plus constraint rows, solvable
/// at any beta. H(beta) = H0 + 2 beta D with D = I (Beta2) or the gamma3
/// block indicator (Beta3).
struct StepProblem {
    RegMode mode = RegMode::None;
    Index mT = 0, pT = 0;
    Mat H0;
    Vec f0;
    double c0 = 0.0;
    Mat G;   // fixed rows; may be 0 x d
    Vec h;   // per-step offsets
    Vec a_u, a_y, y_r, g1;

    Index dim() const { return mode == RegMode::Beta3 ? mT + pT : mT; }

    Mat hessian(double beta) const {
        Mat H = H0;
        if (mode == RegMode::Beta2)
            H.diagonal().array() += 2.0 * beta;
        else if (mode == RegMode::Beta3)
            H.diagonal().tail(pT).array() += 2.0 * beta;
        return H;
    }
};

/// Per-(factors, weights, boxes, mode) cache: everything that does not depend
/// on the step's (z_init, reference window).
class StepAssembler {
  public:
    StepAssembler(const LqFactors& f, RegMode mode, const ControlWeights& w,
                  const BoxConstraints& boxes = {}, double l22_tol = 1e-12)
        : f_(&f), mode_(mode), boxes_(boxes) {
        check_weights(w);
        check_boxes(boxes);
        const Index mT = f.r2(), pT = f.r3();
        require(w.Q.rows() == f.p && w.R.rows() == f.m, "weights do not match channel counts");
        const double dmax = f.L22.diagonal().cwiseAbs().maxCoeff();
        const double dmin = f.L22.diagonal().cwiseAbs().minCoeff();
        if (dmin <= l22_tol * dmax)
            throw NumericError("step problem: L22 singular at tolerance");

        const Mat Qbar = kron(Mat::Identity(f.T, f.T), w.Q);
        const Mat Rbar = kron(Mat::Identity(f.T, f.T), w.R);
        if (mode == RegMode::Beta3) {
            map_y_.resize(pT, mT + pT);
            map_y_ << f.L32, f.L33;
            map_u_.resize(mT, mT + pT);
            map_u_ << f.L22, Mat::Zero(mT, pT);
        } else {
            map_y_ = f.L32;
            map_u_ = f.L22;
        }
        My_ = map_y_.transpose() * Qbar;  // d x pT
        Mu_ = map_u_.transpose() * Rbar;  // d x mT
        H0_ = My_ * map_y_ + Mu_ * map_u_;
        Qbar_ = Qbar;
        Rbar_ = Rbar;

        // constraint rows are step-independent; offsets h are not
        Index rows = 0;
        if (boxes.u_hi.size()) rows += mT;
        if (boxes.u_lo.size()) rows += mT;
        if (boxes.y_hi.size()) rows += pT;
        if (boxes.y_lo.size()) rows += pT;
        G_.resize(rows, H0_.cols());
        Index at = 0;
        if (boxes.u_hi.size()) { G_.middleRows(at, mT) = map_u_; at += mT; }
        if (boxes.u_lo.size()) { G_.middleRows(at, mT) = -map_u_; at += mT; }
        if (boxes.y_hi.size()) { G_.middleRows(at, pT) = map_y_; at += pT; }
        if (boxes.y_lo.size()) { G_.middleRows(at, pT) = -map_y_; at += pT; }
    }

    const LqFactors& factors() const { return *f_; }
    RegMode mode() const { return mode_; }

    /// Assemble the step instance for a given initial condition and reference.
    StepProblem make(const Vec& g1, const Vec& y_r) const {
        const LqFactors& f = *f_;
        require(g1.size() == f.r1(), "step problem: gamma1 has wrong length");
        require(y_r.size() == f.r3(), "step problem: reference window has wrong length");
        StepProblem s;
        s.mode = mode_;
        s.mT = f.r2();
        s.pT = f.r3();
        s.g1 = g1;
        s.y_r = y_r;
        s.a_u = f.L21 * g1;
        s.a_y = f.L31 * g1;
        const Vec ey = s.a_y - y_r;
        s.H0 = H0_;
        s.f0 = My_ * ey + Mu_ * s.a_u;
        s.c0 = 0.5 * (ey.dot(Qbar_ * ey) + s.a_u.dot(Rbar_ * s.a_u));
        s.G = G_;
        s.h.resize(G_.rows());
        Index at = 0;
        if (boxes_.u_hi.size()) { s.h.segment(at, s.mT) = boxes_.u_hi.replicate(f.T, 1) - s.a_u; at += s.mT; }
        if (boxes_.u_lo.size()) { s.h.segment(at, s.mT) = s.a_u - boxes_.u_lo.replicate(f.T, 1); at += s.mT; }
        if (boxes_.y_hi.size()) { s.h.segment(at, s.pT) = boxes_.y_hi.replicate(f.T, 1) - s.a_y; at += s.pT; }
        if (boxes_.y_lo.size()) { s.h.segment(at, s.pT) = s.a_y - boxes_.y_lo.replicate(f.T, 1); at += s.pT; }
        return s;
    }

    /// Reusable Cholesky of H(beta) for the unconstrained fixed-beta path.
    Eigen::LLT<Mat> factorize(double beta) const {
        Mat H = H0_;
        if (mode_ == RegMode::Beta2)
            H.diagonal().array() += 2.0 * beta;
        else if (mode_ == RegMode::Beta3)
            H.diagonal().tail(f_->r3()).array() += 2.0 * beta;
        Eigen::LLT<Mat> llt(H);
        if (llt.info() != Eigen::Success)
            throw NumericError("step problem: Hessian not positive definite at beta");
        return llt;
    }

  private:
    const LqFactors* f_;
    RegMode mode_;
    BoxConstraints boxes_;
    Mat map_y_, map_u_, My_, Mu_, H0_, Qbar_, Rbar_, G_;
};

namespace detail {

inline StepSolution finish_step(const StepProblem& s, const LqFactors& f, Vec z, double beta,
                                QpStatus status, int iters, std::vector<int> active) {
    StepSolution out;
    out.beta_used = beta;
    out.qp_status = status;
    out.qp_iterations = iters;
    out.active_set = std::move(active);
    if (s.mode == RegMode::Beta3) {
        out.g2 = z.head(s.mT);
        out.g3 = z.tail(s.pT);
    } else {
        out.g2 = std::move(z);
        out.g3 = Vec::Zero(s.pT);
    }
    out.u_f = s.a_u + f.L22 * out.g2;
    out.y_hat_f = s.a_y + f.L32 * out.g2;
    if (s.mode == RegMode::Beta3) out.y_hat_f += f.L33 * out.g3;
    Vec zz(s.dim());
    if (s.mode == RegMode::Beta3)
        zz << out.g2, out.g3;
    else
        zz = out.g2;
    const double pen = s.mode == RegMode::Beta3 ? out.g3.squaredNorm()
                       : s.mode == RegMode::Beta2 ? out.g2.squaredNorm()
                                                  : 0.0;
    out.objective = 0.5 * zz.dot(s.H0 * zz) + s.f0.dot(zz) + s.c0 + beta * pen;
    return out;
}

}  // namespace detail

/// Solve the assembled instance at a given beta. Unconstrained instances go
/// through a plain Cholesky; boxed ones through the active-set QP, warmable.
inline StepSolution solve_step(const StepProblem& s, const LqFactors& f, double beta,
                               const std::vector<int>* warm = nullptr) {
    require(beta >= 0.0, "solve_step: beta must be nonnegative");
    if (s.G.rows() == 0) {
        Vec z = solve_unconstrained(s.hessian(beta), s.f0);
        return detail::finish_step(s, f, std::move(z), beta, QpStatus::Optimal, 0, {});
    }
    QpProblem qp{s.hessian(beta), s.f0, s.G, s.h};
    QpResult r = solve_qp(qp, warm);
    return detail::finish_step(s, f, std::move(r.z), beta, r.status, r.iterations,
                               std::move(r.active_set));
}

/// Unconstrained fixed-beta fast path using a prefactorized Hessian.
inline StepSolution solve_step_cached(const StepProblem& s, const LqFactors& f,
                                      const Eigen::LLT<Mat>& llt, double beta) {
    require(s.G.rows() == 0, "solve_step_cached: boxed instances need solve_step");
    Vec z = -llt.solve(s.f0);
    return detail::finish_step(s, f, std::move(z), beta, QpStatus::Optimal, 0, {});
}

// ---------------------------------------------------------------------------
// Named variants
// ---------------------------------------------------------------------------

inline StepSolution solve_unregularized(const LqFactors& f, const Vec& g1, const Vec& y_r,
                                        const ControlWeights& w, const BoxConstraints& cons = {}) {
    StepSolution s = solve_step(StepAssembler(f, RegMode::None, w, cons).make(g1, y_r), f, 0.0);
    if (s.qp_status == QpStatus::Infeasible)
        throw NumericError("solve_unregularized: boxes infeasible (Farkas certificate holds)");
    return s;
}

inline StepSolution solve_beta2(const LqFactors& f, const Vec& g1, const Vec& y_r,
                                const ControlWeights& w, const BoxConstraints& cons, double beta2) {
    require(beta2 >= 0.0, "solve_beta2: beta2 must be nonnegative");
    StepSolution s = solve_step(StepAssembler(f, RegMode::Beta2, w, cons).make(g1, y_r), f, beta2);
    if (s.qp_status == QpStatus::Infeasible)
        throw NumericError("solve_beta2: boxes infeasible (Farkas certificate holds)");
    return s;
}

inline StepSolution solve_beta3(const LqFactors& f, const Vec& g1, const Vec& y_r,
                                const ControlWeights& w, const BoxConstraints& cons, double beta3) {
    require(beta3 >= 0.0, "solve_beta3: beta3 must be nonnegative");
    StepSolution s = solve_step(StepAssembler(f, RegMode::Beta3, w, cons).make(g1, y_r), f, beta3);
    if (s.qp_status == QpStatus::Infeasible)
        throw NumericError("solve_beta3: boxes infeasible (Farkas certificate holds)");
    return s;
}

}  // namespace gddpc
