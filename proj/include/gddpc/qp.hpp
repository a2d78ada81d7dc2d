#pragma once

#include "gddpc/types.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace gddpc {

// ---------------------------------------------------------------------------
// Dense strictly convex QP
//
//   min  1/2 z' H z + f' z   s.t.  G z <= h
//
// solved with the Goldfarb-Idnani dual active-set method: start from the
// unconstrained minimizer (dual feasible), pull in violated constraints one
// at a time, dropping blocking ones along the way. H must be positive
// definite. Small dense problems only; every receding-horizon step is one.
// ---------------------------------------------------------------------------

enum class QpStatus { Optimal, Infeasible, MaxIter };

inline const char* to_string(QpStatus s) {
    switch (s) {
        case QpStatus::Optimal: return "optimal";
        case QpStatus::Infeasible: return "infeasible";
        case QpStatus::MaxIter: return "max-iter";
    }
    return "?";
}

struct QpProblem {
    Mat H;  // d x d symmetric positive definite
    Vec f;  // d
    Mat G;  // c x d, c may be 0
    Vec h;  // c
};

struct QpResult {
    Vec z;
    Vec lambda;                   // multipliers of G z <= h (0 on inactive rows)
    std::vector<int> active_set;  // rows active at the solution, ascending
    int iterations = 0;
    QpStatus status = QpStatus::Optimal;
    // Farkas certificate when status == Infeasible:
    // farkas >= 0, G' farkas = 0, h' farkas < 0.
    Vec farkas;
};

/// z* = -H^{-1} f via Cholesky. Throws NumericError when H is not PD.
inline Vec solve_unconstrained(const Mat& H, const Vec& f) {
    require(H.rows() == H.cols() && H.rows() == f.size(), "solve_unconstrained: dimension mismatch");
    Eigen::LLT<Mat> llt(Mat(0.5 * (H + H.transpose())));
    if (llt.info() != Eigen::Success)
        throw NumericError("solve_unconstrained: H is not positive definite");
    return -llt.solve(f);
}

namespace detail {

// Zero d[j] against d[j-1] with a Givens rotation, mirrored onto J's columns
// so that J * (any R consistent with d) is preserved.
inline void rotate_into(Vec& d, Mat& J, Index j) {
    const double a = d[j - 1], b = d[j];
    const double r = std::hypot(a, b);
    if (r <= std::numeric_limits<double>::min()) return;
    const double c = a / r, s = b / r;
    d[j - 1] = r;
    d[j] = 0.0;
    for (Index k = 0; k < J.rows(); ++k) {
        const double t1 = J(k, j - 1), t2 = J(k, j);
        J(k, j - 1) = c * t1 + s * t2;
        J(k, j) = -s * t1 + c * t2;
    }
}

/// Appends the constraint whose J-basis coordinates sit in d; returns false
/// when the new normal is numerically dependent on the active set.
inline bool add_active(Mat& R, Mat& J, Vec& d, Index& iq, double& R_norm) {
    for (Index j = d.size() - 1; j >= iq + 1; --j) rotate_into(d, J, j);
    R.col(iq).head(iq + 1) = d.head(iq + 1);
    ++iq;
    if (std::abs(d[iq - 1]) <= std::numeric_limits<double>::epsilon() * R_norm) return false;
    R_norm = std::max(R_norm, std::abs(d[iq - 1]));
    return true;
}

/// Removes active slot lpos (shifting duals, including the incoming one at
/// u[iq]); restores R's triangularity with Givens sweeps mirrored onto J.
inline void drop_active(Mat& R, Mat& J, std::vector<int>& active, Vec& u, Index& iq, Index lpos) {
    for (Index i = lpos; i < iq - 1; ++i) {
        active[static_cast<std::size_t>(i)] = active[static_cast<std::size_t>(i + 1)];
        u[i] = u[i + 1];
        R.col(i) = R.col(i + 1);
    }
    u[iq - 1] = u[iq];
    u[iq] = 0.0;
    R.col(iq - 1).setZero();
    active.pop_back();
    --iq;

    for (Index j = lpos; j < iq; ++j) {
        const double a = R(j, j), b = R(j + 1, j);
        const double g = std::hypot(a, b);
        if (g <= std::numeric_limits<double>::min()) continue;
        const double cc = a / g, ss = b / g;
        for (Index k = j; k < iq; ++k) {
            const double t1 = R(j, k), t2 = R(j + 1, k);
            R(j, k) = cc * t1 + ss * t2;
            R(j + 1, k) = -ss * t1 + cc * t2;
        }
        R(j + 1, j) = 0.0;
        for (Index k = 0; k < J.rows(); ++k) {
            const double t1 = J(k, j), t2 = J(k, j + 1);
            J(k, j) = cc * t1 + ss * t2;
            J(k, j + 1) = -ss * t1 + cc * t2;
        }
    }
}

}  // namespace detail

/// Goldfarb-Idnani solve. `warm_hint` rows are scanned for violation first,
/// which makes re-solves from a previous active set cheap; the minimizer is
/// unaffected. Ties in constraint selection go to the lowest index.
inline QpResult solve_qp(const QpProblem& prob, const std::vector<int>* warm_hint = nullptr,
                         int max_iter = -1) {
    const Index d = prob.H.rows();
    const Index c = prob.G.rows();
    require(prob.H.cols() == d && prob.f.size() == d, "solve_qp: H/f dimension mismatch");
    require(c == 0 || prob.G.cols() == d, "solve_qp: G must have d columns");
    require(prob.h.size() == c, "solve_qp: G/h row mismatch");
    require((prob.H - prob.H.transpose()).cwiseAbs().maxCoeff() <=
                1e-10 * (1.0 + prob.H.cwiseAbs().maxCoeff()),
            "solve_qp: H not symmetric");
    if (max_iter < 0) max_iter = 50 * static_cast<int>(d);

    QpResult res;
    res.lambda = Vec::Zero(c);

    Eigen::LLT<Mat> llt(Mat(0.5 * (prob.H + prob.H.transpose())));
    if (llt.info() != Eigen::Success) throw NumericError("solve_qp: H is not positive definite");
    Vec x = -llt.solve(prob.f);
    if (c == 0) {
        res.z = x;
        return res;
    }

    // J = L^{-T}: J J' = H^{-1}. Steps are computed in this basis.
    Mat J = Mat(llt.matrixL())
                .triangularView<Eigen::Lower>()
                .transpose()
                .solve(Mat::Identity(d, d));
    Mat R = Mat::Zero(d, d);
    std::vector<int> active;
    Vec u = Vec::Zero(d + 1);  // active duals; u[iq] accumulates the incoming one
    Index iq = 0;
    double R_norm = 1.0;

    std::vector<char> eligible(static_cast<std::size_t>(c), 1);
    std::vector<char> excluded(static_cast<std::size_t>(c), 0);
    std::vector<char> hinted(static_cast<std::size_t>(c), 0);
    if (warm_hint)
        for (int i : *warm_hint)
            if (i >= 0 && i < c) hinted[static_cast<std::size_t>(i)] = 1;

    const double inf = std::numeric_limits<double>::infinity();
    const double eps_feas = 1e-10 * (1.0 + prob.h.cwiseAbs().maxCoeff());
    const double eps_z = std::numeric_limits<double>::epsilon();

    Vec s(c), dvec(d), z(d), r(d);
    int iter = 0;
    bool keep_exclusions = false;

    auto pick_violated = [&]() -> int {
        int ip = -1;
        double worst = -eps_feas;
        for (int pass = warm_hint ? 0 : 1; pass < 2 && ip < 0; ++pass) {
            for (int i = 0; i < c; ++i) {
                const auto ui = static_cast<std::size_t>(i);
                if (!eligible[ui] || excluded[ui]) continue;
                if (pass == 0 && !hinted[ui]) continue;
                if (s[i] < worst) {
                    worst = s[i];
                    ip = i;
                }
            }
        }
        return ip;
    };

    while (true) {
        if (!keep_exclusions) std::fill(excluded.begin(), excluded.end(), 0);
        keep_exclusions = false;

        s = prob.h - prob.G * x;
        const int ip = pick_violated();
        if (ip < 0) break;  // primal feasible (or only degenerate rows left): done

        if (++iter > max_iter) {
            res.status = QpStatus::MaxIter;
            break;
        }

        // snapshot for degenerate-add recovery
        const Vec x_old = x;
        const Vec u_old = u;
        const Mat R_old = R;
        const Mat J_old = J;
        const std::vector<int> active_old = active;
        const Index iq_old = iq;
        const double R_norm_old = R_norm;

        const Vec np = -prob.G.row(ip).transpose();  // inward normal of row ip
        u[iq] = 0.0;

        bool settled = false;
        while (!settled) {
            // primal direction z and dual direction -r for the incoming normal
            dvec.noalias() = J.transpose() * np;
            z.setZero();
            if (iq < d) z.noalias() = J.rightCols(d - iq) * dvec.tail(d - iq);
            if (iq > 0)
                r.head(iq) =
                    R.topLeftCorner(iq, iq).triangularView<Eigen::Upper>().solve(dvec.head(iq));

            double t1 = inf;  // max step keeping duals nonnegative
            Index lpos = -1;
            for (Index k = 0; k < iq; ++k) {
                if (r[k] > 0.0 && u[k] / r[k] < t1) {
                    t1 = u[k] / r[k];
                    lpos = k;
                }
            }
            double t2 = inf;  // step making constraint ip tight
            if (z.squaredNorm() > eps_z) t2 = -(prob.h[ip] - prob.G.row(ip).dot(x)) / z.dot(np);

            const double t = std::min(t1, t2);
            if (t >= inf) {
                // np depends on the active normals with no dual slack left:
                // infeasible. Farkas vector from the dependence coefficients.
                res.status = QpStatus::Infeasible;
                res.farkas = Vec::Zero(c);
                res.farkas[ip] = 1.0;
                for (Index k = 0; k < iq; ++k)
                    res.farkas[active[static_cast<std::size_t>(k)]] = std::max(-r[k], 0.0);
                res.z = x;
                res.iterations = iter;
                res.active_set = active;
                std::sort(res.active_set.begin(), res.active_set.end());
                return res;
            }

            if (t2 >= inf) {  // dual-only step: drop the blocker, retry
                u.head(iq) -= t * r.head(iq);
                u[iq] += t;
                eligible[static_cast<std::size_t>(active[static_cast<std::size_t>(lpos)])] = 1;
                detail::drop_active(R, J, active, u, iq, lpos);
                continue;
            }

            x += t * z;
            u.head(iq) -= t * r.head(iq);
            u[iq] += t;

            if (t == t2) {  // full step: ip joins the active set
                if (detail::add_active(R, J, dvec, iq, R_norm)) {
                    active.push_back(ip);
                    eligible[static_cast<std::size_t>(ip)] = 0;
                } else {
                    excluded[static_cast<std::size_t>(ip)] = 1;
                    keep_exclusions = true;
                    x = x_old;
                    u = u_old;
                    R = R_old;
                    J = J_old;
                    active = active_old;
                    iq = iq_old;
                    R_norm = R_norm_old;
                }
                settled = true;
            } else {  // partial step: drop the blocker, keep pushing ip
                eligible[static_cast<std::size_t>(active[static_cast<std::size_t>(lpos)])] = 1;
                detail::drop_active(R, J, active, u, iq, lpos);
            }
        }
    }

    res.z = x;
    res.iterations = iter;
    for (Index k = 0; k < iq; ++k) res.lambda[active[static_cast<std::size_t>(k)]] = u[k];
    res.active_set = active;
    std::sort(res.active_set.begin(), res.active_set.end());
    return res;
}

/// KKT residuals for diagnostics/tests: stationarity, worst primal violation,
/// most negative dual, worst complementary-slackness product.
struct KktResiduals {
    double stationarity = 0, primal = 0, dual_min = 0, complementarity = 0;
};

inline KktResiduals kkt_residuals(const QpProblem& p, const QpResult& r) {
    KktResiduals out;
    Vec grad = p.H * r.z + p.f;
    if (p.G.rows() > 0) grad += p.G.transpose() * r.lambda;
    out.stationarity = grad.cwiseAbs().maxCoeff();
    if (p.G.rows() > 0) {
        const Vec slack = p.h - p.G * r.z;
        out.primal = std::max(0.0, (-slack).maxCoeff());
        out.dual_min = r.lambda.minCoeff();
        out.complementarity = (r.lambda.array() * slack.array()).abs().maxCoeff();
    }
    return out;
}

}  // namespace gddpc
