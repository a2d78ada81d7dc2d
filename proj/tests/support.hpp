#pragma once

// Shared fixtures and reference oracles for the test suites. Everything here
// is deliberately naive: brute-force loops and exhaustive enumeration that
// are easy to audit, against which the library's fast paths are checked.

#include <gddpc/gddpc.hpp>

#include <cmath>
#include <optional>
#include <vector>

namespace support {

using gddpc::Index;
using gddpc::Mat;
using gddpc::Vec;

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

inline double rel_err(const Vec& got, const Vec& want) {
    return (got - want).norm() / std::max(want.norm(), 1e-300);
}

// Flexible-transmission benchmark plant (same coefficients as the shipped
// config). K = 0: output noise only.
inline gddpc::SystemModel benchmark_plant(double sigma2 = 1.0) {
    return gddpc::make_siso_from_tf({0, 0, 0, 0.28261, 0.50666},
                                    {1, -1.41833, 1.58939, -1.31608, 0.88642}, sigma2);
}

// Benchmark plant with a Riccati-derived predictor gain, for innovation-mode
// data (H_s != I). qw = rv as in the shipped innovation config: A - KC then
// contracts fast enough that a rho = 20 window carries the predictor state.
inline gddpc::SystemModel benchmark_plant_innovation(double sigma2 = 1.0) {
    gddpc::SystemModel s = benchmark_plant(sigma2);
    const gddpc::RiccatiResult r = gddpc::riccati_kalman_gain(
        s.A, s.C, Mat::Identity(s.n(), s.n()), Mat::Identity(s.p(), s.p()));
    s.K = r.K;
    return s;
}

// Small scalar plant whose LQ factors stay tiny: handy wherever a test wants
// nonsingular factors without benchmark-sized matrices.
inline gddpc::SystemModel toy_plant() {
    gddpc::SystemModel s;
    s.A = Mat::Constant(1, 1, 0.5);
    s.B = Mat::Constant(1, 1, 1.0);
    s.C = Mat::Constant(1, 1, 1.0);
    s.D = Mat::Zero(1, 1);
    s.K = Mat::Constant(1, 1, 0.3);
    s.sigma2 = 0.1;
    return s;
}

inline gddpc::LqFactors toy_factors(Index rho = 1, Index T = 2, Index n_data = 80,
                                    uint64_t seed = 7) {
    const gddpc::DataSet d = gddpc::generate_dataset(toy_plant(), n_data, 1.0,
                                                     gddpc::NoiseMode::Innovation, 0.0, seed);
    return gddpc::lq_decompose(gddpc::build_bundle(d, rho, T));
}

// --------------------------------------------------------------------------
// Exhaustive active-set enumeration oracle for strictly convex QPs
//
//   min 1/2 z'Hz + f'z  s.t.  Gz <= h
//
// For every subset S of constraint rows, solve the equality-constrained KKT
// system; keep candidates that are primal feasible with nonnegative
// multipliers; return the one of smallest objective. Exponential in the row
// count, usable up to a dozen constraints.
// --------------------------------------------------------------------------

struct OracleSolution {
    Vec z;
    Vec lambda;   // full-length, zero off the active subset
    double objective = 0;
    bool feasible = false;
};

inline OracleSolution qp_enumeration_oracle(const gddpc::QpProblem& p, double feas_tol = 1e-9,
                                            double dual_tol = 1e-9) {
    const Index d = p.H.rows();
    const Index c = p.G.rows();
    OracleSolution best;
    best.objective = std::numeric_limits<double>::infinity();

    for (unsigned long sub = 0; sub < (1ul << c); ++sub) {
        std::vector<Index> S;
        for (Index i = 0; i < c; ++i)
            if (sub & (1ul << i)) S.push_back(i);
        const Index k = static_cast<Index>(S.size());
        if (k > d) continue;  // more active rows than dimensions: never needed

        Mat kkt = Mat::Zero(d + k, d + k);
        Vec rhs(d + k);
        kkt.topLeftCorner(d, d) = p.H;
        rhs.head(d) = -p.f;
        for (Index j = 0; j < k; ++j) {
            kkt.block(d + j, 0, 1, d) = p.G.row(S[static_cast<size_t>(j)]);
            kkt.block(0, d + j, d, 1) = p.G.row(S[static_cast<size_t>(j)]).transpose();
            rhs[d + j] = p.h[S[static_cast<size_t>(j)]];
        }
        Eigen::FullPivLU<Mat> lu(kkt);
        if (!lu.isInvertible()) continue;
        const Vec sol = lu.solve(rhs);
        const Vec z = sol.head(d);
        const Vec mult = sol.tail(k);

        if (mult.size() > 0 && mult.minCoeff() < -dual_tol) continue;
        const double scale = 1.0 + (c > 0 ? p.h.cwiseAbs().maxCoeff() : 0.0);
        if (c > 0 && (p.G * z - p.h).maxCoeff() > feas_tol * scale) continue;

        const double obj = 0.5 * z.dot(p.H * z) + p.f.dot(z);
        if (obj < best.objective) {
            best.feasible = true;
            best.objective = obj;
            best.z = z;
            best.lambda = Vec::Zero(c);
            for (Index j = 0; j < k; ++j) best.lambda[S[static_cast<size_t>(j)]] = mult[j];
        }
    }
    return best;
}

// Random strictly convex QP with box-ish random constraints; some draws are
// deliberately infeasible.
inline gddpc::QpProblem random_qp(gddpc::GaussianStream& g, Index d, Index c,
                                  bool force_feasible = false) {
    gddpc::QpProblem p;
    const Mat a = g.normal_mat(d, d);
    p.H = a * a.transpose() + 0.5 * Mat::Identity(d, d);
    p.f = g.normal_vec(d);
    p.G = g.normal_mat(c, d);
    if (force_feasible && c > 0) {
        const Vec z0 = g.normal_vec(d);  // h = G z0 + positive slack: z0 is feasible
        p.h = p.G * z0 + Vec::Constant(c, 0.1).cwiseProduct(g.normal_vec(c).cwiseAbs()) +
              Vec::Constant(c, 0.01);
    } else {
        p.h = g.normal_vec(c);
    }
    return p;
}

}  // namespace support
